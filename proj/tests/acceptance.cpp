// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//   acceptance --awbtree PATH [--suite PATH ...] [--only N ...]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <unistd.h>

#include <CLI11.hpp>

#include "support.hpp"

using namespace awb;
namespace fs = std::filesystem;

namespace
{

struct Outcome
{
    bool pass = true;
    std::vector<std::string> notes;

    void require( bool ok, const std::string &what )
    {
        pass = pass && ok;
        notes.push_back( std::string( ok ? "" : "FAILED " ) + what );
    }
};

std::string fmt( double v, int digits = 6 )
{
    char buf[64];
    std::snprintf( buf, sizeof buf, "%.*g", digits, v );
    return buf;
}

// 1. Surrogate-failure angles.
Outcome surrogate_angles()
{
    Outcome o;
    const DistanceMeasure rec;
    const auto e = test::third();
    const double a = 0.05;
    const double d1 = distance( rec, normalize( 1.0 / 3 + a, 1.0 / 3 + a, 1.0 / 3 - 2 * a ), e );
    const double d2 = distance( rec, normalize( 1.0 / 3 + a, 1.0 / 3 - a, 1.0 / 3 ), e );
    o.require( std::abs( d1 - 11.977 ) <= 1e-3, "e1 " + fmt( d1 ) + " vs 11.977" );
    o.require( std::abs( d2 - 6.983 ) <= 1e-3, "e2 " + fmt( d2 ) + " vs 6.983" );
    return o;
}

// 2. Leaf minimizers on the three ground truths, Euclidean measure.
Outcome three_truths()
{
    Outcome o;
    const DistanceMeasure euc( MeasureKind::Euclidean );
    const auto t = test::triple();
    const auto approx = approx_minimize( t, euc );
    const auto mean = mean_minimize( t, euc );
    const auto exact = exact_minimize( t, euc );

    // Scale check: the independent summation oracle, x100, at the median.
    const double oracle_cost = static_cast<double>( test::oracle::sum( MeasureKind::Euclidean, approx.estimate, t ) );
    o.require( std::abs( oracle_cost * 100 - 3.5134 ) <= 1e-3, "scale x100 confirmed (" + fmt( oracle_cost * 100 ) + ")" );

    const std::array<double, 3> want_approx{ 0.4246, 0.4500, 0.1254 };
    double worst = 0;
    for ( std::size_t c = 0; c < 3; ++c )
    {
        worst = std::max( worst, std::abs( approx.estimate[c] - want_approx[c] ) );
    }
    o.require( worst <= 1e-4, "approx estimate off by " + fmt( worst, 3 ) );
    o.require( std::abs( approx.cost * 100 - 3.5134 ) <= 1e-3, "approx cost " + fmt( approx.cost * 100 ) + " vs 3.5134" );
    o.require( std::abs( mean.cost * 100 - 3.7619 ) <= 1e-3, "mean cost " + fmt( mean.cost * 100 ) + " vs 3.7619" );

    const std::array<double, 3> want_exact{ 0.4228, 0.4487, 0.1285 };
    worst = 0;
    for ( std::size_t c = 0; c < 3; ++c )
    {
        worst = std::max( worst, std::abs( exact.estimate[c] - want_exact[c] ) );
    }
    o.require( worst <= 2e-3, "exact estimate off by " + fmt( worst, 3 ) );
    o.require( exact.cost * 100 <= 3.4049 + 1e-3, "exact cost " + fmt( exact.cost * 100 ) + " <= 3.4059" );
    return o;
}

std::vector<Chromaticity> synthetic_truths( std::size_t n, std::uint64_t seed )
{
    SynthParams p;
    p.n = n;
    p.seed = seed;
    return make_synthetic( p ).truths;
}

// 3. Median relative error of the approximate minimizer.
Outcome minimizer_study()
{
    Outcome o;
    const auto pool = synthetic_truths( 500, 101 );
    StudyParams p;
    p.samples = 1000;
    p.max_size = 200;
    p.seed = 7;
    for ( auto k: all_measure_kinds )
    {
        const auto samples = approx_error_study( pool, DistanceMeasure( k ), p );
        const auto sum = summarize_study( samples );
        o.require(
            samples.size() >= 1000 && sum.median < 0.01,
            std::string( measure_name( k ) ) + " median " + fmt( sum.median * 100, 3 ) + "%" );
    }
    return o;
}

// Independent numerical minimizer: coarse grid over the targets' box, then
// compass search from the best few points.
double oracle_min_cost( const DistanceMeasure &m, const std::vector<Chromaticity> &targets )
{
    double lo_r = 1, hi_r = 0, lo_g = 1, hi_g = 0;
    for ( const auto &t: targets )
    {
        lo_r = std::min( lo_r, t.r() );
        hi_r = std::max( hi_r, t.r() );
        lo_g = std::min( lo_g, t.g() );
        hi_g = std::max( hi_g, t.g() );
    }
    lo_r = std::max( 1e-6, lo_r - 0.02 );
    lo_g = std::max( 1e-6, lo_g - 0.02 );
    hi_r += 0.02;
    hi_g += 0.02;
    auto cost = [&]( double r, double g ) {
        if ( r < 1e-6 || g < 1e-6 || r + g > 1 - 1e-6 )
        {
            return std::numeric_limits<double>::infinity();
        }
        const auto e = Chromaticity::from_components( r, g, 1 - r - g );
        return static_cast<double>( test::oracle::sum( m.kind(), e, targets ) );
    };
    const int n = 41;
    std::vector<std::tuple<double, double, double>> grid;
    for ( int i = 0; i < n; ++i )
    {
        for ( int j = 0; j < n; ++j )
        {
            const double r = lo_r + ( hi_r - lo_r ) * i / ( n - 1 );
            const double g = lo_g + ( hi_g - lo_g ) * j / ( n - 1 );
            grid.emplace_back( cost( r, g ), r, g );
        }
    }
    for ( const auto &t: targets )
    {
        grid.emplace_back( cost( t.r(), t.g() ), t.r(), t.g() );
    }
    std::sort( grid.begin(), grid.end() );
    double best = std::get<0>( grid.front() );
    for ( std::size_t s = 0; s < 6 && s < grid.size(); ++s )
    {
        auto [c, r, g] = grid[s];
        double step = std::max( hi_r - lo_r, hi_g - lo_g ) / ( n - 1 );
        while ( step > 1e-9 )
        {
            bool moved = false;
            for ( const auto &[dr, dg]: { std::pair{ 1, 0 }, { -1, 0 }, { 0, 1 }, { 0, -1 }, { 1, 1 }, { -1, -1 }, { 1, -1 }, { -1, 1 } } )
            {
                const double v = cost( r + dr * step, g + dg * step );
                if ( v < c )
                {
                    c = v;
                    r += dr * step;
                    g += dg * step;
                    moved = true;
                }
            }
            if ( !moved )
            {
                step /= 2;
            }
        }
        best = std::min( best, c );
    }
    return best;
}

// 4. Root split against exhaustive enumeration with an independent minimizer.
Outcome split_fidelity()
{
    Outcome o;
    Rng rng( 404 );
    FitParams params;
    params.rand_pct = 0.0;
    params.min_parent_size = 2;
    params.min_leaf_size = 1;
    params.error_threshold = 0.0;
    const std::size_t datasets = 120;
    std::size_t agree = 0, exact_match = 0, no_split = 0;
    std::string first_miss;
    for ( std::size_t d = 0; d < datasets; ++d )
    {
        const auto kind = all_measure_kinds[d % 5];
        const DistanceMeasure m( kind );
        const std::size_t n = 4 + rng.uniform_index( 9 );
        const std::size_t feats = 1 + rng.uniform_index( 3 );
        const auto data = test::random_examples( rng, n, feats, d % 3 == 0 ? 5 : 0 );
        Rng fit_rng( d );
        const auto ours = best_split_mv( data, m, params, fit_rng, LeafMinimizer::Exact );

        std::vector<Chromaticity> all;
        for ( const auto &e: data )
        {
            all.push_back( e.truth );
        }
        const double node_cost = oracle_min_cost( m, all );

        // All (j, p): thresholds halfway between consecutive distinct values.
        struct Cand
        {
            std::size_t j;
            double p;
            double cost;
        };
        std::vector<Cand> cands;
        for ( std::size_t j = 0; j < feats; ++j )
        {
            std::set<double> values;
            for ( const auto &e: data )
            {
                values.insert( e.features[j] );
            }
            for ( auto it = values.begin(); std::next( it ) != values.end(); ++it )
            {
                const double p = ( *it + *std::next( it ) ) / 2;
                std::vector<Chromaticity> left, right;
                for ( const auto &e: data )
                {
                    ( e.features[j] <= p ? left : right ).push_back( e.truth );
                }
                cands.push_back( { j, p, oracle_min_cost( m, left ) + oracle_min_cost( m, right ) } );
            }
        }
        const double tol = 1e-6 * std::max( 1.0, node_cost );
        double best = std::numeric_limits<double>::infinity();
        for ( const auto &c: cands )
        {
            best = std::min( best, c.cost );
        }

        bool ok = false;
        if ( !ours )
        {
            // No split lowers the node cost.
            ok = cands.empty() || best >= node_cost - tol;
            ++no_split;
        }
        else
        {
            const Cand *mine = nullptr;
            const Cand *first_best = nullptr;
            for ( const auto &c: cands )
            {
                if ( c.j == ours->feature && c.p == ours->threshold )
                {
                    mine = &c;
                }
                if ( !first_best && c.cost <= best + tol )
                {
                    first_best = &c;
                }
            }
            ok = mine && mine->cost <= best + tol && mine->cost < node_cost + tol;
            exact_match += mine && mine == first_best ? 1 : 0;
        }
        agree += ok ? 1 : 0;
        if ( !ok && first_miss.empty() )
        {
            first_miss = "dataset " + std::to_string( d ) + " (" + std::string( measure_name( kind ) ) + ")";
        }
    }
    o.require(
        agree == datasets,
        std::to_string( agree ) + "/" + std::to_string( datasets ) + " agree (" + std::to_string( exact_match ) +
            " identical first minimum, " + std::to_string( no_split ) + " no-split)" +
            ( first_miss.empty() ? "" : ", first miss " + first_miss ) );
    return o;
}

// 5. Multivariate vs per-channel baseline on synthetic data.
Outcome synthetic_superiority()
{
    Outcome o;
    std::size_t wins = 0;
    const std::uint64_t seeds[] = { 1, 2, 3, 4, 5 };
    std::string detail;
    for ( auto seed: seeds )
    {
        SynthParams sp;
        sp.n = 500;
        sp.seed = seed;
        const auto data = make_synthetic( sp ).labeled();
        CvConfig cfg;
        cfg.num_trees = 30;
        cfg.plan = { 10, 1, seed };
        const double mv = cross_validate( data, cfg ).summary( MeasureKind::Recovery ).median;
        cfg.method = Method::Baseline;
        const double base = cross_validate( data, cfg ).summary( MeasureKind::Recovery ).median;
        wins += mv <= base ? 1 : 0;
        detail += " " + fmt( mv, 4 ) + "/" + fmt( base, 4 );
    }
    o.require( wins >= 4, std::to_string( wins ) + "/5 wins, median mv/baseline:" + detail );
    return o;
}

int run_command( const std::string &cmd )
{
    const int rc = std::system( cmd.c_str() );
    return WIFEXITED( rc ) ? WEXITSTATUS( rc ) : -1;
}

std::string quote( const std::string &s )
{
    return "'" + s + "'";
}

// 6. Property suites of the unit tests.
Outcome invariant_suites( const std::vector<std::string> &suites )
{
    Outcome o;
    if ( suites.empty() )
    {
        o.require( false, "no suites given" );
    }
    for ( const auto &s: suites )
    {
        const int rc = run_command( quote( s ) + " '[property]' --rng-seed 1 > /dev/null 2>&1" );
        o.require( rc == 0, fs::path( s ).filename().string() + ( rc == 0 ? " ok" : " exit " + std::to_string( rc ) ) );
    }
    return o;
}

bool same_file( const fs::path &a, const fs::path &b )
{
    try
    {
        return detail::read_text( a.string() ) == detail::read_text( b.string() );
    }
    catch ( const Error & )
    {
        return false;
    }
}

// 7. Byte-identical outputs across process invocations.
Outcome determinism( const std::string &awbtree, const fs::path &work )
{
    Outcome o;
    const auto exe = quote( awbtree );
    const auto data = ( work / "data.csv" ).string();
    o.require( run_command( exe + " synth --n 200 --seed 11 --out " + quote( data ) ) == 0, "synth" );
    for ( const std::string flags: { "--measure recovery", "--baseline" } )
    {
        for ( int i = 0; i < 2; ++i )
        {
            run_command(
                exe + " train --data " + quote( data ) + " " + flags + " --trees 10 --seed 5 --out " +
                quote( ( work / ( "model" + std::to_string( i ) + ".json" ) ).string() ) );
            run_command(
                exe + " crossval --data " + quote( data ) + " " + flags + " --trees 5 --folds 5 --runs 2 --seed 5 --out " +
                quote( ( work / ( "cv" + std::to_string( i ) + ".csv" ) ).string() ) );
        }
        o.require( same_file( work / "model0.json", work / "model1.json" ), "train " + flags );
        o.require( same_file( work / "cv0.csv", work / "cv1.csv" ), "crossval " + flags );
    }
    return o;
}

// 8. Node-count report.
Outcome size_report( const std::string &awbtree, const fs::path &work )
{
    Outcome o;
    const auto exe = quote( awbtree );
    const auto data = ( work / "data.csv" ).string();
    const auto model = ( work / "size_model.json" ).string();
    const auto out = ( work / "size.csv" ).string();
    run_command( exe + " synth --n 300 --seed 12 --out " + quote( data ) );
    run_command( exe + " train --data " + quote( data ) + " --trees 30 --seed 1 --out " + quote( model ) );
    o.require( run_command( exe + " size --model " + quote( model ) + " --out " + quote( out ) ) == 0, "size ran" );
    std::string text;
    try
    {
        text = detail::read_text( out );
    }
    catch ( const Error & )
    {
    }
    std::istringstream in( text );
    std::string header, row;
    std::getline( in, header );
    std::getline( in, row );
    o.require( header == "method,measure,tree,ensemble", "header '" + header + "'" );
    o.require( row.rfind( "multivariate,recovery,", 0 ) == 0, "row '" + row + "'" );
    return o;
}

} // namespace

int main( int argc, char **argv )
{
    CLI::App app( "acceptance suite" );
    std::string awbtree;
    std::vector<std::string> suites;
    std::vector<int> only;
    app.add_option( "--awbtree", awbtree, "awbtree executable" )->required();
    app.add_option( "--suite", suites, "Unit test binaries whose property tests must pass" );
    app.add_option( "--only", only, "Run only these criteria" );
    CLI11_PARSE( app, argc, argv );

    const auto work = fs::temp_directory_path() / ( "awb_acceptance_" + std::to_string( ::getpid() ) );
    fs::create_directories( work );

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        { "recovery angles around gray", surrogate_angles },
        { "leaf minimizers on three truths", three_truths },
        { "approximate minimizer within 1% (median)", minimizer_study },
        { "root split matches exhaustive enumeration", split_fidelity },
        { "multivariate beats baseline on synthetic data", synthetic_superiority },
        { "invariant suites", [&] { return invariant_suites( suites ); } },
        { "determinism across invocations", [&] { return determinism( awbtree, work ); } },
        { "tree size report", [&] { return size_report( awbtree, work ); } },
    };

    int failures = 0;
    for ( std::size_t i = 0; i < criteria.size(); ++i )
    {
        const int id = static_cast<int>( i + 1 );
        if ( !only.empty() && std::find( only.begin(), only.end(), id ) == only.end() )
        {
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = criteria[i].second();
        }
        catch ( const std::exception &e )
        {
            o.require( false, std::string( "exception: " ) + e.what() );
        }
        const double secs = std::chrono::duration<double>( std::chrono::steady_clock::now() - start ).count();
        std::string notes;
        for ( const auto &n: o.notes )
        {
            notes += ( notes.empty() ? "" : "; " ) + n;
        }
        std::cout << ( o.pass ? "PASS" : "FAIL" ) << " " << id << " " << criteria[i].first << " [" << notes << "] ("
                  << fmt( secs, 3 ) << " s)" << std::endl;
        failures += o.pass ? 0 : 1;
    }
    fs::remove_all( work );
    return failures == 0 ? 0 : 1;
}
