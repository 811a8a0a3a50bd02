// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#include <algorithm>
#include <limits>
#include <set>

#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace awb;
using Catch::Approx;
namespace oracle = awb::test::oracle;

namespace
{

const DistanceMeasure recovery( MeasureKind::Recovery );

struct BruteSplit
{
    std::size_t feature;
    double threshold;
    double cost;
};

std::vector<double> distinct_sorted( std::span<const LabeledExample> ex, std::size_t j )
{
    std::set<double> s;
    for ( const auto &e: ex )
    {
        s.insert( e.features[j] );
    }
    return { s.begin(), s.end() };
}

// Median by full sort per component, then normalize, then summed distance.
double approx_cost_oracle( const std::vector<Chromaticity> &t, MeasureKind k )
{
    std::array<double, 3> med{};
    for ( int c = 0; c < 3; ++c )
    {
        std::vector<double> v;
        for ( const auto &x: t )
        {
            v.push_back( x[c] );
        }
        std::sort( v.begin(), v.end() );
        const auto n = v.size();
        med[c] = n % 2 ? v[n / 2] : ( v[n / 2 - 1] + v[n / 2] ) / 2;
    }
    const double s = med[0] + med[1] + med[2];
    const auto est = Chromaticity::from_components( med[0] / s, med[1] / s, 1.0 - med[0] / s - med[1] / s );
    return static_cast<double>( oracle::sum( k, est, t ) );
}

// Every (j, p) with its summed child cost, in (j, p) order.
template <typename CostFn>
std::vector<BruteSplit> all_splits( std::span<const LabeledExample> ex, CostFn side_cost )
{
    std::vector<BruteSplit> out;
    for ( std::size_t j = 0; j < ex[0].features.size(); ++j )
    {
        const auto vals = distinct_sorted( ex, j );
        for ( std::size_t v = 0; v + 1 < vals.size(); ++v )
        {
            const double p = ( vals[v] + vals[v + 1] ) / 2;
            std::vector<Chromaticity> l, r;
            for ( const auto &e: ex )
            {
                ( e.features[j] <= p ? l : r ).push_back( e.truth );
            }
            out.push_back( { j, p, side_cost( l ) + side_cost( r ) } );
        }
    }
    return out;
}

// Cost of every node of a fitted tree, recomputed from the examples reaching it.
std::vector<std::vector<std::size_t>> members( const MvTree &tree, std::span<const LabeledExample> ex )
{
    std::vector<std::vector<std::size_t>> at( tree.node_count() );
    for ( std::size_t i = 0; i < ex.size(); ++i )
    {
        std::size_t n = 0;
        at[n].push_back( i );
        while ( !tree.nodes()[n].is_leaf() )
        {
            const auto &node = tree.nodes()[n];
            n = static_cast<std::size_t>( ex[i].features[node.feature] <= node.threshold ? node.left : node.right );
            at[n].push_back( i );
        }
    }
    return at;
}

std::vector<Chromaticity> truths_at( std::span<const LabeledExample> ex, const std::vector<std::size_t> &idx )
{
    std::vector<Chromaticity> t;
    for ( auto i: idx )
    {
        t.push_back( ex[i].truth );
    }
    return t;
}

} // namespace

TEST_CASE( "enumerate_splits uses midpoints of distinct values", "[tree]" )
{
    auto ex_of = []( std::vector<double> xs ) {
        std::vector<LabeledExample> ex;
        for ( double x: xs )
        {
            ex.push_back( { { x }, test::third() } );
        }
        return ex;
    };
    {
        const auto s = enumerate_splits( ex_of( { 0.1, 0.3 } ), 0 );
        REQUIRE( s.size() == 1 );
        CHECK( s[0].threshold == Approx( 0.2 ) );
        CHECK( s[0].left == std::vector<std::size_t>{ 0 } );
        CHECK( s[0].right == std::vector<std::size_t>{ 1 } );
    }
    CHECK( enumerate_splits( ex_of( { 0.5, 0.5, 0.5 } ), 0 ).empty() );
    {
        const auto s = enumerate_splits( ex_of( { 0.4, 0.1, 0.2 } ), 0 );
        REQUIRE( s.size() == 2 );
        CHECK( s[0].threshold == Approx( 0.15 ) );
        CHECK( s[0].left == std::vector<std::size_t>{ 1 } );
        CHECK( s[1].threshold == Approx( 0.3 ) );
        CHECK( s[1].left == std::vector<std::size_t>{ 1, 2 } );
        CHECK( s[1].right == std::vector<std::size_t>{ 0 } );
    }
    // min_leaf_size 2 leaves only the middle cut of four values.
    CHECK( enumerate_splits( ex_of( { 0.1, 0.2, 0.3, 0.4 } ), 0, 2 ).size() == 1 );
}

TEST_CASE( "enumerate_splits partitions by x <= p", "[tree][property]" )
{
    Rng rng( 31 );
    for ( int i = 0; i < 1000; ++i )
    {
        const auto ex = test::random_examples( rng, 2 + rng.uniform_index( 20 ), 2, 6 );
        const auto j = rng.uniform_index( 2 );
        const auto splits = enumerate_splits( ex, j );
        CHECK( splits.size() + 1 == std::max<std::size_t>( 1, distinct_sorted( ex, j ).size() ) );
        for ( const auto &s: splits )
        {
            CHECK( s.left.size() + s.right.size() == ex.size() );
            for ( auto k: s.left )
            {
                CHECK( ex[k].features[j] <= s.threshold );
            }
            for ( auto k: s.right )
            {
                CHECK( ex[k].features[j] > s.threshold );
            }
        }
    }
}

TEST_CASE( "two separable examples split at zero cost", "[tree]" )
{
    const std::vector<LabeledExample> ex{
        { { 0.1 }, normalize( 0.45, 0.35, 0.2 ) }, { { 0.9 }, normalize( 0.25, 0.35, 0.4 ) } };
    FitParams p;
    p.rand_pct = 0;
    Rng rng( 1 );
    const auto s = best_split_mv( ex, recovery, p, rng );
    REQUIRE( s );
    CHECK( s->feature == 0 );
    CHECK( s->threshold == Approx( 0.5 ) );
    CHECK( s->cost == 0.0 );
}

TEST_CASE( "best split with no randomization matches brute force", "[tree][property]" )
{
    Rng rng( 32 );
    FitParams p;
    p.rand_pct = 0;
    int compared = 0;
    for ( int i = 0; i < 300; ++i )
    {
        const auto kind = all_measure_kinds[i % 5];
        const DistanceMeasure m( kind );
        const auto ex = test::random_examples( rng, 20, 3, i % 2 ? 8 : 0 );
        const auto brute = all_splits( ex, [&]( const std::vector<Chromaticity> &t ) { return approx_cost_oracle( t, kind ); } );
        const double node_cost = approx_cost_oracle( truths_at( ex, detail::iota_indices( ex.size() ) ), kind );
        double best = std::numeric_limits<double>::infinity();
        for ( const auto &b: brute )
        {
            best = std::min( best, b.cost );
        }
        Rng r2( 5 );
        const auto got = best_split_mv( ex, m, p, r2 );
        if ( !got )
        {
            CHECK( best >= node_cost - 1e-9 );
            continue;
        }
        ++compared;
        CHECK( got->cost == Approx( best ).margin( 1e-9 ) );
        // First minimum in (j, p) order, unless a near tie makes the order ambiguous.
        const auto first = std::find_if( brute.begin(), brute.end(), [&]( const BruteSplit &b ) { return b.cost <= best + 1e-9; } );
        const bool near_tie = std::count_if( brute.begin(), brute.end(), [&]( const BruteSplit &b ) { return b.cost <= best + 1e-9; } ) > 1;
        if ( !near_tie )
        {
            CHECK( got->feature == first->feature );
            CHECK( got->threshold == Approx( first->threshold ).margin( 1e-15 ) );
        }
    }
    CHECK( compared > 250 );
}

TEST_CASE( "randomized split stays within the margin", "[tree][property]" )
{
    Rng rng( 33 );
    FitParams p;
    p.rand_pct = 10;
    for ( int i = 0; i < 1000; ++i )
    {
        const auto ex = test::random_examples( rng, 12, 2 );
        const auto brute = all_splits( ex, []( const std::vector<Chromaticity> &t ) { return approx_cost_oracle( t, MeasureKind::Recovery ); } );
        double best = std::numeric_limits<double>::infinity();
        for ( const auto &b: brute )
        {
            best = std::min( best, b.cost );
        }
        Rng r2( static_cast<std::uint64_t>( i ) );
        const auto got = best_split_mv( ex, recovery, p, r2 );
        if ( got )
        {
            CHECK( got->cost <= best * 1.1 + 1e-9 );
        }
    }
}

TEST_CASE( "fit_mv with identical truths gives one leaf", "[tree]" )
{
    Rng rng( 34 );
    auto ex = test::random_examples( rng, 30, 4 );
    const auto v = normalize( 0.4, 0.4, 0.2 );
    for ( auto &e: ex )
    {
        e.truth = v;
    }
    const auto t = fit_mv( ex, recovery, FitParams{}, rng );
    CHECK( t.node_count() == 1 );
    CHECK( t.root().count == 30 );
    CHECK( t.root().estimate.r() == Approx( 0.4 ).margin( 1e-12 ) );
}

TEST_CASE( "fit_mv on one example", "[tree]" )
{
    const std::vector<LabeledExample> ex{ { { 0.2, 0.3 }, normalize( 0.3, 0.4, 0.3 ) } };
    Rng rng( 1 );
    const auto t = fit_mv( ex, recovery, FitParams{}, rng );
    CHECK( t.node_count() == 1 );
    CHECK( t.root().count == 1 );
    CHECK_THROWS_AS( fit_mv( std::span<const LabeledExample>{}, recovery, FitParams{}, rng ), Error );
}

TEST_CASE( "fit_mv separates two clusters at depth one", "[tree]" )
{
    Rng rng( 35 );
    const auto a = normalize( 0.45, 0.35, 0.20 );
    const auto b = normalize( 0.25, 0.35, 0.40 );
    std::vector<LabeledExample> ex;
    for ( int i = 0; i < 10; ++i )
    {
        ex.push_back( { { 0.04 * i, rng.uniform01() }, a } );
        ex.push_back( { { 0.6 + 0.04 * i, rng.uniform01() }, b } );
    }
    // Root: median r of ten 0.45 and ten 0.25 is 0.35; the only zero-cost
    // split is feature 0 between 0.36 and 0.6.
    const auto t = fit_mv( ex, recovery, FitParams{}, rng );
    REQUIRE( t.node_count() == 3 );
    CHECK( t.depth() == 1 );
    CHECK( t.root().feature == 0 );
    CHECK( t.root().threshold == Approx( 0.48 ) );
    const auto &l = t.nodes()[t.root().left];
    const auto &r = t.nodes()[t.root().right];
    CHECK( l.estimate == a );
    CHECK( r.estimate == b );
    CHECK( l.count == 10 );
    CHECK( r.count == 10 );

    const std::vector<double> lo{ 0.3, 0.5 }, hi{ 0.7, 0.5 };
    CHECK( predict_mv( t, lo ) == a );
    CHECK( predict_mv( t, hi ) == b );
    const std::vector<double> wrong{ 0.3 };
    CHECK_THROWS_AS( predict_mv( t, wrong ), Error );
}

TEST_CASE( "hand-built tree follows the branch rule", "[tree]" )
{
    // Feature order: f_r1, f_g1, f_r2, f_g2, f_r3, f_g3, f_r4, f_g4.
    using N = MvTree::node_type;
    const auto leaf8 = normalize( 0.2503, 0.4779, 0.2718 );
    const auto other = test::third();
    const std::vector<N> nodes{
        { 0, 0.3297, 1, 6, other, 100 },
        { 2, 0.2658, 2, 3, other, 40 },
        { -1, 0, -1, -1, other, 20 },
        { 4, 0.2840, 4, 5, other, 20 },
        { -1, 0, -1, -1, leaf8, 8 },
        { -1, 0, -1, -1, other, 12 },
        { -1, 0, -1, -1, other, 60 },
    };
    const MvTree t( nodes, 8 );
    CHECK( t.depth() == 3 );
    CHECK( t.leaf_count() == 4 );
    const std::vector<double> x{ 0.30, 0.4, 0.27, 0.4, 0.28, 0.4, 0.3, 0.4 };
    const auto p = predict_mv( t, x );
    CHECK( p.r() == Approx( 0.2503 ).margin( 1e-12 ) );
    CHECK( p.g() == Approx( 0.4779 ).margin( 1e-12 ) );
    CHECK( p.b() == Approx( 0.2718 ).margin( 1e-12 ) );
    // Exactly on a threshold goes left.
    const std::vector<double> edge{ 0.3297, 0.4, 0.2659, 0.4, 0.2840, 0.4, 0.3, 0.4 };
    CHECK( predict_mv( t, edge ) == leaf8 );
    const std::vector<double> right{ 0.3298, 0.4, 0.27, 0.4, 0.28, 0.4, 0.3, 0.4 };
    CHECK( t.leaf_index( right ) == 6 );

    auto bad = nodes;
    bad[3].left = 1;
    CHECK_THROWS_AS( MvTree( bad, 8 ), Error );
}

TEST_CASE( "fit_uv basics", "[tree]" )
{
    Rng rng( 36 );
    std::vector<ScalarExample> c;
    for ( int i = 0; i < 20; ++i )
    {
        c.push_back( { { rng.uniform01() }, 0.42 } );
    }
    const auto tc = fit_uv( c, FitParams{}, rng );
    CHECK( tc.node_count() == 1 );
    CHECK( predict_uv( tc, std::vector<double>{ 0.5 } ) == Approx( 0.42 ) );

    std::vector<ScalarExample> two;
    for ( int i = 0; i < 10; ++i )
    {
        two.push_back( { { 0.05 * i }, 0.0 } );
        two.push_back( { { 0.6 + 0.03 * i }, 1.0 } );
    }
    const auto t2 = fit_uv( two, FitParams{}, rng );
    CHECK( t2.node_count() == 3 );
    CHECK( predict_uv( t2, std::vector<double>{ 0.1 } ) == 0.0 );
    CHECK( predict_uv( t2, std::vector<double>{ 0.9 } ) == 1.0 );
}

TEST_CASE( "squared-error split matches brute force", "[tree][property]" )
{
    Rng rng( 37 );
    FitParams p;
    p.rand_pct = 0;
    for ( int i = 0; i < 1000; ++i )
    {
        std::vector<ScalarExample> ex;
        std::vector<double> y;
        for ( int k = 0; k < 20; ++k )
        {
            ex.push_back( { { rng.uniform01(), std::floor( rng.uniform01() * 5 ) / 5 }, rng.uniform01() } );
            y.push_back( ex.back().response );
        }
        auto sse = []( const std::vector<double> &v ) {
            long double m = 0, s = 0;
            for ( double x: v )
            {
                m += x;
            }
            m /= v.size();
            for ( double x: v )
            {
                s += ( x - m ) * ( x - m );
            }
            return static_cast<double>( s );
        };
        double best = std::numeric_limits<double>::infinity();
        std::size_t bj = 0;
        double bp = 0;
        for ( std::size_t j = 0; j < 2; ++j )
        {
            std::set<double> vals;
            for ( const auto &e: ex )
            {
                vals.insert( e.features[j] );
            }
            const std::vector<double> v( vals.begin(), vals.end() );
            for ( std::size_t q = 0; q + 1 < v.size(); ++q )
            {
                const double th = ( v[q] + v[q + 1] ) / 2;
                std::vector<double> l, r;
                for ( const auto &e: ex )
                {
                    ( e.features[j] <= th ? l : r ).push_back( e.response );
                }
                const double c = sse( l ) + sse( r );
                if ( c < best - 1e-12 )
                {
                    best = c;
                    bj = j;
                    bp = th;
                }
            }
        }
        const FeatureTable table( ex, &ScalarExample::features );
        const SquaredErrorPolicy policy( y );
        const auto rows = detail::iota_indices( ex.size() );
        const auto feats = detail::iota_indices( 2 );
        Rng r2( 1 );
        const auto got = best_split( policy, table, rows, feats, sse( y ), p, r2 );
        REQUIRE( got );
        CHECK( got->cost == Approx( best ).margin( 1e-9 ) );
        CHECK( got->feature == bj );
        CHECK( got->threshold == Approx( bp ).margin( 1e-15 ) );
    }
}

TEST_CASE( "fitted trees satisfy the structural invariants", "[tree][property]" )
{
    Rng rng( 38 );
    for ( int i = 0; i < 1000; ++i )
    {
        const auto kind = all_measure_kinds[i % 5];
        const DistanceMeasure m( kind );
        const auto n = 2 + rng.uniform_index( 40 );
        const auto ex = test::random_examples( rng, n, 1 + rng.uniform_index( 4 ), i % 3 ? 0 : 5 );
        FitParams p;
        p.min_parent_size = 2 + rng.uniform_index( 8 );
        p.min_leaf_size = 1 + rng.uniform_index( p.min_parent_size / 2 );
        p.error_threshold = kind == MeasureKind::Recovery || kind == MeasureKind::Reproduction ? 0.5 : 0.001;
        p.rand_pct = static_cast<double>( rng.uniform_index( 30 ) );
        const auto seed = rng.next_u64();
        Rng fit_rng( seed );
        const auto t = fit_mv( ex, m, p, fit_rng );

        // Determinism.
        Rng again( seed );
        CHECK( fit_mv( ex, m, p, again ) == t );

        const auto at = members( t, ex );
        std::size_t leaf_total = 0;
        for ( std::size_t k = 0; k < t.node_count(); ++k )
        {
            const auto &node = t.nodes()[k];
            CHECK( node.count == at[k].size() );
            const auto targets = truths_at( ex, at[k] );
            const double cost = total_cost( approx_minimize( targets, m ).estimate, targets, m );
            if ( node.is_leaf() )
            {
                leaf_total += node.count;
                CHECK( node.estimate == approx_minimize( targets, m ).estimate );
                continue;
            }
            CHECK( node.count >= p.min_parent_size );
            CHECK( cost / static_cast<double>( node.count ) > p.error_threshold );
            const auto lt = truths_at( ex, at[node.left] );
            const auto rt = truths_at( ex, at[node.right] );
            CHECK( lt.size() >= p.min_leaf_size );
            CHECK( rt.size() >= p.min_leaf_size );
            // Monotone improvement.
            const double split = approx_minimize( lt, m ).cost + approx_minimize( rt, m ).cost;
            CHECK( split <= cost + 1e-9 );
        }
        CHECK( leaf_total == n );
    }
}

TEST_CASE( "squared-error surrogate loses to the multivariate leaf", "[tree]" )
{
    // Two examples at the neutral point plus one off along (+1, +1, -2): the
    // per-channel means sit at neutral + (a, a, -2a) while the median stays neutral.
    const double a = 0.05;
    const auto e = test::third();
    const auto off = normalize( 1.0 / 3 + 3 * a, 1.0 / 3 + 3 * a, 1.0 / 3 - 6 * a );
    std::vector<LabeledExample> ex{ { { 0.1 }, e }, { { 0.2 }, e }, { { 0.3 }, off } };
    Rng rng( 1 );
    const auto mv = fit_mv( ex, recovery, FitParams{}, rng );
    std::vector<ScalarExample> rs, gs;
    for ( const auto &x: ex )
    {
        rs.push_back( { x.features, x.truth.r() } );
        gs.push_back( { x.features, x.truth.g() } );
    }
    const auto rt = fit_uv( rs, FitParams{}, rng );
    const auto gt = fit_uv( gs, FitParams{}, rng );
    const std::vector<double> x{ 0.15 };
    const double r = predict_uv( rt, x ), g = predict_uv( gt, x );
    const auto uv = normalize( r, g, 1 - r - g );
    const double uv_err = distance( recovery, uv, e );
    const double mv_err = distance( recovery, predict_mv( mv, x ), e );
    CHECK( uv_err == Approx( 11.977 ).margin( 1e-3 ) );
    CHECK( mv_err < uv_err );
    CHECK( mv_err == Approx( 0.0 ).margin( 1e-6 ) );
}

TEST_CASE( "fit params are validated", "[tree]" )
{
    FitParams p;
    p.min_parent_size = 3;
    p.min_leaf_size = 2;
    CHECK_THROWS_AS( p.validate(), Error );
    p = {};
    p.rand_pct = -1;
    CHECK_THROWS_AS( p.validate(), Error );
}
