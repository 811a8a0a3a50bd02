// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "chroma.hpp"
#include "ensemble.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "tree.hpp"

namespace awb
{

/// Error statistics reported per measure. Quantiles use linear interpolation
/// between order statistics (h = (n - 1) q); the best/worst 25% means use
/// ceil(n / 4) values.
struct StatsSummary
{
    double mean = 0.0;
    double median = 0.0;
    double trimean = 0.0;
    double best25_mean = 0.0;
    double worst25_mean = 0.0;
    std::size_t n = 0;
};

/// Linearly interpolated quantile of sorted data.
inline double quantile_sorted( std::span<const double> sorted, double q )
{
    if ( sorted.empty() )
    {
        throw Error( ErrorKind::EmptySet, "quantile of an empty list" );
    }
    const double h = static_cast<double>( sorted.size() - 1 ) * q;
    const auto lo = static_cast<std::size_t>( std::floor( h ) );
    if ( lo + 1 >= sorted.size() )
    {
        return sorted.back();
    }
    return sorted[lo] + ( h - static_cast<double>( lo ) ) * ( sorted[lo + 1] - sorted[lo] );
}

inline StatsSummary summarize( std::span<const double> errors )
{
    if ( errors.empty() )
    {
        throw Error( ErrorKind::EmptySet, "no errors to summarize" );
    }
    std::vector<double> s( errors.begin(), errors.end() );
    std::sort( s.begin(), s.end() );
    const std::size_t n = s.size();
    const std::size_t quarter = ( n + 3 ) / 4;

    StatsSummary out;
    out.n = n;
    out.mean = std::accumulate( s.begin(), s.end(), 0.0 ) / static_cast<double>( n );
    const double q1 = quantile_sorted( s, 0.25 );
    out.median = quantile_sorted( s, 0.5 );
    const double q3 = quantile_sorted( s, 0.75 );
    out.trimean = ( q1 + 2.0 * out.median + q3 ) / 4.0;
    out.best25_mean = std::accumulate(
                          s.begin(), s.begin() + static_cast<std::ptrdiff_t>( quarter ), 0.0 ) /
                      static_cast<double>( quarter );
    out.worst25_mean = std::accumulate(
                           s.end() - static_cast<std::ptrdiff_t>( quarter ), s.end(), 0.0 ) /
                       static_cast<double>( quarter );
    return out;
}

/// Repeated k-fold cross-validation plan.
struct CvPlan
{
    std::size_t k = 10;
    std::size_t runs = 30;
    std::uint64_t seed = 0;
};

/// Seeded shuffle of 0..n-1 cut into k contiguous blocks; the first n % k
/// folds hold one extra index.
inline std::vector<std::vector<std::size_t>> make_folds(
    std::size_t n, const CvPlan &plan, std::size_t run_index )
{
    if ( plan.k < 2 )
    {
        throw Error( ErrorKind::InvalidPlan, "k must be at least 2" );
    }
    if ( n < plan.k )
    {
        throw Error(
            ErrorKind::InvalidPlan,
            "cannot cut " + std::to_string( n ) + " examples into " + std::to_string( plan.k ) +
                " folds" );
    }
    std::vector<std::size_t> order( n );
    std::iota( order.begin(), order.end(), std::size_t{ 0 } );
    Rng rng( derive_seed( plan.seed, run_index ) );
    rng.shuffle( std::span<std::size_t>( order ) );

    std::vector<std::vector<std::size_t>> folds( plan.k );
    const std::size_t base = n / plan.k;
    const std::size_t extra = n % plan.k;
    std::size_t at = 0;
    for ( std::size_t f = 0; f < plan.k; ++f )
    {
        const std::size_t size = base + ( f < extra ? 1 : 0 );
        folds[f].assign(
            order.begin() + static_cast<std::ptrdiff_t>( at ),
            order.begin() + static_cast<std::ptrdiff_t>( at + size ) );
        at += size;
    }
    return folds;
}

enum class Method
{
    Multivariate,
    Baseline,
};

inline const char *method_name( Method m )
{
    return m == Method::Multivariate ? "multivariate" : "baseline";
}

struct CvConfig
{
    Method method = Method::Multivariate;
    /// Measure the multivariate trees are fit against.
    DistanceMeasure measure{ MeasureKind::Recovery };
    FitParams params;
    /// Trees per ensemble (multivariate) or repeats per feature pair (baseline).
    std::size_t num_trees = 30;
    CvPlan plan;
};

/// Held-out prediction for one example in one run, with its error under every measure.
struct CvRecord
{
    std::size_t run = 0;
    std::size_t fold = 0;
    std::size_t index = 0;
    Chromaticity prediction;
    std::array<double, 5> errors{};
};

struct CvResult
{
    Method method = Method::Multivariate;
    MeasureKind fit_measure = MeasureKind::Recovery;
    /// Sorted by (run, index).
    std::vector<CvRecord> records;
    /// Indexed like all_measure_kinds; errors pooled over all runs.
    std::array<StatsSummary, 5> per_measure{};
    /// Baseline predictions that needed clamping onto the simplex.
    std::size_t clamp_count = 0;

    const StatsSummary &summary( MeasureKind kind ) const
    {
        return per_measure[static_cast<std::size_t>( kind )];
    }
};

inline std::array<double, 5> errors_all_measures(
    const Chromaticity &prediction, const Chromaticity &truth, const DistanceMeasure &ped )
{
    std::array<double, 5> e{};
    for ( std::size_t i = 0; i < all_measure_kinds.size(); ++i )
    {
        const auto kind = all_measure_kinds[i];
        const DistanceMeasure m = kind == MeasureKind::PerceptualEuclidean ? ped : DistanceMeasure( kind );
        e[i] = distance( m, prediction, truth );
    }
    return e;
}

/// Trains on k - 1 folds and scores the held-out fold, for every fold of every
/// run. Fold assignment depends only on (plan.seed, run), so both methods see
/// identical partitions.
inline CvResult cross_validate( std::span<const LabeledExample> dataset, const CvConfig &cfg )
{
    detail::check_dataset( dataset );
    const DistanceMeasure ped = cfg.measure.kind() == MeasureKind::PerceptualEuclidean
                                    ? cfg.measure
                                    : DistanceMeasure( MeasureKind::PerceptualEuclidean );
    CvResult result;
    result.method = cfg.method;
    result.fit_measure = cfg.measure.kind();

    for ( std::size_t run = 0; run < cfg.plan.runs; ++run )
    {
        const auto folds = make_folds( dataset.size(), cfg.plan, run );
        for ( std::size_t f = 0; f < folds.size(); ++f )
        {
            std::vector<LabeledExample> train_set;
            for ( std::size_t g = 0; g < folds.size(); ++g )
            {
                if ( g == f )
                {
                    continue;
                }
                for ( auto i: folds[g] )
                {
                    train_set.push_back( dataset[i] );
                }
            }
            const auto model_seed =
                derive_seed( cfg.plan.seed ^ 0x5bf03635f0a1c2e7ULL, run * folds.size() + f );

            auto score = [&]( auto &&predictor ) {
                for ( auto i: folds[f] )
                {
                    CvRecord rec;
                    rec.run = run;
                    rec.fold = f;
                    rec.index = i;
                    rec.prediction = predictor( dataset[i].features );
                    rec.errors = errors_all_measures( rec.prediction, dataset[i].truth, ped );
                    result.records.push_back( rec );
                }
            };

            if ( cfg.method == Method::Multivariate )
            {
                const auto ens =
                    train( train_set, cfg.measure, cfg.params, cfg.num_trees, model_seed );
                score( [&]( std::span<const double> x ) { return predict( ens, x ); } );
            }
            else
            {
                const auto ens = train_baseline( train_set, cfg.params, cfg.num_trees, model_seed );
                score( [&]( std::span<const double> x ) {
                    const auto p = predict_baseline_detailed( ens, x );
                    result.clamp_count += p.clamped ? 1 : 0;
                    return p.estimate;
                } );
            }
        }
    }

    std::sort( result.records.begin(), result.records.end(), []( const CvRecord &a, const CvRecord &b ) {
        return a.run < b.run || ( a.run == b.run && a.index < b.index );
    } );
    for ( std::size_t m = 0; m < 5; ++m )
    {
        std::vector<double> e;
        e.reserve( result.records.size() );
        for ( const auto &r: result.records )
        {
            e.push_back( r.errors[m] );
        }
        result.per_measure[m] = summarize( e );
    }
    return result;
}

struct TreeSizeReport
{
    double mean_nodes_per_tree = 0.0;
    std::size_t total_nodes = 0;
    std::size_t num_trees = 0;
};

/// Node counts (internal plus leaf) over an ensemble.
template <typename Ens>
TreeSizeReport tree_size_report( const Ens &ens )
{
    TreeSizeReport r;
    for ( const auto &t: ens.trees )
    {
        if constexpr ( requires { t.tree; } )
        {
            r.total_nodes += t.tree.node_count();
        }
        else
        {
            r.total_nodes += t.node_count();
        }
    }
    r.num_trees = ens.trees.size();
    r.mean_nodes_per_tree =
        r.num_trees == 0 ? 0.0 : static_cast<double>( r.total_nodes ) / static_cast<double>( r.num_trees );
    return r;
}

} // namespace awb
