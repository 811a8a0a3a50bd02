// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "chroma.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "minimize.hpp"
#include "rng.hpp"

namespace awb
{

/// How target sets are drawn from the pool of ground truths.
enum class SubsetMode
{
    /// The `size` truths nearest (in r, g) to a random anchor, like the
    /// examples that end up together at a tree node.
    Local,
    /// `size` truths drawn uniformly without replacement.
    Uniform,
};

struct StudyParams
{
    std::size_t samples = 1000;
    std::size_t max_size = 200;
    std::uint64_t seed = 1;
    SubsetMode mode = SubsetMode::Local;
    ExactOptions exact;
};

struct StudySample
{
    std::size_t size = 0;
    double approx_cost = 0.0;
    double exact_cost = 0.0;
    /// (approx - exact) / exact; zero when the exact cost vanishes.
    double rel_error = 0.0;
};

struct StudySummary
{
    double median = 0.0;
    double p75 = 0.0;
    double p95 = 0.0;
    double max = 0.0;
};

inline double relative_error( double approx_cost, double exact_cost )
{
    if ( exact_cost <= 1e-12 )
    {
        return 0.0;
    }
    return std::max( 0.0, ( approx_cost - exact_cost ) / exact_cost );
}

/// Draws random target sets from `pool` and compares the median-based
/// approximate minimizer against the numerical one on each.
inline std::vector<StudySample> approx_error_study(
    std::span<const Chromaticity> pool, const DistanceMeasure &m, const StudyParams &p )
{
    if ( pool.empty() )
    {
        throw Error( ErrorKind::EmptySet, "no ground truths to sample from" );
    }
    if ( p.max_size == 0 )
    {
        throw Error( ErrorKind::InvalidArgument, "max_size must be positive" );
    }
    Rng rng( p.seed );
    const std::size_t cap = std::min( p.max_size, pool.size() );
    std::vector<std::size_t> order( pool.size() );
    std::vector<StudySample> out;
    out.reserve( p.samples );
    for ( std::size_t s = 0; s < p.samples; ++s )
    {
        const std::size_t size = 1 + static_cast<std::size_t>( rng.uniform_index( cap ) );
        std::iota( order.begin(), order.end(), std::size_t{ 0 } );
        if ( p.mode == SubsetMode::Local )
        {
            const auto &anchor = pool[static_cast<std::size_t>( rng.uniform_index( pool.size() ) )];
            auto dist2 = [&]( std::size_t i ) {
                const double dr = pool[i].r() - anchor.r();
                const double dg = pool[i].g() - anchor.g();
                return dr * dr + dg * dg;
            };
            std::partial_sort(
                order.begin(), order.begin() + static_cast<std::ptrdiff_t>( size ), order.end(),
                [&]( std::size_t a, std::size_t b ) {
                    const double da = dist2( a ), db = dist2( b );
                    return da < db || ( da == db && a < b );
                } );
        }
        else
        {
            // Partial Fisher-Yates: the first `size` slots become the sample.
            for ( std::size_t i = 0; i < size; ++i )
            {
                const auto j = i + static_cast<std::size_t>( rng.uniform_index( order.size() - i ) );
                std::swap( order[i], order[j] );
            }
        }
        std::vector<Chromaticity> targets;
        targets.reserve( size );
        for ( std::size_t i = 0; i < size; ++i )
        {
            targets.push_back( pool[order[i]] );
        }
        StudySample sample;
        sample.size = size;
        sample.approx_cost = approx_minimize( targets, m ).cost;
        sample.exact_cost = exact_minimize( targets, m, p.exact ).cost;
        sample.rel_error = relative_error( sample.approx_cost, sample.exact_cost );
        out.push_back( sample );
    }
    return out;
}

inline StudySummary summarize_study( std::span<const StudySample> samples )
{
    if ( samples.empty() )
    {
        throw Error( ErrorKind::EmptySet, "no study samples" );
    }
    std::vector<double> e;
    e.reserve( samples.size() );
    for ( const auto &s: samples )
    {
        e.push_back( s.rel_error );
    }
    std::sort( e.begin(), e.end() );
    return { quantile_sorted( e, 0.5 ), quantile_sorted( e, 0.75 ), quantile_sorted( e, 0.95 ), e.back() };
}

} // namespace awb
