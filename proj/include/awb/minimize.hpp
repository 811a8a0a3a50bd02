// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "chroma.hpp"
#include "error.hpp"

namespace awb
{

enum class MinimizeMethod
{
    ApproxMedian,
    ExactNumeric,
    Mean,
};

struct MinimizeResult
{
    Chromaticity estimate;
    double cost = 0.0;
    MinimizeMethod method = MinimizeMethod::ApproxMedian;
};

namespace detail
{

inline void require_targets( std::span<const Chromaticity> targets )
{
    if ( targets.empty() )
    {
        throw Error( ErrorKind::EmptySet, "no target chromaticities" );
    }
}

/// Median of `values` (reordered in place). Even sizes average the two middle
/// order statistics.
inline double median_inplace( std::span<double> values )
{
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::nth_element( values.begin(), values.begin() + mid, values.end() );
    const double upper = values[mid];
    if ( n % 2 == 1 )
    {
        return upper;
    }
    const double lower = *std::max_element( values.begin(), values.begin() + mid );
    return 0.5 * ( lower + upper );
}

} // namespace detail

/// Sum of distance(m, candidate, t) over the targets.
inline double total_cost(
    const Chromaticity &candidate,
    std::span<const Chromaticity> targets,
    const DistanceMeasure &m )
{
    detail::require_targets( targets );
    double sum = 0.0;
    for ( const auto &t: targets )
    {
        sum += distance( m, candidate, t );
    }
    return sum;
}

/// Componentwise median of the targets, not yet renormalized.
inline std::array<double, 3> componentwise_median( std::span<const Chromaticity> targets )
{
    detail::require_targets( targets );
    std::vector<double> scratch( targets.size() );
    std::array<double, 3> med{};
    for ( std::size_t c = 0; c < 3; ++c )
    {
        for ( std::size_t i = 0; i < targets.size(); ++i )
        {
            scratch[i] = targets[i][c];
        }
        med[c] = detail::median_inplace( scratch );
    }
    return med;
}

/// Fast approximate minimizer: componentwise median, renormalized onto the
/// simplex. The estimate does not depend on the measure; only the reported
/// cost does.
inline MinimizeResult approx_minimize(
    std::span<const Chromaticity> targets, const DistanceMeasure &m )
{
    const auto med = componentwise_median( targets );
    MinimizeResult result;
    result.estimate = normalize( med );
    result.cost = total_cost( result.estimate, targets, m );
    result.method = MinimizeMethod::ApproxMedian;
    return result;
}

/// Componentwise mean (already on the simplex up to rounding).
inline MinimizeResult mean_minimize(
    std::span<const Chromaticity> targets, const DistanceMeasure &m )
{
    detail::require_targets( targets );
    std::array<double, 3> sum{ 0.0, 0.0, 0.0 };
    for ( const auto &t: targets )
    {
        for ( std::size_t c = 0; c < 3; ++c )
        {
            sum[c] += t[c];
        }
    }
    const double n = static_cast<double>( targets.size() );
    MinimizeResult result;
    result.estimate = normalize( sum[0] / n, sum[1] / n, sum[2] / n );
    result.cost = total_cost( result.estimate, targets, m );
    result.method = MinimizeMethod::Mean;
    return result;
}

struct ExactOptions
{
    /// Finest coarse-grid step over (r, g).
    double grid_step = 1e-3;
    /// Upper bound on coarse-grid points per axis; the step grows past
    /// grid_step when the search box is wide.
    std::size_t max_points_per_axis = 96;
    /// Bounding-box expansion around the targets.
    double margin = 0.05;
    /// Refinement stops once the pattern step falls below this.
    double min_step = 1e-7;
    /// Number of best coarse-grid points refined.
    std::size_t starts = 4;
};

/// Numerical minimizer of the summed distance over the simplex: coarse grid
/// over the expanded bounding box of the targets, then 3x3 pattern-search
/// refinement from the best grid points and from the median and mean
/// estimates. Used as a reference oracle; it is far too slow for training.
inline MinimizeResult exact_minimize(
    std::span<const Chromaticity> targets,
    const DistanceMeasure &m,
    const ExactOptions &opts = {} )
{
    detail::require_targets( targets );

    // Reproduction needs strictly positive estimates.
    const double floor = m.kind() == MeasureKind::Reproduction ? 2.0 * EPS_DIV : 0.0;

    auto feasible = [floor]( double r, double g ) {
        return r >= floor && g >= floor && 1.0 - r - g >= floor;
    };
    auto make = []( double r, double g ) {
        return Chromaticity::from_components( r, g, std::max( 0.0, 1.0 - r - g ) );
    };
    auto cost_at = [&]( double r, double g ) {
        return total_cost( make( r, g ), targets, m );
    };

    double rlo = 1.0, rhi = 0.0, glo = 1.0, ghi = 0.0;
    for ( const auto &t: targets )
    {
        rlo = std::min( rlo, t.r() );
        rhi = std::max( rhi, t.r() );
        glo = std::min( glo, t.g() );
        ghi = std::max( ghi, t.g() );
    }
    rlo = std::max( floor, rlo - opts.margin );
    glo = std::max( floor, glo - opts.margin );
    rhi = std::min( 1.0, rhi + opts.margin );
    ghi = std::min( 1.0, ghi + opts.margin );

    const double span = std::max( rhi - rlo, ghi - glo );
    const double step = std::max(
        opts.grid_step, span / static_cast<double>( opts.max_points_per_axis ) );

    struct Point
    {
        double cost, r, g;
    };
    std::vector<Point> grid;
    for ( double r = rlo; r <= rhi + 1e-12; r += step )
    {
        for ( double g = glo; g <= ghi + 1e-12; g += step )
        {
            if ( feasible( r, g ) )
            {
                grid.push_back( { cost_at( r, g ), r, g } );
            }
        }
    }

    std::vector<Point> starts;
    const std::size_t keep = std::min( opts.starts, grid.size() );
    std::partial_sort(
        grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>( keep ), grid.end(),
        []( const Point &a, const Point &b ) { return a.cost < b.cost; } );
    starts.assign( grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>( keep ) );

    for ( const auto &seed: { approx_minimize( targets, m ), mean_minimize( targets, m ) } )
    {
        if ( feasible( seed.estimate.r(), seed.estimate.g() ) )
        {
            starts.push_back(
                { cost_at( seed.estimate.r(), seed.estimate.g() ),
                  seed.estimate.r(),
                  seed.estimate.g() } );
        }
    }

    Point best{ std::numeric_limits<double>::infinity(), 0.0, 0.0 };
    for ( Point cur: starts )
    {
        double h = step;
        while ( h >= opts.min_step )
        {
            Point next = cur;
            for ( int dr = -1; dr <= 1; ++dr )
            {
                for ( int dg = -1; dg <= 1; ++dg )
                {
                    if ( dr == 0 && dg == 0 )
                    {
                        continue;
                    }
                    const double r = cur.r + dr * h;
                    const double g = cur.g + dg * h;
                    if ( !feasible( r, g ) )
                    {
                        continue;
                    }
                    const double c = cost_at( r, g );
                    if ( c < next.cost )
                    {
                        next = { c, r, g };
                    }
                }
            }
            if ( next.cost < cur.cost )
            {
                cur = next;
            }
            else
            {
                h *= 0.5;
            }
        }
        if ( cur.cost < best.cost )
        {
            best = cur;
        }
    }

    MinimizeResult result;
    result.estimate = make( best.r, best.g );
    result.cost = total_cost( result.estimate, targets, m );
    result.method = MinimizeMethod::ExactNumeric;
    return result;
}

} // namespace awb
