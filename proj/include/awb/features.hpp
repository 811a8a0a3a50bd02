// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chroma.hpp"
#include "error.hpp"
#include "image.hpp"

namespace awb
{

/// An (r, g) chromaticity feature pair.
using FeaturePair = std::pair<double, double>;

struct FeatureOptions
{
    std::size_t histogram_bins = 64;
    std::size_t kde_grid = 256;
    /// Gaussian sigma in chromaticity units.
    double kde_bandwidth = 0.01;
    double sog_p = 5.0;
};

namespace detail
{

inline void require_pixels( const LinearImage &img )
{
    if ( img.usable_count() == 0 )
    {
        throw Error( ErrorKind::EmptyImage, "image has no usable pixels" );
    }
}

inline FeaturePair rg_of( double r, double g, double b )
{
    const auto c = normalize( r, g, b );
    return { c.r(), c.g() };
}

} // namespace detail

/// Chromaticity of the mean usable pixel.
inline FeaturePair gray_world( const LinearImage &img )
{
    detail::require_pixels( img );
    std::array<double, 3> sum{ 0.0, 0.0, 0.0 };
    img.for_each_usable( [&]( const auto &p ) {
        sum[0] += p[0];
        sum[1] += p[1];
        sum[2] += p[2];
    } );
    return detail::rg_of( sum[0], sum[1], sum[2] );
}

/// Chromaticity of the usable pixel with the largest R + G + B (first wins).
inline FeaturePair brightest_color( const LinearImage &img )
{
    detail::require_pixels( img );
    std::array<double, 3> best{};
    double best_sum = -1.0;
    img.for_each_usable( [&]( const auto &p ) {
        const double s = p[0] + p[1] + p[2];
        if ( s > best_sum )
        {
            best_sum = s;
            best = p;
        }
    } );
    return detail::rg_of( best[0], best[1], best[2] );
}

/// Joint RGB histogram with `bins` levels per channel; returns the
/// chromaticity of the mean color inside the most populated bin (lowest
/// linear bin index on ties).
inline FeaturePair histogram_mode( const LinearImage &img, std::size_t bins = 64 )
{
    detail::require_pixels( img );
    if ( bins == 0 )
    {
        throw Error( ErrorKind::InvalidArgument, "histogram needs at least one bin" );
    }
    auto level = [bins]( double v ) {
        const auto b = static_cast<std::size_t>( v * static_cast<double>( bins ) );
        return std::min( b, bins - 1 );
    };
    auto bin_of = [&]( const std::array<double, 3> &p ) {
        return ( level( p[0] ) * bins + level( p[1] ) ) * bins + level( p[2] );
    };

    std::vector<std::uint32_t> counts( bins * bins * bins, 0 );
    img.for_each_usable( [&]( const auto &p ) { ++counts[bin_of( p )]; } );
    std::size_t mode = 0;
    for ( std::size_t i = 1; i < counts.size(); ++i )
    {
        if ( counts[i] > counts[mode] )
        {
            mode = i;
        }
    }
    std::array<double, 3> sum{ 0.0, 0.0, 0.0 };
    img.for_each_usable( [&]( const auto &p ) {
        if ( bin_of( p ) == mode )
        {
            sum[0] += p[0];
            sum[1] += p[1];
            sum[2] += p[2];
        }
    } );
    return detail::rg_of( sum[0], sum[1], sum[2] );
}

/// Mode of a Gaussian kernel density estimate on the (r, g) plane. Pixels are
/// binned onto a grid x grid lattice over [0, 1]^2, smoothed with a separable
/// Gaussian (sigma = bandwidth), and the center of the densest cell returned
/// (lowest r-major index on ties). Black pixels have no chromaticity and are
/// skipped.
inline FeaturePair kde_mode( const LinearImage &img, std::size_t grid = 256, double bandwidth = 0.01 )
{
    detail::require_pixels( img );
    if ( grid == 0 || !( bandwidth > 0.0 ) )
    {
        throw Error( ErrorKind::InvalidArgument, "KDE needs a positive grid and bandwidth" );
    }
    const double g_d = static_cast<double>( grid );
    auto cell = [&]( double v ) {
        return std::min( static_cast<std::size_t>( std::max( v, 0.0 ) * g_d ), grid - 1 );
    };

    std::vector<double> hist( grid * grid, 0.0 );
    std::size_t used = 0;
    img.for_each_usable( [&]( const auto &p ) {
        const double s = p[0] + p[1] + p[2];
        if ( s > 0.0 )
        {
            hist[cell( p[0] / s ) * grid + cell( p[1] / s )] += 1.0;
            ++used;
        }
    } );
    if ( used == 0 )
    {
        throw Error( ErrorKind::EmptyImage, "no usable pixel has a chromaticity" );
    }

    const double sigma = bandwidth * g_d;
    const auto radius = static_cast<std::ptrdiff_t>( std::ceil( 4.0 * sigma ) );
    std::vector<double> kernel( static_cast<std::size_t>( 2 * radius + 1 ) );
    for ( std::ptrdiff_t k = -radius; k <= radius; ++k )
    {
        const double x = static_cast<double>( k ) / sigma;
        kernel[static_cast<std::size_t>( k + radius )] = std::exp( -0.5 * x * x );
    }

    const auto n = static_cast<std::ptrdiff_t>( grid );
    auto convolve = [&]( const std::vector<double> &src, bool along_g ) {
        std::vector<double> dst( src.size(), 0.0 );
        for ( std::ptrdiff_t i = 0; i < n; ++i )
        {
            for ( std::ptrdiff_t j = 0; j < n; ++j )
            {
                const double v = src[static_cast<std::size_t>( i * n + j )];
                if ( v == 0.0 )
                {
                    continue;
                }
                for ( std::ptrdiff_t k = -radius; k <= radius; ++k )
                {
                    const auto ii = along_g ? i : i + k;
                    const auto jj = along_g ? j + k : j;
                    if ( ii < 0 || ii >= n || jj < 0 || jj >= n )
                    {
                        continue;
                    }
                    dst[static_cast<std::size_t>( ii * n + jj )] +=
                        v * kernel[static_cast<std::size_t>( k + radius )];
                }
            }
        }
        return dst;
    };
    const auto density = convolve( convolve( hist, true ), false );

    std::size_t best = 0;
    for ( std::size_t i = 1; i < density.size(); ++i )
    {
        if ( density[i] > density[best] )
        {
            best = i;
        }
    }
    return { ( static_cast<double>( best / grid ) + 0.5 ) / g_d,
             ( static_cast<double>( best % grid ) + 0.5 ) / g_d };
}

/// Chromaticity of the per-channel l_p means, (mean v^p)^(1/p).
inline FeaturePair shades_of_gray( const LinearImage &img, double p = 5.0 )
{
    detail::require_pixels( img );
    if ( !( p > 0.0 ) )
    {
        throw Error( ErrorKind::InvalidArgument, "shades-of-gray needs p > 0" );
    }
    std::array<double, 3> sum{ 0.0, 0.0, 0.0 };
    const double n = static_cast<double>( img.usable_count() );
    img.for_each_usable( [&]( const auto &px ) {
        for ( std::size_t c = 0; c < 3; ++c )
        {
            sum[c] += std::pow( px[c], p );
        }
    } );
    return detail::rg_of(
        std::pow( sum[0] / n, 1.0 / p ), std::pow( sum[1] / n, 1.0 / p ), std::pow( sum[2] / n, 1.0 / p ) );
}

/// Column names in feature-vector order.
inline std::vector<std::string> feature_names( bool include_sg )
{
    std::vector<std::string> names;
    for ( int i = 1; i <= 4; ++i )
    {
        names.push_back( "f_r_" + std::to_string( i ) );
        names.push_back( "f_g_" + std::to_string( i ) );
    }
    if ( include_sg )
    {
        names.emplace_back( "f_r_sg" );
        names.emplace_back( "f_g_sg" );
    }
    return names;
}

/// Gray-world, brightest color, histogram mode and KDE mode pairs, plus the
/// shades-of-gray pair when requested: 8 or 10 values.
inline std::vector<double> extract_features(
    const LinearImage &img, bool include_sg, const FeatureOptions &opts = {} )
{
    std::vector<FeaturePair> pairs{
        gray_world( img ),
        brightest_color( img ),
        histogram_mode( img, opts.histogram_bins ),
        kde_mode( img, opts.kde_grid, opts.kde_bandwidth ),
    };
    if ( include_sg )
    {
        pairs.push_back( shades_of_gray( img, opts.sog_p ) );
    }
    std::vector<double> out;
    out.reserve( pairs.size() * 2 );
    for ( const auto &[r, g]: pairs )
    {
        out.push_back( r );
        out.push_back( g );
    }
    return out;
}

} // namespace awb
