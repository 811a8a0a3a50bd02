// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "chroma.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "features.hpp"
#include "rng.hpp"

namespace awb
{

/// Synthetic feature datasets for running the pipeline without an image corpus.
///
/// Illuminants are drawn along a curved band of the (r, g) plane resembling a
/// daylight/tungsten locus: r uniform in [r_min, r_max],
/// g = locus_g0 - locus_curvature * (r - 0.35)^2 + N(0, locus_spread).
/// Each feature pair observes the illuminant's (r, g) through its own gain
/// toward neutral plus bivariate Gaussian noise with per-pair scale and
/// correlation `correlation` between the r and g errors. With probability
/// `failure_rate` a pair instead reports an unrelated chromaticity drawn
/// uniformly from the illuminant band, as a feature algorithm fooled by the
/// scene content would.
struct SynthParams
{
    std::size_t n = 500;
    std::uint64_t seed = 1;
    double noise_sigma = 0.02;
    double correlation = -0.6;
    bool include_sg = false;
    double r_min = 0.22;
    double r_max = 0.48;
    double locus_g0 = 0.46;
    double locus_curvature = 1.5;
    double locus_spread = 0.012;
    double failure_rate = 0.1;
};

namespace detail
{

struct PairModel
{
    double gain;
    double noise_scale;
};

// Gains pull a feature toward neutral (1/3, 1/3); scales vary reliability.
inline constexpr std::array<PairModel, 5> synth_pairs{ {
    { 1.00, 1.00 },
    { 0.90, 1.50 },
    { 1.05, 2.00 },
    { 0.85, 1.25 },
    { 0.95, 0.75 },
} };

inline std::pair<double, double> clamp_rg( double r, double g )
{
    r = std::clamp( r, 0.0, 1.0 );
    g = std::clamp( g, 0.0, 1.0 );
    const double s = r + g;
    if ( s > 1.0 )
    {
        r /= s;
        g /= s;
    }
    return { r, g };
}

} // namespace detail

/// Centre line of the illuminant band.
inline double locus_g( const SynthParams &p, double r )
{
    const double d = r - 0.35;
    return p.locus_g0 - p.locus_curvature * d * d;
}

inline FeatureDataset make_synthetic( const SynthParams &p )
{
    if ( p.n == 0 )
    {
        throw Error( ErrorKind::InvalidArgument, "synthetic dataset needs n >= 1" );
    }
    if ( !( p.noise_sigma >= 0.0 ) || !( std::abs( p.correlation ) <= 1.0 ) || !( p.r_min < p.r_max ) ||
         !( p.failure_rate >= 0.0 && p.failure_rate <= 1.0 ) )
    {
        throw Error( ErrorKind::InvalidArgument, "invalid synthetic generator parameters" );
    }
    Rng rng( p.seed );
    FeatureDataset ds;
    ds.feature_names = feature_names( p.include_sg );
    const std::size_t pairs = p.include_sg ? 5 : 4;

    char buf[256];
    std::snprintf(
        buf, sizeof buf,
        "synthetic n=%zu seed=%llu noise_sigma=%.6g correlation=%.6g r=[%.6g,%.6g] "
        "locus_g0=%.6g locus_curvature=%.6g locus_spread=%.6g failure_rate=%.6g",
        p.n, static_cast<unsigned long long>( p.seed ), p.noise_sigma, p.correlation, p.r_min,
        p.r_max, p.locus_g0, p.locus_curvature, p.locus_spread, p.failure_rate );
    ds.comments.emplace_back( buf );

    const double rho = p.correlation;
    const double ortho = std::sqrt( std::max( 0.0, 1.0 - rho * rho ) );
    for ( std::size_t i = 0; i < p.n; ++i )
    {
        const double r = rng.uniform( p.r_min, p.r_max );
        const double g = std::clamp( locus_g( p, r ) + p.locus_spread * rng.normal(), 0.05, 0.9 - r );
        const auto truth = normalize( r, g, 1.0 - r - g );

        std::vector<double> x;
        x.reserve( 2 * pairs );
        for ( std::size_t k = 0; k < pairs; ++k )
        {
            const auto &pm = detail::synth_pairs[k];
            const double sigma = p.noise_sigma * pm.noise_scale;
            const bool failed = rng.uniform01() < p.failure_rate;
            const double decoy_r = rng.uniform( p.r_min, p.r_max );
            const double z1 = rng.normal();
            const double z2 = rng.normal();
            const double er = sigma * z1;
            const double eg = sigma * ( rho * z1 + ortho * z2 );
            const double src_r = failed ? decoy_r : truth.r();
            const double src_g = failed ? locus_g( p, decoy_r ) : truth.g();
            const auto [fr, fg] = detail::clamp_rg(
                1.0 / 3.0 + pm.gain * ( src_r - 1.0 / 3.0 ) + er,
                1.0 / 3.0 + pm.gain * ( src_g - 1.0 / 3.0 ) + eg );
            x.push_back( fr );
            x.push_back( fg );
        }
        char id[32];
        std::snprintf( id, sizeof id, "synth_%05zu", i );
        ds.ids.emplace_back( id );
        ds.features.push_back( std::move( x ) );
        ds.truths.push_back( truth );
    }
    return ds;
}

} // namespace awb
