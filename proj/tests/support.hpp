// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <awb/awb.hpp>

namespace awb::test
{

// Three nearby daylight ground truths used as a worked example.
inline std::vector<Chromaticity> triple()
{
    return {
        Chromaticity::from_components( 0.4285, 0.4468, 0.1247 ),
        Chromaticity::from_components( 0.4221, 0.4473, 0.1306 ),
        Chromaticity::from_components( 0.4098, 0.4682, 0.1220 ),
    };
}

inline Chromaticity third()
{
    return normalize( 1.0, 1.0, 1.0 );
}

/// Uniform on the simplex with every component >= lo.
inline Chromaticity random_chroma( Rng &rng, double lo = 0.0 )
{
    const double a = -std::log( 1.0 - rng.uniform01() );
    const double b = -std::log( 1.0 - rng.uniform01() );
    const double c = -std::log( 1.0 - rng.uniform01() );
    const double s = a + b + c;
    const double k = 1.0 - 3.0 * lo;
    return normalize( lo + k * a / s, lo + k * b / s, lo + k * c / s );
}

/// Close to a daylight-ish locus, as ground truths are.
inline Chromaticity random_illuminant( Rng &rng )
{
    const double r = rng.uniform( 0.2, 0.5 );
    const double d = r - 0.35;
    const double g = 0.46 - 1.5 * d * d + 0.015 * rng.normal();
    return normalize( r, g, 1.0 - r - g );
}

inline std::vector<LabeledExample> random_examples(
    Rng &rng, std::size_t n, std::size_t m, std::size_t distinct_values = 0 )
{
    std::vector<LabeledExample> out;
    for ( std::size_t i = 0; i < n; ++i )
    {
        LabeledExample e;
        for ( std::size_t j = 0; j < m; ++j )
        {
            e.features.push_back(
                distinct_values == 0 ? rng.uniform01()
                                     : static_cast<double>( rng.uniform_index( distinct_values ) ) /
                                           static_cast<double>( distinct_values ) );
        }
        e.truth = random_illuminant( rng );
        out.push_back( std::move( e ) );
    }
    return out;
}

// Straightforward long double re-statements of the distance formulas.
namespace oracle
{

inline long double deg( long double rad )
{
    return rad * 180.0L / 3.14159265358979323846264338327950288L;
}

inline long double clamp1( long double c )
{
    return c > 1.0L ? 1.0L : ( c < -1.0L ? -1.0L : c );
}

inline long double recovery( const Chromaticity &a, const Chromaticity &b )
{
    long double dot = 0, na = 0, nb = 0;
    for ( int i = 0; i < 3; ++i )
    {
        dot += (long double)a[i] * b[i];
        na += (long double)a[i] * a[i];
        nb += (long double)b[i] * b[i];
    }
    return deg( std::acos( clamp1( dot / std::sqrt( na * nb ) ) ) );
}

// D = diag(g^/r^, 1, g^/b^) applied to the truth, angle to (1, 1, 1).
inline long double reproduction( const Chromaticity &est, const Chromaticity &truth )
{
    const long double d[3] = { (long double)est.g() / est.r(), 1.0L, (long double)est.g() / est.b() };
    long double v[3], s = 0, n2 = 0;
    for ( int i = 0; i < 3; ++i )
    {
        v[i] = d[i] * truth[i];
        s += v[i];
        n2 += v[i] * v[i];
    }
    return deg( std::acos( clamp1( s / ( std::sqrt( n2 ) * std::sqrt( 3.0L ) ) ) ) );
}

inline long double taxicab( const Chromaticity &a, const Chromaticity &b )
{
    long double s = 0;
    for ( int i = 0; i < 3; ++i )
    {
        s += std::fabs( (long double)a[i] - b[i] );
    }
    return s;
}

inline long double euclidean( const Chromaticity &a, const Chromaticity &b )
{
    long double s = 0;
    for ( int i = 0; i < 3; ++i )
    {
        const long double d = (long double)a[i] - b[i];
        s += d * d;
    }
    return std::sqrt( s );
}

inline long double ped( const Chromaticity &a, const Chromaticity &b, std::array<double, 3> w = { 0.21, 0.71, 0.08 } )
{
    long double s = 0;
    for ( int i = 0; i < 3; ++i )
    {
        const long double d = (long double)a[i] - b[i];
        s += w[i] * d * d;
    }
    return std::sqrt( s );
}

inline long double dist( MeasureKind k, const Chromaticity &a, const Chromaticity &b )
{
    switch ( k )
    {
    case MeasureKind::Recovery: return recovery( a, b );
    case MeasureKind::Reproduction: return reproduction( a, b );
    case MeasureKind::Taxicab: return taxicab( a, b );
    case MeasureKind::Euclidean: return euclidean( a, b );
    case MeasureKind::PerceptualEuclidean: return ped( a, b );
    }
    return 0;
}

inline long double sum( MeasureKind k, const Chromaticity &c, std::span<const Chromaticity> t )
{
    long double s = 0;
    for ( const auto &x: t )
    {
        s += dist( k, c, x );
    }
    return s;
}

} // namespace oracle

} // namespace awb::test
