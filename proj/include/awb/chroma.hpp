// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "error.hpp"

namespace awb
{

/// Smallest estimate component accepted by the reproduction angular error.
inline constexpr double EPS_DIV = 1e-9;

/// Tolerance on r + g + b = 1 for values accepted verbatim.
inline constexpr double SIMPLEX_TOL = 1e-9;

/// A point on the 2-simplex: r + g + b = 1, all components nonnegative.
/// Obtained from `normalize` (any nonnegative RGB triple) or
/// `from_components` (values that already sum to one, kept bit for bit).
class Chromaticity
{
public:
    Chromaticity() = default;

    static Chromaticity from_components( double r, double g, double b )
    {
        if ( !( r >= 0.0 && g >= 0.0 && b >= 0.0 ) ||
             std::abs( r + g + b - 1.0 ) > SIMPLEX_TOL )
        {
            throw Error(
                ErrorKind::InvalidChromaticity,
                "components (" + std::to_string( r ) + ", " +
                    std::to_string( g ) + ", " + std::to_string( b ) +
                    ") are not on the simplex" );
        }
        return Chromaticity( r, g, b );
    }

    double r() const noexcept { return m_c[0]; }
    double g() const noexcept { return m_c[1]; }
    double b() const noexcept { return m_c[2]; }
    double operator[]( std::size_t i ) const noexcept { return m_c[i]; }
    const std::array<double, 3> &components() const noexcept { return m_c; }

    bool operator==( const Chromaticity & ) const = default;

private:
    Chromaticity( double r, double g, double b ) : m_c{ r, g, b } {}

    friend Chromaticity normalize( double, double, double );

    std::array<double, 3> m_c{ 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0 };
};

/// Divides each component by the component sum.
inline Chromaticity normalize( double r, double g, double b )
{
    if ( !( r >= 0.0 && g >= 0.0 && b >= 0.0 ) )
    {
        throw Error( ErrorKind::InvalidChromaticity, "negative RGB component" );
    }
    const double sum = r + g + b;
    if ( !( sum > 0.0 ) || !std::isfinite( sum ) )
    {
        throw Error(
            ErrorKind::InvalidChromaticity,
            "RGB triple has no positive finite component sum" );
    }
    return Chromaticity( r / sum, g / sum, b / sum );
}

inline Chromaticity normalize( const std::array<double, 3> &rgb )
{
    return normalize( rgb[0], rgb[1], rgb[2] );
}

enum class MeasureKind
{
    Recovery,
    Reproduction,
    Taxicab,
    Euclidean,
    PerceptualEuclidean,
};

/// One of the five white-balance distance measures. Only the perceptual
/// Euclidean variant carries channel weights.
class DistanceMeasure
{
public:
    static constexpr std::array<double, 3> default_ped_weights{ 0.21, 0.71, 0.08 };

    DistanceMeasure() = default;

    explicit DistanceMeasure( MeasureKind kind )
        : m_kind( kind )
    {
        if ( kind == MeasureKind::PerceptualEuclidean )
        {
            m_weights = default_ped_weights;
        }
    }

    static DistanceMeasure perceptual( const std::array<double, 3> &weights )
    {
        if ( weights[0] < 0.0 || weights[1] < 0.0 || weights[2] < 0.0 ||
             std::abs( weights[0] + weights[1] + weights[2] - 1.0 ) > 1e-9 )
        {
            throw Error(
                ErrorKind::InvalidArgument,
                "perceptual weights must be nonnegative and sum to 1" );
        }
        DistanceMeasure m( MeasureKind::PerceptualEuclidean );
        m.m_weights = weights;
        return m;
    }

    MeasureKind kind() const noexcept { return m_kind; }

    /// Channel weights; meaningful only for PerceptualEuclidean.
    const std::array<double, 3> &weights() const noexcept { return m_weights; }

    bool is_angular() const noexcept
    {
        return m_kind == MeasureKind::Recovery ||
               m_kind == MeasureKind::Reproduction;
    }

    bool operator==( const DistanceMeasure & ) const = default;

private:
    MeasureKind m_kind = MeasureKind::Recovery;
    std::array<double, 3> m_weights{ 0.0, 0.0, 0.0 };
};

inline constexpr std::array<MeasureKind, 5> all_measure_kinds{
    MeasureKind::Recovery,
    MeasureKind::Reproduction,
    MeasureKind::Taxicab,
    MeasureKind::Euclidean,
    MeasureKind::PerceptualEuclidean,
};

/// Short names used by the CLI and the file formats.
inline std::string_view measure_name( MeasureKind kind )
{
    switch ( kind )
    {
        case MeasureKind::Recovery: return "recovery";
        case MeasureKind::Reproduction: return "reproduction";
        case MeasureKind::Taxicab: return "taxicab";
        case MeasureKind::Euclidean: return "euclidean";
        case MeasureKind::PerceptualEuclidean: return "ped";
    }
    return "unknown";
}

inline std::optional<MeasureKind> parse_measure( std::string_view name )
{
    for ( auto kind: all_measure_kinds )
    {
        if ( measure_name( kind ) == name )
        {
            return kind;
        }
    }
    return std::nullopt;
}

namespace detail
{

/// Angle between two vectors in degrees, as atan2(|a x b|, a . b). Same value
/// as the clamped arc cosine of the normalized dot product, without its loss
/// of precision near zero (parallel vectors give exactly 0).
inline double angle_degrees( const std::array<double, 3> &a, const std::array<double, 3> &b )
{
    const double cx = a[1] * b[2] - a[2] * b[1];
    const double cy = a[2] * b[0] - a[0] * b[2];
    const double cz = a[0] * b[1] - a[1] * b[0];
    const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    return std::atan2( std::sqrt( cx * cx + cy * cy + cz * cz ), dot ) * ( 180.0 / std::numbers::pi );
}

} // namespace detail

/// Distance between an estimate and a ground truth. Angular measures are in
/// degrees. Reproduction builds D = diag(g/r, 1, g/b) from the estimate,
/// applies it to the truth and measures the angle to (1, 1, 1).
inline double distance(
    const DistanceMeasure &m, const Chromaticity &est, const Chromaticity &truth )
{
    const double dr = est.r() - truth.r();
    const double dg = est.g() - truth.g();
    const double db = est.b() - truth.b();

    switch ( m.kind() )
    {
        case MeasureKind::Recovery:
            return detail::angle_degrees( est.components(), truth.components() );
        case MeasureKind::Reproduction:
        {
            if ( est.r() < EPS_DIV || est.g() < EPS_DIV || est.b() < EPS_DIV )
            {
                throw Error(
                    ErrorKind::DegenerateEstimate,
                    "reproduction error needs every estimate component >= 1e-9" );
            }
            // The common factor g-hat cancels in the angle.
            const double x = truth.r() / est.r();
            const double y = truth.g() / est.g();
            const double z = truth.b() / est.b();
            return detail::angle_degrees( { x, y, z }, { 1.0, 1.0, 1.0 } );
        }
        case MeasureKind::Taxicab:
            return std::abs( dr ) + std::abs( dg ) + std::abs( db );
        case MeasureKind::Euclidean:
            return std::sqrt( dr * dr + dg * dg + db * db );
        case MeasureKind::PerceptualEuclidean:
        {
            const auto &w = m.weights();
            return std::sqrt( w[0] * dr * dr + w[1] * dg * dg + w[2] * db * db );
        }
    }
    return 0.0;
}

/// Scale applied when reporting a measure (perceptual Euclidean is shown x100).
inline double report_scale( MeasureKind kind )
{
    return kind == MeasureKind::PerceptualEuclidean ? 100.0 : 1.0;
}

} // namespace awb
