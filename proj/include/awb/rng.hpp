// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace awb
{

/// splitmix64 finalizer.
constexpr std::uint64_t mix64( std::uint64_t x ) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = ( x ^ ( x >> 30 ) ) * 0xbf58476d1ce4e5b9ULL;
    x = ( x ^ ( x >> 27 ) ) * 0x94d049bb133111ebULL;
    return x ^ ( x >> 31 );
}

/// Derives an independent child seed from a master seed and an index.
constexpr std::uint64_t derive_seed( std::uint64_t master, std::uint64_t index ) noexcept
{
    return mix64( mix64( master ) ^ mix64( index + 0x632be59bd9b4e019ULL ) );
}

/// Seeded generator whose output depends only on the seed. The engine is
/// std::mt19937_64 (its sequence is fixed by the standard); the
/// distributions are implemented here because the standard library ones
/// differ between implementations.
class Rng
{
public:
    explicit Rng( std::uint64_t seed ) : m_engine( seed ) {}

    std::uint64_t next_u64() { return m_engine(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index( std::uint64_t n )
    {
        // Rejection sampling on the top of the range removes modulo bias.
        const std::uint64_t limit = ( ~std::uint64_t{ 0 } ) - ( ( ~std::uint64_t{ 0 } ) % n );
        std::uint64_t x;
        do
        {
            x = m_engine();
        } while ( x >= limit );
        return x % n;
    }

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>( m_engine() >> 11 ) * 0x1.0p-53; }

    double uniform( double lo, double hi ) { return lo + ( hi - lo ) * uniform01(); }

    /// Standard normal via Box-Muller (one value per call, no caching).
    double normal()
    {
        double u1;
        do
        {
            u1 = uniform01();
        } while ( u1 <= 0.0 );
        const double u2 = uniform01();
        return std::sqrt( -2.0 * std::log( u1 ) ) * std::cos( 2.0 * std::numbers::pi * u2 );
    }

    template <typename T>
    void shuffle( std::span<T> values )
    {
        for ( std::size_t i = values.size(); i > 1; --i )
        {
            const auto j = static_cast<std::size_t>( uniform_index( i ) );
            std::swap( values[i - 1], values[j] );
        }
    }

private:
    std::mt19937_64 m_engine;
};

} // namespace awb
