// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chroma.hpp"
#include "error.hpp"
#include "minimize.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "tree.hpp"

namespace awb
{

/// Randomized ensemble of multivariate trees fit against one distance measure.
struct Ensemble
{
    DistanceMeasure measure;
    FitParams params;
    std::uint64_t master_seed = 0;
    std::vector<std::string> feature_names;
    std::vector<MvTree> trees;

    std::size_t num_trees() const noexcept { return trees.size(); }
    std::size_t feature_count() const noexcept
    {
        return trees.empty() ? 0 : trees.front().feature_count();
    }

    bool operator==( const Ensemble & ) const = default;
};

namespace detail
{

inline void check_dataset( std::span<const LabeledExample> examples )
{
    if ( examples.empty() )
    {
        throw Error( ErrorKind::EmptySet, "no training examples" );
    }
    const auto m = examples.front().features.size();
    for ( const auto &e: examples )
    {
        if ( e.features.size() != m )
        {
            throw Error( ErrorKind::DimensionError, "inconsistent feature counts" );
        }
    }
}

inline std::vector<std::string> default_feature_names( std::size_t count )
{
    std::vector<std::string> names;
    for ( std::size_t i = 0; i < count; ++i )
    {
        names.push_back( "x" + std::to_string( i ) );
    }
    return names;
}

} // namespace detail

/// Trains `num_trees` trees; tree i uses seed derive_seed(master_seed, i), so
/// the result is independent of how many workers run.
inline Ensemble train(
    std::span<const LabeledExample> examples,
    const DistanceMeasure &m,
    const FitParams &params,
    std::size_t num_trees,
    std::uint64_t master_seed,
    std::vector<std::string> feature_names = {} )
{
    detail::check_dataset( examples );
    params.validate();
    if ( num_trees == 0 )
    {
        throw Error( ErrorKind::InvalidArgument, "num_trees must be positive" );
    }

    const FeatureTable table( examples );
    const auto truths = detail::truths_of( examples );
    const MultivariatePolicy policy( truths, m, params.error_threshold );
    const auto rows = detail::iota_indices( examples.size() );
    const auto features = detail::iota_indices( table.cols() );

    Ensemble ens;
    ens.measure = m;
    ens.params = params;
    ens.master_seed = master_seed;
    ens.feature_names = feature_names.empty() ? detail::default_feature_names( table.cols() )
                                              : std::move( feature_names );
    if ( ens.feature_names.size() != table.cols() )
    {
        throw Error( ErrorKind::DimensionError, "feature name count does not match features" );
    }
    ens.trees.resize( num_trees );
    parallel_for( num_trees, [&]( std::size_t i ) {
        Rng rng( derive_seed( master_seed, i ) );
        ens.trees[i] = fit_tree( policy, table, rows, features, params, rng );
    } );
    return ens;
}

/// Per-tree predictions for one feature vector, in tree order.
inline std::vector<Chromaticity> tree_predictions(
    const Ensemble &ens, std::span<const double> features )
{
    std::vector<Chromaticity> out;
    out.reserve( ens.trees.size() );
    for ( const auto &t: ens.trees )
    {
        out.push_back( t.predict( features ) );
    }
    return out;
}

/// Combines the trees' predictions by solving the same minimization used to
/// label leaves (median, renormalized).
inline Chromaticity predict( const Ensemble &ens, std::span<const double> features )
{
    if ( ens.trees.empty() )
    {
        throw Error( ErrorKind::EmptySet, "ensemble has no trees" );
    }
    const auto preds = tree_predictions( ens, features );
    return approx_minimize( preds, ens.measure ).estimate;
}

enum class Channel : std::uint8_t
{
    R,
    G,
};

/// One univariate tree of the baseline: predicts r or g from one feature pair.
struct BaselineTree
{
    Channel response = Channel::R;
    std::array<std::size_t, 2> features{ 0, 1 };
    std::size_t repeat = 0;
    UvTree tree;

    bool operator==( const BaselineTree & ) const = default;
};

/// Univariate squared-error baseline: per feature pair and repeat, one tree for
/// r and one for g; b is reconstructed as 1 - r - g.
struct BaselineEnsemble
{
    FitParams params;
    std::size_t num_repeats = 0;
    std::uint64_t master_seed = 0;
    std::vector<std::string> feature_names;
    std::vector<BaselineTree> trees;

    std::size_t num_trees() const noexcept { return trees.size(); }
    std::size_t feature_count() const noexcept { return feature_names.size(); }

    bool operator==( const BaselineEnsemble & ) const = default;
};

/// Floor applied to baseline components before renormalizing, chosen so that
/// the result stays above EPS_DIV.
inline constexpr double BASELINE_FLOOR = 1e-6;

struct BaselinePrediction
{
    Chromaticity estimate;
    bool clamped = false;
};

inline BaselineEnsemble train_baseline(
    std::span<const LabeledExample> examples,
    const FitParams &params,
    std::size_t num_repeats,
    std::uint64_t master_seed,
    std::vector<std::string> feature_names = {} )
{
    detail::check_dataset( examples );
    params.validate();
    if ( num_repeats == 0 )
    {
        throw Error( ErrorKind::InvalidArgument, "num_repeats must be positive" );
    }
    const FeatureTable table( examples );
    if ( table.cols() < 2 || table.cols() % 2 != 0 )
    {
        throw Error(
            ErrorKind::DimensionError, "baseline needs an even number of features (pairs)" );
    }

    std::vector<double> yr, yg;
    for ( const auto &e: examples )
    {
        yr.push_back( e.truth.r() );
        yg.push_back( e.truth.g() );
    }
    const SquaredErrorPolicy policy_r( yr );
    const SquaredErrorPolicy policy_g( yg );
    const auto rows = detail::iota_indices( examples.size() );
    const std::size_t pairs = table.cols() / 2;

    BaselineEnsemble ens;
    ens.params = params;
    ens.num_repeats = num_repeats;
    ens.master_seed = master_seed;
    ens.feature_names = feature_names.empty() ? detail::default_feature_names( table.cols() )
                                              : std::move( feature_names );
    if ( ens.feature_names.size() != table.cols() )
    {
        throw Error( ErrorKind::DimensionError, "feature name count does not match features" );
    }
    ens.trees.resize( num_repeats * pairs * 2 );
    parallel_for( ens.trees.size(), [&]( std::size_t i ) {
        const std::size_t channel = i % 2;
        const std::size_t pair = ( i / 2 ) % pairs;
        const std::size_t repeat = i / ( 2 * pairs );
        const std::array<std::size_t, 2> cols{ 2 * pair, 2 * pair + 1 };
        Rng rng( derive_seed( master_seed, i ) );
        auto &slot = ens.trees[i];
        slot.response = channel == 0 ? Channel::R : Channel::G;
        slot.features = cols;
        slot.repeat = repeat;
        slot.tree = channel == 0 ? fit_tree( policy_r, table, rows, cols, params, rng )
                                 : fit_tree( policy_g, table, rows, cols, params, rng );
    } );
    return ens;
}

/// Mean of the r trees and of the g trees, b = 1 - r - g. Components below
/// BASELINE_FLOOR are raised to it and the triple renormalized; `clamped`
/// records when that happened.
inline BaselinePrediction predict_baseline_detailed(
    const BaselineEnsemble &ens, std::span<const double> features )
{
    if ( features.size() != ens.feature_count() )
    {
        throw Error( ErrorKind::DimensionError, "feature vector length mismatch" );
    }
    double sr = 0.0, sg = 0.0;
    std::size_t nr = 0, ng = 0;
    for ( const auto &t: ens.trees )
    {
        const double v = t.tree.predict( features );
        if ( t.response == Channel::R )
        {
            sr += v;
            ++nr;
        }
        else
        {
            sg += v;
            ++ng;
        }
    }
    if ( nr == 0 || ng == 0 )
    {
        throw Error( ErrorKind::EmptySet, "baseline ensemble lacks r or g trees" );
    }
    const double r = sr / static_cast<double>( nr );
    const double g = sg / static_cast<double>( ng );
    const double b = 1.0 - r - g;

    BaselinePrediction out;
    if ( r < BASELINE_FLOOR || g < BASELINE_FLOOR || b < BASELINE_FLOOR )
    {
        out.clamped = true;
        out.estimate = normalize(
            std::max( r, BASELINE_FLOOR ),
            std::max( g, BASELINE_FLOOR ),
            std::max( b, BASELINE_FLOOR ) );
    }
    else
    {
        out.estimate = Chromaticity::from_components( r, g, b );
    }
    return out;
}

inline Chromaticity predict_baseline( const BaselineEnsemble &ens, std::span<const double> features )
{
    return predict_baseline_detailed( ens, features ).estimate;
}

} // namespace awb
