// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "chroma.hpp"
#include "ensemble.hpp"
#include "error.hpp"
#include "tree.hpp"

namespace awb
{

using Model = std::variant<Ensemble, BaselineEnsemble>;

inline constexpr int MODEL_FORMAT_VERSION = 1;

namespace detail
{

using nlohmann::json;

template <typename Leaf>
json leaf_to_json( const Leaf &leaf );

template <>
inline json leaf_to_json<Chromaticity>( const Chromaticity &c )
{
    return json::array( { c.r(), c.g(), c.b() } );
}

template <>
inline json leaf_to_json<double>( const double &v )
{
    return v;
}

template <typename Leaf>
json node_to_json( const RegressionTree<Leaf> &tree, std::size_t at )
{
    const auto &n = tree.nodes()[at];
    json out = json::object();
    if ( n.is_leaf() )
    {
        out["leaf"] = leaf_to_json( n.estimate );
        out["count"] = n.count;
        return out;
    }
    out["j"] = n.feature;
    out["p"] = n.threshold;
    out["count"] = n.count;
    out["left"] = node_to_json( tree, static_cast<std::size_t>( n.left ) );
    out["right"] = node_to_json( tree, static_cast<std::size_t>( n.right ) );
    return out;
}

template <typename Leaf>
Leaf leaf_from_json( const json &j );

template <>
inline Chromaticity leaf_from_json<Chromaticity>( const json &j )
{
    if ( !j.is_array() || j.size() != 3 )
    {
        throw Error( ErrorKind::ParseError, "leaf must be [r, g, b]" );
    }
    return Chromaticity::from_components(
        j[0].get<double>(), j[1].get<double>(), j[2].get<double>() );
}

template <>
inline double leaf_from_json<double>( const json &j )
{
    if ( !j.is_number() )
    {
        throw Error( ErrorKind::ParseError, "scalar leaf must be a number" );
    }
    return j.get<double>();
}

template <typename Leaf>
std::int32_t node_from_json( const json &j, std::vector<TreeNode<Leaf>> &nodes )
{
    if ( !j.is_object() )
    {
        throw Error( ErrorKind::ParseError, "tree node must be an object" );
    }
    const auto self = static_cast<std::int32_t>( nodes.size() );
    nodes.emplace_back();
    if ( j.contains( "leaf" ) )
    {
        nodes[self].estimate = leaf_from_json<Leaf>( j.at( "leaf" ) );
        nodes[self].count = j.at( "count" ).get<std::size_t>();
        return self;
    }
    nodes[self].feature = j.at( "j" ).get<std::int32_t>();
    nodes[self].threshold = j.at( "p" ).get<double>();
    nodes[self].count = j.value( "count", std::size_t{ 0 } );
    const auto l = node_from_json<Leaf>( j.at( "left" ), nodes );
    nodes[self].left = l;
    const auto r = node_from_json<Leaf>( j.at( "right" ), nodes );
    nodes[self].right = r;
    return self;
}

template <typename Leaf>
RegressionTree<Leaf> tree_from_json( const json &j, std::size_t feature_count )
{
    std::vector<TreeNode<Leaf>> nodes;
    node_from_json<Leaf>( j, nodes );
    return RegressionTree<Leaf>( std::move( nodes ), feature_count );
}

inline json params_to_json( const FitParams &p )
{
    return json{
        { "min_parent_size", p.min_parent_size },
        { "min_leaf_size", p.min_leaf_size },
        { "error_threshold", p.error_threshold },
        { "rand_pct", p.rand_pct },
    };
}

inline FitParams params_from_json( const json &j )
{
    FitParams p;
    p.min_parent_size = j.at( "min_parent_size" ).get<std::size_t>();
    p.min_leaf_size = j.at( "min_leaf_size" ).get<std::size_t>();
    p.error_threshold = j.at( "error_threshold" ).get<double>();
    p.rand_pct = j.at( "rand_pct" ).get<double>();
    return p;
}

inline const char *channel_name( Channel c ) { return c == Channel::R ? "r" : "g"; }

} // namespace detail

inline nlohmann::json to_json( const Ensemble &ens )
{
    using nlohmann::json;
    json out;
    out["format_version"] = MODEL_FORMAT_VERSION;
    out["kind"] = "multivariate";
    out["measure"] = std::string( measure_name( ens.measure.kind() ) );
    if ( ens.measure.kind() == MeasureKind::PerceptualEuclidean )
    {
        const auto &w = ens.measure.weights();
        out["weights"] = json::array( { w[0], w[1], w[2] } );
    }
    out["params"] = detail::params_to_json( ens.params );
    out["num_trees"] = ens.num_trees();
    out["master_seed"] = ens.master_seed;
    out["feature_names"] = ens.feature_names;
    out["trees"] = json::array();
    for ( const auto &t: ens.trees )
    {
        out["trees"].push_back( detail::node_to_json( t, 0 ) );
    }
    return out;
}

inline nlohmann::json to_json( const BaselineEnsemble &ens )
{
    using nlohmann::json;
    json out;
    out["format_version"] = MODEL_FORMAT_VERSION;
    out["kind"] = "baseline";
    out["measure"] = "squared_error";
    out["params"] = detail::params_to_json( ens.params );
    out["num_trees"] = ens.num_trees();
    out["num_repeats"] = ens.num_repeats;
    out["master_seed"] = ens.master_seed;
    out["feature_names"] = ens.feature_names;
    out["trees"] = json::array();
    for ( const auto &t: ens.trees )
    {
        out["trees"].push_back( json{
            { "response", detail::channel_name( t.response ) },
            { "features", json::array( { t.features[0], t.features[1] } ) },
            { "repeat", t.repeat },
            { "root", detail::node_to_json( t.tree, 0 ) },
        } );
    }
    return out;
}

inline nlohmann::json to_json( const Model &model )
{
    return std::visit( []( const auto &m ) { return to_json( m ); }, model );
}

inline Model model_from_json( const nlohmann::json &j )
{
    try
    {
        if ( j.at( "format_version" ).get<int>() != MODEL_FORMAT_VERSION )
        {
            throw Error( ErrorKind::ParseError, "unsupported model format_version" );
        }
        const auto kind = j.at( "kind" ).get<std::string>();
        const auto names = j.at( "feature_names" ).get<std::vector<std::string>>();
        const auto num_trees = j.at( "num_trees" ).get<std::size_t>();
        if ( j.at( "trees" ).size() != num_trees )
        {
            throw Error( ErrorKind::ParseError, "num_trees does not match the tree list" );
        }

        if ( kind == "multivariate" )
        {
            Ensemble ens;
            const auto mname = j.at( "measure" ).get<std::string>();
            const auto mk = parse_measure( mname );
            if ( !mk )
            {
                throw Error( ErrorKind::ParseError, "unknown measure '" + mname + "'" );
            }
            if ( *mk == MeasureKind::PerceptualEuclidean && j.contains( "weights" ) )
            {
                ens.measure = DistanceMeasure::perceptual(
                    j.at( "weights" ).get<std::array<double, 3>>() );
            }
            else
            {
                ens.measure = DistanceMeasure( *mk );
            }
            ens.params = detail::params_from_json( j.at( "params" ) );
            ens.master_seed = j.at( "master_seed" ).get<std::uint64_t>();
            ens.feature_names = names;
            for ( const auto &t: j.at( "trees" ) )
            {
                ens.trees.push_back( detail::tree_from_json<Chromaticity>( t, names.size() ) );
            }
            return ens;
        }
        if ( kind == "baseline" )
        {
            BaselineEnsemble ens;
            ens.params = detail::params_from_json( j.at( "params" ) );
            ens.num_repeats = j.at( "num_repeats" ).get<std::size_t>();
            ens.master_seed = j.at( "master_seed" ).get<std::uint64_t>();
            ens.feature_names = names;
            for ( const auto &t: j.at( "trees" ) )
            {
                BaselineTree bt;
                const auto resp = t.at( "response" ).get<std::string>();
                if ( resp != "r" && resp != "g" )
                {
                    throw Error( ErrorKind::ParseError, "baseline response must be r or g" );
                }
                bt.response = resp == "r" ? Channel::R : Channel::G;
                bt.features = t.at( "features" ).get<std::array<std::size_t, 2>>();
                bt.repeat = t.at( "repeat" ).get<std::size_t>();
                bt.tree = detail::tree_from_json<double>( t.at( "root" ), names.size() );
                ens.trees.push_back( std::move( bt ) );
            }
            return ens;
        }
        throw Error( ErrorKind::ParseError, "unknown model kind '" + kind + "'" );
    }
    catch ( const nlohmann::json::exception &e )
    {
        throw Error( ErrorKind::ParseError, e.what() );
    }
}

/// Serialized model text. Doubles use the shortest representation that
/// parses back to the same bits, so save/load/save is byte-stable.
inline std::string dump_model( const Model &model )
{
    return to_json( model ).dump( 1 ) + "\n";
}

inline void save_model( const std::string &path, const Model &model )
{
    std::ofstream out( path, std::ios::binary );
    if ( !out )
    {
        throw Error( ErrorKind::IoError, "cannot write '" + path + "'" );
    }
    out << dump_model( model );
    if ( !out )
    {
        throw Error( ErrorKind::IoError, "write failed for '" + path + "'" );
    }
}

inline Model parse_model( const std::string &text )
{
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse( text );
    }
    catch ( const nlohmann::json::exception &e )
    {
        throw Error( ErrorKind::ParseError, e.what() );
    }
    return model_from_json( j );
}

inline Model load_model( const std::string &path )
{
    std::ifstream in( path, std::ios::binary );
    if ( !in )
    {
        throw Error( ErrorKind::IoError, "cannot read '" + path + "'" );
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model( ss.str() );
}

} // namespace awb
