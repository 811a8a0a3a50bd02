// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chroma.hpp"
#include "error.hpp"
#include "image.hpp"
#include "tree.hpp"

namespace awb
{

/// Feature table as stored in the feature CSV. `truths` is empty when the
/// file has no r,g,b columns.
struct FeatureDataset
{
    std::vector<std::string> comments;
    std::vector<std::string> feature_names;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> features;
    std::vector<Chromaticity> truths;

    std::size_t size() const noexcept { return ids.size(); }
    bool has_truth() const noexcept { return !truths.empty(); }

    std::vector<LabeledExample> labeled() const
    {
        if ( !has_truth() )
        {
            throw Error( ErrorKind::ParseError, "dataset has no ground-truth columns" );
        }
        std::vector<LabeledExample> out;
        out.reserve( size() );
        for ( std::size_t i = 0; i < size(); ++i )
        {
            out.push_back( { features[i], truths[i] } );
        }
        return out;
    }
};

namespace detail
{

inline std::string format_sig( double v, int digits )
{
    char buf[64];
    std::snprintf( buf, sizeof buf, "%.*g", digits, v );
    return buf;
}

inline std::vector<std::string_view> split_commas( std::string_view line )
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while ( true )
    {
        const auto pos = line.find( ',', start );
        out.push_back( line.substr( start, pos == std::string_view::npos ? pos : pos - start ) );
        if ( pos == std::string_view::npos )
        {
            return out;
        }
        start = pos + 1;
    }
}

inline double parse_double( std::string_view s, std::size_t line_no )
{
    while ( !s.empty() && ( s.front() == ' ' ) )
    {
        s.remove_prefix( 1 );
    }
    while ( !s.empty() && ( s.back() == ' ' || s.back() == '\r' ) )
    {
        s.remove_suffix( 1 );
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars( s.data(), s.data() + s.size(), v );
    if ( ec != std::errc{} || ptr != s.data() + s.size() )
    {
        throw Error(
            ErrorKind::ParseError,
            "line " + std::to_string( line_no ) + ": '" + std::string( s ) + "' is not a number" );
    }
    return v;
}

inline std::string read_text( const std::string &path )
{
    std::ifstream in( path, std::ios::binary );
    if ( !in )
    {
        throw Error( ErrorKind::IoError, "cannot read '" + path + "'" );
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text( const std::string &path, const std::string &text )
{
    std::ofstream out( path, std::ios::binary );
    if ( !out )
    {
        throw Error( ErrorKind::IoError, "cannot write '" + path + "'" );
    }
    out << text;
    if ( !out )
    {
        throw Error( ErrorKind::IoError, "write failed for '" + path + "'" );
    }
}

} // namespace detail

/// Feature CSV text: `# ` comment lines, then
/// image_id,<feature columns>[,r,g,b], values with 9 significant digits.
inline std::string format_feature_csv( const FeatureDataset &ds )
{
    std::string out;
    for ( const auto &c: ds.comments )
    {
        out += "# " + c + "\n";
    }
    out += "image_id";
    for ( const auto &n: ds.feature_names )
    {
        out += "," + n;
    }
    if ( ds.has_truth() )
    {
        out += ",r,g,b";
    }
    out += "\n";
    for ( std::size_t i = 0; i < ds.size(); ++i )
    {
        out += ds.ids[i];
        for ( double v: ds.features[i] )
        {
            out += "," + detail::format_sig( v, 9 );
        }
        if ( ds.has_truth() )
        {
            for ( double v: ds.truths[i].components() )
            {
                out += "," + detail::format_sig( v, 9 );
            }
        }
        out += "\n";
    }
    return out;
}

/// Parses feature CSV text. Ground truth columns, when present, are
/// renormalized onto the simplex.
inline FeatureDataset parse_feature_csv( std::string_view text )
{
    FeatureDataset ds;
    bool have_header = false;
    bool truth_cols = false;
    std::size_t feature_cols = 0;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while ( pos < text.size() )
    {
        auto end = text.find( '\n', pos );
        if ( end == std::string_view::npos )
        {
            end = text.size();
        }
        auto line = text.substr( pos, end - pos );
        pos = end + 1;
        ++line_no;
        if ( !line.empty() && line.back() == '\r' )
        {
            line.remove_suffix( 1 );
        }
        if ( line.empty() )
        {
            continue;
        }
        if ( line.front() == '#' )
        {
            line.remove_prefix( 1 );
            if ( !line.empty() && line.front() == ' ' )
            {
                line.remove_prefix( 1 );
            }
            ds.comments.emplace_back( line );
            continue;
        }
        const auto cells = detail::split_commas( line );
        if ( !have_header )
        {
            if ( cells.empty() || cells.front() != "image_id" )
            {
                throw Error( ErrorKind::ParseError, "feature CSV header must start with image_id" );
            }
            std::vector<std::string> cols( cells.begin() + 1, cells.end() );
            truth_cols = cols.size() >= 3 && cols[cols.size() - 3] == "r" &&
                         cols[cols.size() - 2] == "g" && cols.back() == "b";
            if ( truth_cols )
            {
                cols.resize( cols.size() - 3 );
            }
            ds.feature_names = cols;
            feature_cols = cols.size();
            have_header = true;
            continue;
        }
        const std::size_t m = feature_cols;
        const bool truth = truth_cols;
        const std::size_t expected = 1 + m + ( truth ? 3 : 0 );
        if ( cells.size() != expected )
        {
            throw Error(
                ErrorKind::ParseError,
                "line " + std::to_string( line_no ) + ": expected " + std::to_string( expected ) +
                    " columns, found " + std::to_string( cells.size() ) );
        }
        ds.ids.emplace_back( cells[0] );
        std::vector<double> x;
        x.reserve( m );
        for ( std::size_t j = 0; j < m; ++j )
        {
            x.push_back( detail::parse_double( cells[1 + j], line_no ) );
        }
        ds.features.push_back( std::move( x ) );
        if ( truth )
        {
            ds.truths.push_back( normalize(
                detail::parse_double( cells[1 + m], line_no ),
                detail::parse_double( cells[2 + m], line_no ),
                detail::parse_double( cells[3 + m], line_no ) ) );
        }
    }
    if ( !have_header )
    {
        throw Error( ErrorKind::ParseError, "feature CSV has no header" );
    }
    return ds;
}

inline FeatureDataset load_feature_csv( const std::string &path )
{
    return parse_feature_csv( detail::read_text( path ) );
}

inline void save_feature_csv( const std::string &path, const FeatureDataset &ds )
{
    detail::write_text( path, format_feature_csv( ds ) );
}

/// Camera profile JSON: {name, darkness_level, saturation_level}.
inline CameraProfile load_camera_profile( const std::string &path )
{
    try
    {
        const auto j = nlohmann::json::parse( detail::read_text( path ) );
        CameraProfile p;
        p.name = j.value( "name", std::string{} );
        p.darkness_level = j.at( "darkness_level" ).get<double>();
        p.saturation_level = j.at( "saturation_level" ).get<double>();
        p.validate();
        return p;
    }
    catch ( const nlohmann::json::exception &e )
    {
        throw Error( ErrorKind::ParseError, path + ": " + e.what() );
    }
}

/// Mask file JSON: {"<image_id>": [{x, y, w, h}, ...], ...}.
inline std::map<std::string, std::vector<MaskRect>> load_masks( const std::string &path )
{
    try
    {
        const auto j = nlohmann::json::parse( detail::read_text( path ) );
        std::map<std::string, std::vector<MaskRect>> out;
        for ( const auto &[id, rects]: j.items() )
        {
            auto &list = out[id];
            for ( const auto &r: rects )
            {
                list.push_back(
                    { r.at( "x" ).get<std::int64_t>(),
                      r.at( "y" ).get<std::int64_t>(),
                      r.at( "w" ).get<std::int64_t>(),
                      r.at( "h" ).get<std::int64_t>() } );
            }
        }
        return out;
    }
    catch ( const nlohmann::json::exception &e )
    {
        throw Error( ErrorKind::ParseError, path + ": " + e.what() );
    }
}

} // namespace awb
