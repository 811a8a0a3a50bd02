// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chroma.hpp"
#include "dataset.hpp"
#include "eval.hpp"
#include "study.hpp"

namespace awb
{

/// `measure,method,mean,median,trimean,best25,worst25,scale`, one row per
/// measure; perceptual Euclidean rows are multiplied by 100 and say so in
/// the scale column.
inline std::string format_cv_report_csv( std::span<const CvResult> results )
{
    std::string out = "measure,method,mean,median,trimean,best25,worst25,scale\n";
    for ( const auto &res: results )
    {
        for ( std::size_t m = 0; m < all_measure_kinds.size(); ++m )
        {
            const auto kind = all_measure_kinds[m];
            const double scale = report_scale( kind );
            const auto &s = res.per_measure[m];
            out += std::string( measure_name( kind ) ) + "," + method_name( res.method );
            for ( double v: { s.mean, s.median, s.trimean, s.best25_mean, s.worst25_mean } )
            {
                out += "," + detail::format_sig( v * scale, 9 );
            }
            out += "," + detail::format_sig( scale, 9 ) + "\n";
        }
    }
    return out;
}

/// JSON report: the same summary rows plus every per-image held-out error.
inline nlohmann::json cv_report_json( const CvResult &res, std::span<const std::string> ids = {} )
{
    using nlohmann::json;
    json out;
    out["method"] = method_name( res.method );
    out["fit_measure"] = std::string( measure_name( res.fit_measure ) );
    out["clamp_count"] = res.clamp_count;
    out["summary"] = json::array();
    for ( std::size_t m = 0; m < all_measure_kinds.size(); ++m )
    {
        const auto kind = all_measure_kinds[m];
        const auto &s = res.per_measure[m];
        const double scale = report_scale( kind );
        out["summary"].push_back( json{
            { "measure", std::string( measure_name( kind ) ) },
            { "mean", s.mean * scale },
            { "median", s.median * scale },
            { "trimean", s.trimean * scale },
            { "best25", s.best25_mean * scale },
            { "worst25", s.worst25_mean * scale },
            { "scale", scale },
            { "n", s.n },
        } );
    }
    out["per_image"] = json::array();
    for ( const auto &r: res.records )
    {
        json e = json::object();
        for ( std::size_t m = 0; m < all_measure_kinds.size(); ++m )
        {
            e[std::string( measure_name( all_measure_kinds[m] ) )] = r.errors[m];
        }
        json row{
            { "run", r.run },
            { "fold", r.fold },
            { "index", r.index },
            { "prediction", json::array( { r.prediction.r(), r.prediction.g(), r.prediction.b() } ) },
            { "errors", e },
        };
        if ( r.index < ids.size() )
        {
            row["image_id"] = ids[r.index];
        }
        out["per_image"].push_back( std::move( row ) );
    }
    return out;
}

/// `method,measure,tree,ensemble`: mean nodes per tree and total nodes.
inline std::string format_size_report_csv(
    std::string_view method, std::string_view measure, const TreeSizeReport &r )
{
    return "method,measure,tree,ensemble\n" + std::string( method ) + "," + std::string( measure ) +
           "," + detail::format_sig( r.mean_nodes_per_tree, 9 ) + "," + std::to_string( r.total_nodes ) +
           "\n";
}

/// `sample,size,approx_cost,exact_cost,rel_error` rows followed by summary
/// rows named median, p75, p95 and max (only rel_error filled).
inline std::string format_study_csv( std::span<const StudySample> samples, const StudySummary &sum )
{
    std::string out = "sample,size,approx_cost,exact_cost,rel_error\n";
    for ( std::size_t i = 0; i < samples.size(); ++i )
    {
        const auto &s = samples[i];
        out += std::to_string( i ) + "," + std::to_string( s.size ) + "," +
               detail::format_sig( s.approx_cost, 12 ) + "," + detail::format_sig( s.exact_cost, 12 ) +
               "," + detail::format_sig( s.rel_error, 9 ) + "\n";
    }
    const std::pair<const char *, double> rows[] = {
        { "median", sum.median }, { "p75", sum.p75 }, { "p95", sum.p95 }, { "max", sum.max } };
    for ( const auto &[name, v]: rows )
    {
        out += std::string( name ) + ",,,," + detail::format_sig( v, 9 ) + "\n";
    }
    return out;
}

} // namespace awb
