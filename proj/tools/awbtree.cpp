// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

// Command-line front end: feature extraction, synthetic data, training,
// prediction, cross-validation and the approximation-error study.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <awb/awb.hpp>

namespace fs = std::filesystem;

namespace
{

int g_verbosity = 0;

void log( int level, const std::string &msg )
{
    if ( g_verbosity >= level )
    {
        std::cerr << "[awbtree] " << msg << "\n";
    }
}

awb::DistanceMeasure measure_from( const std::string &name )
{
    const auto kind = awb::parse_measure( name );
    if ( !kind )
    {
        throw awb::Error( awb::ErrorKind::InvalidArgument, "unknown measure '" + name + "'" );
    }
    return awb::DistanceMeasure( *kind );
}

std::string lower( std::string s )
{
    std::transform( s.begin(), s.end(), s.begin(), []( unsigned char c ) { return std::tolower( c ); } );
    return s;
}

/// Ground truth CSV for `extract`: image_id,r,g,b.
std::map<std::string, awb::Chromaticity> load_truth_table( const std::string &path )
{
    const auto ds = awb::load_feature_csv( path );
    if ( !ds.has_truth() || !ds.feature_names.empty() )
    {
        throw awb::Error( awb::ErrorKind::ParseError, path + ": expected columns image_id,r,g,b" );
    }
    std::map<std::string, awb::Chromaticity> out;
    for ( std::size_t i = 0; i < ds.size(); ++i )
    {
        out.emplace( ds.ids[i], ds.truths[i] );
    }
    return out;
}

struct ExtractArgs
{
    std::string images, profile, masks, truth, out;
    bool sg = false;
    awb::FeatureOptions opts;
};

void run_extract( const ExtractArgs &a )
{
    const auto profile = awb::load_camera_profile( a.profile );
    std::map<std::string, std::vector<awb::MaskRect>> masks;
    if ( !a.masks.empty() )
    {
        masks = awb::load_masks( a.masks );
    }
    std::map<std::string, awb::Chromaticity> truths;
    if ( !a.truth.empty() )
    {
        truths = load_truth_table( a.truth );
    }

    std::vector<fs::path> files;
    for ( const auto &entry: fs::directory_iterator( a.images ) )
    {
        const auto ext = lower( entry.path().extension().string() );
        if ( entry.is_regular_file() && ( ext == ".png" || ext == ".ppm" ) )
        {
            files.push_back( entry.path() );
        }
    }
    std::sort( files.begin(), files.end() );
    if ( files.empty() )
    {
        throw awb::Error( awb::ErrorKind::IoError, "no .png or .ppm files in '" + a.images + "'" );
    }

    awb::FeatureDataset ds;
    ds.feature_names = awb::feature_names( a.sg );
    char buf[256];
    std::snprintf(
        buf, sizeof buf, "features histogram_bins=%zu kde_grid=%zu kde_bandwidth=%.6g sog_p=%.6g camera=%s",
        a.opts.histogram_bins, a.opts.kde_grid, a.opts.kde_bandwidth, a.opts.sog_p, profile.name.c_str() );
    ds.comments.emplace_back( buf );

    ds.ids.resize( files.size() );
    ds.features.resize( files.size() );
    awb::parallel_for( files.size(), [&]( std::size_t i ) {
        const auto id = files[i].stem().string();
        const auto it = masks.find( id );
        const std::span<const awb::MaskRect> rects =
            it == masks.end() ? std::span<const awb::MaskRect>{} : std::span<const awb::MaskRect>( it->second );
        const auto img = awb::load_image( files[i].string(), profile, rects );
        ds.ids[i] = id;
        ds.features[i] = awb::extract_features( img, a.sg, a.opts );
    } );
    if ( !truths.empty() )
    {
        for ( const auto &id: ds.ids )
        {
            const auto it = truths.find( id );
            if ( it == truths.end() )
            {
                throw awb::Error( awb::ErrorKind::ParseError, "no ground truth for image '" + id + "'" );
            }
            ds.truths.push_back( it->second );
        }
    }
    awb::save_feature_csv( a.out, ds );
    log( 1, "extracted features for " + std::to_string( ds.size() ) + " images" );
}

struct FitArgs
{
    std::string data, out, measure = "recovery";
    bool baseline = false;
    std::size_t trees = 30;
    double rand_pct = 10.0;
    double threshold = 0.5;
    std::size_t min_parent = 10;
    std::size_t min_leaf = 1;
    std::uint64_t seed = 1;

    awb::FitParams params() const
    {
        awb::FitParams p;
        p.rand_pct = rand_pct;
        p.error_threshold = threshold;
        p.min_parent_size = min_parent;
        p.min_leaf_size = min_leaf;
        p.seed = seed;
        p.validate();
        return p;
    }
};

void run_train( const FitArgs &a )
{
    const auto ds = awb::load_feature_csv( a.data );
    const auto examples = ds.labeled();
    const auto params = a.params();
    awb::Model model;
    if ( a.baseline )
    {
        model = awb::train_baseline( examples, params, a.trees, a.seed, ds.feature_names );
    }
    else
    {
        model = awb::train( examples, measure_from( a.measure ), params, a.trees, a.seed, ds.feature_names );
    }
    awb::save_model( a.out, model );
    std::visit(
        [&]( const auto &m ) {
            const auto r = awb::tree_size_report( m );
            log( 1,
                 "trained " + std::to_string( r.num_trees ) + " trees, " + std::to_string( r.total_nodes ) +
                     " nodes" );
        },
        model );
}

struct PredictArgs
{
    std::string model, data, out;
};

void run_predict( const PredictArgs &a )
{
    const auto model = awb::load_model( a.model );
    const auto ds = awb::load_feature_csv( a.data );

    const bool baseline = std::holds_alternative<awb::BaselineEnsemble>( model );
    const awb::DistanceMeasure measure = baseline ? awb::DistanceMeasure( awb::MeasureKind::Recovery )
                                                  : std::get<awb::Ensemble>( model ).measure;
    std::size_t clamped = 0;
    std::string out = ds.has_truth() ? "image_id,r,g,b,error_measure,error\n" : "image_id,r,g,b\n";
    for ( std::size_t i = 0; i < ds.size(); ++i )
    {
        awb::Chromaticity p;
        if ( baseline )
        {
            const auto bp = awb::predict_baseline_detailed( std::get<awb::BaselineEnsemble>( model ), ds.features[i] );
            clamped += bp.clamped ? 1 : 0;
            p = bp.estimate;
        }
        else
        {
            p = awb::predict( std::get<awb::Ensemble>( model ), ds.features[i] );
        }
        out += ds.ids[i];
        for ( double v: p.components() )
        {
            out += "," + awb::detail::format_sig( v, 17 );
        }
        if ( ds.has_truth() )
        {
            out += "," + std::string( awb::measure_name( measure.kind() ) ) + "," +
                   awb::detail::format_sig( awb::distance( measure, p, ds.truths[i] ), 17 );
        }
        out += "\n";
    }
    awb::detail::write_text( a.out, out );
    if ( clamped > 0 )
    {
        std::cerr << "[awbtree] warning: " << clamped << " baseline predictions were clamped onto the simplex\n";
    }
}

struct CrossvalArgs
{
    FitArgs fit;
    std::size_t folds = 10;
    std::size_t runs = 30;
    std::string json;
};

void run_crossval( const CrossvalArgs &a )
{
    const auto ds = awb::load_feature_csv( a.fit.data );
    const auto examples = ds.labeled();
    awb::CvConfig cfg;
    cfg.method = a.fit.baseline ? awb::Method::Baseline : awb::Method::Multivariate;
    cfg.measure = measure_from( a.fit.measure );
    cfg.params = a.fit.params();
    cfg.num_trees = a.fit.trees;
    cfg.plan = { a.folds, a.runs, a.fit.seed };
    const auto res = awb::cross_validate( examples, cfg );
    awb::detail::write_text( a.fit.out, awb::format_cv_report_csv( std::span( &res, 1 ) ) );
    if ( !a.json.empty() )
    {
        awb::detail::write_text( a.json, awb::cv_report_json( res, ds.ids ).dump( 1 ) + "\n" );
    }
    if ( res.clamp_count > 0 )
    {
        std::cerr << "[awbtree] warning: " << res.clamp_count
                  << " baseline predictions were clamped onto the simplex\n";
    }
}

struct StudyArgs
{
    std::string data, out, measure = "euclidean";
    std::size_t samples = 1000;
    std::size_t max_size = 200;
    std::uint64_t seed = 1;
    bool uniform = false;
};

void run_study( const StudyArgs &a )
{
    const auto ds = awb::load_feature_csv( a.data );
    if ( !ds.has_truth() )
    {
        throw awb::Error( awb::ErrorKind::ParseError, "approx-error needs ground-truth columns" );
    }
    awb::StudyParams p;
    p.samples = a.samples;
    p.max_size = a.max_size;
    p.seed = a.seed;
    p.mode = a.uniform ? awb::SubsetMode::Uniform : awb::SubsetMode::Local;
    const auto samples = awb::approx_error_study( ds.truths, measure_from( a.measure ), p );
    const auto summary = awb::summarize_study( samples );
    awb::detail::write_text( a.out, awb::format_study_csv( samples, summary ) );
    log( 1, "median relative error " + awb::detail::format_sig( summary.median * 100.0, 4 ) + "%" );
}

struct SynthArgs
{
    awb::SynthParams p;
    std::string out;
};

struct SizeArgs
{
    std::string model, out;
};

void run_size( const SizeArgs &a )
{
    const auto model = awb::load_model( a.model );
    std::string text;
    if ( const auto *mv = std::get_if<awb::Ensemble>( &model ) )
    {
        text = awb::format_size_report_csv( "multivariate", awb::measure_name( mv->measure.kind() ), awb::tree_size_report( *mv ) );
    }
    else
    {
        text = awb::format_size_report_csv( "baseline", "all", awb::tree_size_report( std::get<awb::BaselineEnsemble>( model ) ) );
    }
    if ( a.out.empty() )
    {
        std::cout << text;
    }
    else
    {
        awb::detail::write_text( a.out, text );
    }
}

void add_fit_options( CLI::App *cmd, FitArgs &f, bool with_defaults_for_crossval )
{
    const std::vector<std::string> measures{ "recovery", "reproduction", "taxicab", "euclidean", "ped" };
    cmd->add_option( "--data", f.data, "Feature CSV with ground truth" )->required()->check( CLI::ExistingFile );
    cmd->add_option( "--measure", f.measure, "Distance measure the trees minimize" )
        ->check( CLI::IsMember( measures ) )
        ->capture_default_str();
    cmd->add_flag( "--baseline", f.baseline, "Univariate squared-error baseline instead" );
    cmd->add_option( "--trees", f.trees, "Trees per ensemble (baseline: repeats per feature pair)" )
        ->check( CLI::PositiveNumber )
        ->capture_default_str();
    cmd->add_option( "--rand-pct", f.rand_pct, "Split randomization, percent of the best cost" )
        ->check( CLI::NonNegativeNumber )
        ->capture_default_str();
    cmd->add_option( "--threshold", f.threshold, "Split a node only if its average error exceeds this" )
        ->check( CLI::NonNegativeNumber )
        ->capture_default_str();
    cmd->add_option( "--min-parent", f.min_parent, "Minimum examples at a split node" )->capture_default_str();
    cmd->add_option( "--min-leaf", f.min_leaf, "Minimum examples per leaf" )
        ->check( CLI::PositiveNumber )
        ->capture_default_str();
    cmd->add_option( "--seed", f.seed, "Master seed" )->capture_default_str();
    cmd->add_option( "--out", f.out, with_defaults_for_crossval ? "Report CSV" : "Model JSON" )->required();
}

} // namespace

int main( int argc, char **argv )
{
    CLI::App app{ "awbtree: illuminant estimation with multivariate regression tree ensembles" };
    app.set_config( "--config", "", "Read options from a TOML/INI file" );
    app.add_flag( "-v,--verbose", g_verbosity, "Increase log verbosity" );
    app.require_subcommand( 1 );
    app.fallthrough();

    ExtractArgs ex;
    auto *extract = app.add_subcommand( "extract", "Compute chromaticity features from linear images" );
    extract->add_option( "--images", ex.images, "Directory of PNG/PPM images" )->required()->check( CLI::ExistingDirectory );
    extract->add_option( "--profile", ex.profile, "Camera profile JSON" )->required()->check( CLI::ExistingFile );
    extract->add_option( "--masks", ex.masks, "Mask rectangles JSON keyed by image id" )->check( CLI::ExistingFile );
    extract->add_option( "--truth", ex.truth, "Ground truth CSV (image_id,r,g,b)" )->check( CLI::ExistingFile );
    extract->add_flag( "--sg", ex.sg, "Append the shades-of-gray feature pair" );
    extract->add_option( "--bins", ex.opts.histogram_bins, "Histogram bins per channel" )->capture_default_str();
    extract->add_option( "--kde-grid", ex.opts.kde_grid, "KDE grid cells per axis" )->capture_default_str();
    extract->add_option( "--kde-bandwidth", ex.opts.kde_bandwidth, "KDE bandwidth (chromaticity units)" )->capture_default_str();
    extract->add_option( "--out", ex.out, "Feature CSV" )->required();

    SynthArgs sy;
    auto *synth = app.add_subcommand( "synth", "Generate a synthetic feature dataset" );
    synth->add_option( "--n", sy.p.n, "Number of examples" )->required()->check( CLI::PositiveNumber );
    synth->add_option( "--seed", sy.p.seed, "Seed" )->required();
    synth->add_option( "--noise", sy.p.noise_sigma, "Feature noise sigma" )->check( CLI::NonNegativeNumber )->capture_default_str();
    synth->add_option( "--correlation", sy.p.correlation, "Correlation of r/g feature noise" )
        ->check( CLI::Range( -1.0, 1.0 ) )
        ->capture_default_str();
    synth->add_option( "--failure-rate", sy.p.failure_rate, "Probability that a feature pair is unrelated to the illuminant" )
        ->check( CLI::Range( 0.0, 1.0 ) )
        ->capture_default_str();
    synth->add_flag( "--sg", sy.p.include_sg, "Include a fifth feature pair" );
    synth->add_option( "--out", sy.out, "Feature CSV" )->required();

    FitArgs tr;
    auto *train = app.add_subcommand( "train", "Train an ensemble" );
    add_fit_options( train, tr, false );

    PredictArgs pr;
    auto *predict = app.add_subcommand( "predict", "Predict illuminants with a trained model" );
    predict->add_option( "--model", pr.model, "Model JSON" )->required()->check( CLI::ExistingFile );
    predict->add_option( "--data", pr.data, "Feature CSV" )->required()->check( CLI::ExistingFile );
    predict->add_option( "--out", pr.out, "Predictions CSV" )->required();

    CrossvalArgs cv;
    auto *crossval = app.add_subcommand( "crossval", "Repeated k-fold cross-validation" );
    add_fit_options( crossval, cv.fit, true );
    crossval->add_option( "--folds", cv.folds, "Folds" )->check( CLI::Range( 2, 1000000 ) )->capture_default_str();
    crossval->add_option( "--runs", cv.runs, "Repetitions" )->check( CLI::PositiveNumber )->capture_default_str();
    crossval->add_option( "--json", cv.json, "Also write a JSON report with per-image errors" );

    StudyArgs st;
    auto *study = app.add_subcommand( "approx-error", "Approximate vs numerical minimizer on ground-truth subsets" );
    study->add_option( "--data", st.data, "Feature CSV with ground truth" )->required()->check( CLI::ExistingFile );
    study->add_option( "--measure", st.measure, "Distance measure" )
        ->check( CLI::IsMember( { "recovery", "reproduction", "taxicab", "euclidean", "ped" } ) )
        ->capture_default_str();
    study->add_option( "--samples", st.samples, "Number of target sets" )->check( CLI::PositiveNumber )->capture_default_str();
    study->add_option( "--max-size", st.max_size, "Largest target set" )->check( CLI::PositiveNumber )->capture_default_str();
    study->add_option( "--seed", st.seed, "Seed" )->capture_default_str();
    study->add_flag( "--uniform", st.uniform, "Draw subsets uniformly instead of as neighborhoods" );
    study->add_option( "--out", st.out, "Study CSV" )->required();

    SizeArgs sz;
    auto *size = app.add_subcommand( "size", "Report tree and ensemble node counts of a model" );
    size->add_option( "--model", sz.model, "Model JSON" )->required()->check( CLI::ExistingFile );
    size->add_option( "--out", sz.out, "CSV output (stdout when omitted)" );

    try
    {
        app.parse( argc, argv );
    }
    catch ( const CLI::ParseError &e )
    {
        const int rc = app.exit( e );
        return rc == 0 ? 0 : 2;
    }

    try
    {
        if ( *extract )
        {
            run_extract( ex );
        }
        else if ( *synth )
        {
            awb::save_feature_csv( sy.out, awb::make_synthetic( sy.p ) );
        }
        else if ( *train )
        {
            run_train( tr );
        }
        else if ( *predict )
        {
            run_predict( pr );
        }
        else if ( *crossval )
        {
            run_crossval( cv );
        }
        else if ( *study )
        {
            run_study( st );
        }
        else if ( *size )
        {
            run_size( sz );
        }
    }
    catch ( const awb::Error &e )
    {
        std::cerr << "awbtree: " << e.what() << "\n";
        return 1;
    }
    catch ( const std::exception &e )
    {
        std::cerr << "awbtree: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
