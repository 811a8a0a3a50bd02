// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "chroma.hpp"
#include "error.hpp"
#include "minimize.hpp"
#include "rng.hpp"

namespace awb
{

/// One training image: a feature vector and its ground-truth illuminant.
struct LabeledExample
{
    std::vector<double> features;
    Chromaticity truth;
};

/// Tree-growing parameters. Defaults are the published settings.
struct FitParams
{
    std::size_t min_parent_size = 10;
    std::size_t min_leaf_size = 1;
    /// In the fitted measure's own units (degrees for the angular ones).
    double error_threshold = 0.5;
    /// Splits within this percentage of the best split cost are drawn at random.
    double rand_pct = 10.0;
    std::uint64_t seed = 0;

    void validate() const
    {
        if ( min_leaf_size < 1 )
        {
            throw Error( ErrorKind::InvalidArgument, "min_leaf_size must be >= 1" );
        }
        if ( min_parent_size < 2 * min_leaf_size )
        {
            throw Error(
                ErrorKind::InvalidArgument, "min_parent_size must be >= 2 * min_leaf_size" );
        }
        if ( !( rand_pct >= 0.0 ) )
        {
            throw Error( ErrorKind::InvalidArgument, "rand_pct must be >= 0" );
        }
        if ( !( error_threshold >= 0.0 ) )
        {
            throw Error( ErrorKind::InvalidArgument, "error_threshold must be >= 0" );
        }
    }

    bool operator==( const FitParams & ) const = default;
};

/// Node of a binary regression tree. Internal nodes branch left on
/// x[feature] <= threshold; leaves carry the estimate and training count.
template <typename Leaf>
struct TreeNode
{
    static constexpr std::int32_t no_child = -1;

    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = no_child;
    std::int32_t right = no_child;
    Leaf estimate{};
    std::size_t count = 0;

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==( const TreeNode & ) const = default;
};

/// Regression tree stored as a flat preorder node array (root at index 0).
template <typename Leaf>
class RegressionTree
{
public:
    using node_type = TreeNode<Leaf>;

    RegressionTree() = default;
    RegressionTree( std::vector<node_type> nodes, std::size_t feature_count )
        : m_nodes( std::move( nodes ) ), m_feature_count( feature_count )
    {
        validate();
    }

    const std::vector<node_type> &nodes() const noexcept { return m_nodes; }
    const node_type &root() const { return m_nodes.front(); }
    std::size_t feature_count() const noexcept { return m_feature_count; }
    std::size_t node_count() const noexcept { return m_nodes.size(); }

    std::size_t leaf_count() const
    {
        return static_cast<std::size_t>( std::count_if(
            m_nodes.begin(), m_nodes.end(), []( const node_type &n ) { return n.is_leaf(); } ) );
    }

    /// Number of edges on the longest root-to-leaf path.
    std::size_t depth() const { return depth_from( 0 ); }

    /// Index of the leaf reached by `x`.
    std::size_t leaf_index( std::span<const double> x ) const
    {
        if ( x.size() != m_feature_count )
        {
            throw Error(
                ErrorKind::DimensionError,
                "expected " + std::to_string( m_feature_count ) + " features, got " +
                    std::to_string( x.size() ) );
        }
        std::size_t at = 0;
        while ( !m_nodes[at].is_leaf() )
        {
            const auto &n = m_nodes[at];
            at = static_cast<std::size_t>(
                x[static_cast<std::size_t>( n.feature )] <= n.threshold ? n.left : n.right );
        }
        return at;
    }

    const Leaf &predict( std::span<const double> x ) const
    {
        return m_nodes[leaf_index( x )].estimate;
    }

    bool operator==( const RegressionTree & ) const = default;

private:
    void validate() const
    {
        if ( m_nodes.empty() )
        {
            throw Error( ErrorKind::InvalidArgument, "tree has no nodes" );
        }
        const auto n = static_cast<std::int32_t>( m_nodes.size() );
        // Children come after their parent, so no cycles.
        for ( std::int32_t i = 0; i < n; ++i )
        {
            const auto &node = m_nodes[static_cast<std::size_t>( i )];
            if ( node.is_leaf() )
            {
                continue;
            }
            if ( node.left <= i || node.left >= n || node.right <= i || node.right >= n ||
                 static_cast<std::size_t>( node.feature ) >= m_feature_count )
            {
                throw Error( ErrorKind::InvalidArgument, "malformed tree node" );
            }
        }
    }

    std::size_t depth_from( std::size_t at ) const
    {
        const auto &n = m_nodes[at];
        if ( n.is_leaf() )
        {
            return 0;
        }
        return 1 + std::max(
                       depth_from( static_cast<std::size_t>( n.left ) ),
                       depth_from( static_cast<std::size_t>( n.right ) ) );
    }

    std::vector<node_type> m_nodes;
    std::size_t m_feature_count = 0;
};

using MvTree = RegressionTree<Chromaticity>;
using UvTree = RegressionTree<double>;

/// Column-major copy of a dataset's features.
class FeatureTable
{
public:
    FeatureTable() = default;

    template <typename Rows, typename Proj>
    FeatureTable( const Rows &rows, Proj proj )
    {
        m_rows = std::size( rows );
        if ( m_rows == 0 )
        {
            return;
        }
        m_cols = std::invoke( proj, *std::begin( rows ) ).size();
        m_data.resize( m_rows * m_cols );
        std::size_t i = 0;
        for ( const auto &row: rows )
        {
            const auto &x = std::invoke( proj, row );
            if ( x.size() != m_cols )
            {
                throw Error( ErrorKind::DimensionError, "inconsistent feature counts" );
            }
            for ( std::size_t j = 0; j < m_cols; ++j )
            {
                m_data[j * m_rows + i] = x[j];
            }
            ++i;
        }
    }

    explicit FeatureTable( std::span<const LabeledExample> examples )
        : FeatureTable( examples, &LabeledExample::features )
    {}

    std::size_t rows() const noexcept { return m_rows; }
    std::size_t cols() const noexcept { return m_cols; }
    double operator()( std::size_t i, std::size_t j ) const { return m_data[j * m_rows + i]; }

private:
    std::size_t m_rows = 0;
    std::size_t m_cols = 0;
    std::vector<double> m_data;
};

/// A candidate partition of a node on one feature.
struct SplitCandidate
{
    std::size_t feature = 0;
    double threshold = 0.0;
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
};

/// The split picked for a node and its summed child cost.
struct SplitChoice
{
    std::size_t feature = 0;
    double threshold = 0.0;
    double cost = 0.0;
};

namespace detail
{

/// Row indices sorted by feature `j` (ties by index).
inline std::vector<std::size_t> sorted_by_feature(
    const FeatureTable &table, std::span<const std::size_t> rows, std::size_t j )
{
    std::vector<std::size_t> sorted( rows.begin(), rows.end() );
    std::sort( sorted.begin(), sorted.end(), [&]( std::size_t a, std::size_t b ) {
        const double xa = table( a, j );
        const double xb = table( b, j );
        return xa < xb || ( xa == xb && a < b );
    } );
    return sorted;
}

/// Cut positions k (left = sorted[0, k)) between distinct values that leave
/// at least `min_leaf` rows on each side, with the midpoint threshold.
inline std::vector<std::pair<std::size_t, double>> cut_positions(
    const FeatureTable &table,
    std::span<const std::size_t> sorted,
    std::size_t j,
    std::size_t min_leaf )
{
    std::vector<std::pair<std::size_t, double>> cuts;
    const std::size_t n = sorted.size();
    if ( n < 2 * min_leaf || n < 2 )
    {
        return cuts;
    }
    for ( std::size_t k = std::max<std::size_t>( min_leaf, 1 ); k + min_leaf <= n; ++k )
    {
        const double lo = table( sorted[k - 1], j );
        const double hi = table( sorted[k], j );
        if ( lo < hi )
        {
            double p = lo + 0.5 * ( hi - lo );
            if ( !( p < hi ) )
            {
                p = lo;
            }
            cuts.emplace_back( k, p );
        }
    }
    return cuts;
}

/// Running median of a stream of doubles using two heaps.
class RunningMedian
{
public:
    void push( double v )
    {
        if ( m_low.empty() || v <= m_low.top() )
        {
            m_low.push( v );
        }
        else
        {
            m_high.push( v );
        }
        if ( m_low.size() > m_high.size() + 1 )
        {
            m_high.push( m_low.top() );
            m_low.pop();
        }
        else if ( m_high.size() > m_low.size() )
        {
            m_low.push( m_high.top() );
            m_high.pop();
        }
    }

    double median() const
    {
        if ( m_low.size() > m_high.size() )
        {
            return m_low.top();
        }
        return 0.5 * ( m_low.top() + m_high.top() );
    }

private:
    std::priority_queue<double> m_low;
    std::priority_queue<double, std::vector<double>, std::greater<>> m_high;
};

} // namespace detail

/// All midpoint splits of `examples` on feature `j` that keep at least
/// `min_leaf_size` examples per side. Branching is x <= p left, x > p right.
inline std::vector<SplitCandidate> enumerate_splits(
    std::span<const LabeledExample> examples, std::size_t j, std::size_t min_leaf_size = 1 )
{
    const FeatureTable table( examples );
    if ( examples.size() < 2 )
    {
        return {};
    }
    if ( j >= table.cols() )
    {
        throw Error( ErrorKind::DimensionError, "feature index out of range" );
    }
    std::vector<std::size_t> rows( examples.size() );
    std::iota( rows.begin(), rows.end(), std::size_t{ 0 } );
    const auto sorted = detail::sorted_by_feature( table, rows, j );

    std::vector<SplitCandidate> out;
    for ( const auto &[k, p]: detail::cut_positions( table, sorted, j, min_leaf_size ) )
    {
        SplitCandidate c;
        c.feature = j;
        c.threshold = p;
        c.left.assign( sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>( k ) );
        c.right.assign( sorted.begin() + static_cast<std::ptrdiff_t>( k ), sorted.end() );
        std::sort( c.left.begin(), c.left.end() );
        std::sort( c.right.begin(), c.right.end() );
        out.push_back( std::move( c ) );
    }
    return out;
}

/// Leaf model used by the tree fitter. `fit_node` labels a set of rows and
/// returns its cost; `split_costs` returns the summed child cost of each cut
/// of rows already sorted on one feature.
template <typename P>
concept LeafPolicy = requires(
    const P &p,
    std::span<const std::size_t> rows,
    std::span<const std::pair<std::size_t, double>> cuts ) {
    typename P::leaf_type;
    { p.fit_node( rows ) } -> std::same_as<std::pair<typename P::leaf_type, double>>;
    { p.split_costs( rows, cuts ) } -> std::same_as<std::vector<double>>;
    { p.should_stop( rows.size(), 0.0 ) } -> std::convertible_to<bool>;
};

enum class LeafMinimizer
{
    Approx,
    Exact,
};

/// Multivariate leaves minimizing a white-balance distance measure.
class MultivariatePolicy
{
public:
    using leaf_type = Chromaticity;

    MultivariatePolicy(
        std::span<const Chromaticity> truths,
        DistanceMeasure measure,
        double error_threshold,
        LeafMinimizer minimizer = LeafMinimizer::Approx )
        : m_truths( truths )
        , m_measure( measure )
        , m_error_threshold( error_threshold )
        , m_minimizer( minimizer )
    {}

    std::pair<Chromaticity, double> fit_node( std::span<const std::size_t> rows ) const
    {
        const auto targets = gather( rows );
        const auto res = minimize( targets );
        return { res.estimate, res.cost };
    }

    bool should_stop( std::size_t count, double node_cost ) const
    {
        return node_cost / static_cast<double>( count ) <= m_error_threshold;
    }

    std::vector<double> split_costs(
        std::span<const std::size_t> sorted,
        std::span<const std::pair<std::size_t, double>> cuts ) const
    {
        std::vector<double> costs;
        costs.reserve( cuts.size() );
        if ( m_minimizer == LeafMinimizer::Exact )
        {
            for ( const auto &cut: cuts )
            {
                const auto k = cut.first;
                costs.push_back(
                    fit_node( sorted.first( k ) ).second +
                    fit_node( sorted.subspan( k ) ).second );
            }
            return costs;
        }

        // Prefix and suffix medians for every cut, built incrementally.
        const std::size_t n = sorted.size();
        std::vector<std::array<double, 3>> prefix( n + 1 ), suffix( n + 1 );
        {
            std::array<detail::RunningMedian, 3> run;
            for ( std::size_t k = 0; k < n; ++k )
            {
                for ( std::size_t c = 0; c < 3; ++c )
                {
                    run[c].push( m_truths[sorted[k]][c] );
                    prefix[k + 1][c] = run[c].median();
                }
            }
        }
        {
            std::array<detail::RunningMedian, 3> run;
            for ( std::size_t k = n; k-- > 0; )
            {
                for ( std::size_t c = 0; c < 3; ++c )
                {
                    run[c].push( m_truths[sorted[k]][c] );
                    suffix[k][c] = run[c].median();
                }
            }
        }
        for ( const auto &cut: cuts )
        {
            const auto k = cut.first;
            const auto left = normalize( prefix[k] );
            const auto right = normalize( suffix[k] );
            double cost = 0.0;
            for ( std::size_t i = 0; i < k; ++i )
            {
                cost += distance( m_measure, left, m_truths[sorted[i]] );
            }
            for ( std::size_t i = k; i < n; ++i )
            {
                cost += distance( m_measure, right, m_truths[sorted[i]] );
            }
            costs.push_back( cost );
        }
        return costs;
    }

    const DistanceMeasure &measure() const noexcept { return m_measure; }

private:
    std::vector<Chromaticity> gather( std::span<const std::size_t> rows ) const
    {
        std::vector<Chromaticity> out;
        out.reserve( rows.size() );
        for ( auto i: rows )
        {
            out.push_back( m_truths[i] );
        }
        return out;
    }

    MinimizeResult minimize( std::span<const Chromaticity> targets ) const
    {
        return m_minimizer == LeafMinimizer::Exact ? exact_minimize( targets, m_measure )
                                                   : approx_minimize( targets, m_measure );
    }

    std::span<const Chromaticity> m_truths;
    DistanceMeasure m_measure;
    double m_error_threshold;
    LeafMinimizer m_minimizer;
};

/// Scalar leaves under squared-error loss (leaf = mean).
class SquaredErrorPolicy
{
public:
    using leaf_type = double;

    explicit SquaredErrorPolicy( std::span<const double> responses ) : m_y( responses ) {}

    std::pair<double, double> fit_node( std::span<const std::size_t> rows ) const
    {
        double sum = 0.0;
        bool constant = true;
        for ( auto i: rows )
        {
            sum += m_y[i];
            constant = constant && m_y[i] == m_y[rows.front()];
        }
        if ( constant )
        {
            return { m_y[rows.front()], 0.0 };
        }
        const double mean = sum / static_cast<double>( rows.size() );
        double sse = 0.0;
        for ( auto i: rows )
        {
            const double d = m_y[i] - mean;
            sse += d * d;
        }
        return { mean, sse };
    }

    /// Pure nodes are not split; no error threshold applies.
    bool should_stop( std::size_t, double node_cost ) const { return node_cost <= 0.0; }

    std::vector<double> split_costs(
        std::span<const std::size_t> sorted,
        std::span<const std::pair<std::size_t, double>> cuts ) const
    {
        // Centered prefix sums: SSE(S) = sum(d^2) - (sum d)^2 / |S|.
        const std::size_t n = sorted.size();
        double center = 0.0;
        for ( auto i: sorted )
        {
            center += m_y[i];
        }
        center /= static_cast<double>( n );
        std::vector<double> s1( n + 1, 0.0 ), s2( n + 1, 0.0 );
        for ( std::size_t k = 0; k < n; ++k )
        {
            const double d = m_y[sorted[k]] - center;
            s1[k + 1] = s1[k] + d;
            s2[k + 1] = s2[k] + d * d;
        }
        auto sse = [&]( std::size_t lo, std::size_t hi ) {
            const double a = s1[hi] - s1[lo];
            const double b = s2[hi] - s2[lo];
            return std::max( 0.0, b - a * a / static_cast<double>( hi - lo ) );
        };
        std::vector<double> costs;
        costs.reserve( cuts.size() );
        for ( const auto &cut: cuts )
        {
            costs.push_back( sse( 0, cut.first ) + sse( cut.first, n ) );
        }
        return costs;
    }

private:
    std::span<const double> m_y;
};

/// Scans every (feature, cut) pair of a node. Splits that do not lower the
/// node cost are discarded; among the rest, those within rand_pct percent of
/// the cheapest are candidates and one is drawn uniformly with `rng`
/// (rand_pct == 0 takes the first cheapest in (feature, threshold) order).
template <LeafPolicy Policy>
std::optional<SplitChoice> best_split(
    const Policy &policy,
    const FeatureTable &table,
    std::span<const std::size_t> rows,
    std::span<const std::size_t> features,
    double node_cost,
    const FitParams &params,
    Rng &rng )
{
    std::vector<SplitChoice> scored;
    for ( auto j: features )
    {
        const auto sorted = detail::sorted_by_feature( table, rows, j );
        const auto cuts = detail::cut_positions( table, sorted, j, params.min_leaf_size );
        if ( cuts.empty() )
        {
            continue;
        }
        const auto costs = policy.split_costs( sorted, cuts );
        for ( std::size_t c = 0; c < cuts.size(); ++c )
        {
            if ( costs[c] < node_cost )
            {
                scored.push_back( { j, cuts[c].second, costs[c] } );
            }
        }
    }
    if ( scored.empty() )
    {
        return std::nullopt;
    }

    double min_cost = scored.front().cost;
    for ( const auto &s: scored )
    {
        min_cost = std::min( min_cost, s.cost );
    }
    const double bound = min_cost * ( 1.0 + params.rand_pct / 100.0 );

    std::vector<std::size_t> pool;
    for ( std::size_t i = 0; i < scored.size(); ++i )
    {
        const bool keep = min_cost > 0.0 ? scored[i].cost <= bound : scored[i].cost == 0.0;
        if ( keep )
        {
            pool.push_back( i );
        }
    }
    if ( params.rand_pct == 0.0 || pool.size() == 1 )
    {
        // First minimum in (feature, threshold) order.
        for ( auto i: pool )
        {
            if ( scored[i].cost == min_cost )
            {
                return scored[i];
            }
        }
    }
    return scored[pool[static_cast<std::size_t>( rng.uniform_index( pool.size() ) )]];
}

/// Greedy top-down fit. A node becomes a leaf when it has fewer than
/// min_parent_size rows, when the policy's stopping rule fires, or when no
/// split lowers its cost.
template <LeafPolicy Policy>
RegressionTree<typename Policy::leaf_type> fit_tree(
    const Policy &policy,
    const FeatureTable &table,
    std::span<const std::size_t> rows,
    std::span<const std::size_t> features,
    const FitParams &params,
    Rng &rng )
{
    using Node = TreeNode<typename Policy::leaf_type>;
    params.validate();
    if ( rows.empty() )
    {
        throw Error( ErrorKind::EmptySet, "cannot fit a tree on zero examples" );
    }

    std::vector<Node> nodes;
    // Preorder construction.
    std::function<std::int32_t( std::vector<std::size_t> )> grow =
        [&]( std::vector<std::size_t> at ) -> std::int32_t {
        const auto self = static_cast<std::int32_t>( nodes.size() );
        auto [label, cost] = policy.fit_node( at );
        nodes.push_back( Node{} );
        nodes[self].estimate = label;
        nodes[self].count = at.size();

        if ( at.size() < params.min_parent_size || policy.should_stop( at.size(), cost ) )
        {
            return self;
        }
        const auto split = best_split( policy, table, at, features, cost, params, rng );
        if ( !split )
        {
            return self;
        }
        std::vector<std::size_t> left, right;
        for ( auto i: at )
        {
            ( table( i, split->feature ) <= split->threshold ? left : right ).push_back( i );
        }
        at.clear();
        at.shrink_to_fit();
        // Only leaves carry an estimate.
        nodes[self].estimate = {};
        nodes[self].feature = static_cast<std::int32_t>( split->feature );
        nodes[self].threshold = split->threshold;
        const auto l = grow( std::move( left ) );
        nodes[self].left = l;
        const auto r = grow( std::move( right ) );
        nodes[self].right = r;
        return self;
    };
    grow( std::vector<std::size_t>( rows.begin(), rows.end() ) );
    return RegressionTree<typename Policy::leaf_type>( std::move( nodes ), table.cols() );
}

namespace detail
{

inline std::vector<std::size_t> iota_indices( std::size_t n )
{
    std::vector<std::size_t> v( n );
    std::iota( v.begin(), v.end(), std::size_t{ 0 } );
    return v;
}

inline std::vector<Chromaticity> truths_of( std::span<const LabeledExample> examples )
{
    std::vector<Chromaticity> t;
    t.reserve( examples.size() );
    for ( const auto &e: examples )
    {
        t.push_back( e.truth );
    }
    return t;
}

} // namespace detail

/// Best split of a single node holding all `examples`, for a multivariate
/// tree under measure `m`. Empty when no split lowers the node cost.
inline std::optional<SplitChoice> best_split_mv(
    std::span<const LabeledExample> examples,
    const DistanceMeasure &m,
    const FitParams &params,
    Rng &rng,
    LeafMinimizer minimizer = LeafMinimizer::Approx )
{
    if ( examples.empty() )
    {
        return std::nullopt;
    }
    const FeatureTable table( examples );
    const auto truths = detail::truths_of( examples );
    const MultivariatePolicy policy( truths, m, params.error_threshold, minimizer );
    const auto rows = detail::iota_indices( examples.size() );
    const auto features = detail::iota_indices( table.cols() );
    const auto node_cost = policy.fit_node( rows ).second;
    return best_split( policy, table, rows, features, node_cost, params, rng );
}

/// Fits one multivariate tree whose leaves minimize the summed distance `m`.
inline MvTree fit_mv(
    std::span<const LabeledExample> examples,
    const DistanceMeasure &m,
    const FitParams &params,
    Rng &rng,
    LeafMinimizer minimizer = LeafMinimizer::Approx )
{
    if ( examples.empty() )
    {
        throw Error( ErrorKind::EmptySet, "cannot fit a tree on zero examples" );
    }
    const FeatureTable table( examples );
    const auto truths = detail::truths_of( examples );
    const MultivariatePolicy policy( truths, m, params.error_threshold, minimizer );
    const auto rows = detail::iota_indices( examples.size() );
    const auto features = detail::iota_indices( table.cols() );
    return fit_tree( policy, table, rows, features, params, rng );
}

inline Chromaticity predict_mv( const MvTree &tree, std::span<const double> features )
{
    return tree.predict( features );
}

/// Feature vector with a scalar response, for the univariate baseline.
struct ScalarExample
{
    std::vector<double> features;
    double response = 0.0;
};

/// Fits a squared-error tree. `features` restricts the split search to a
/// subset of columns (all columns when empty).
inline UvTree fit_uv(
    std::span<const ScalarExample> examples,
    const FitParams &params,
    Rng &rng,
    std::span<const std::size_t> features = {} )
{
    if ( examples.empty() )
    {
        throw Error( ErrorKind::EmptySet, "cannot fit a tree on zero examples" );
    }
    const FeatureTable table( examples, &ScalarExample::features );
    std::vector<double> y;
    y.reserve( examples.size() );
    for ( const auto &e: examples )
    {
        y.push_back( e.response );
    }
    const SquaredErrorPolicy policy( y );
    const auto rows = detail::iota_indices( examples.size() );
    const auto all = detail::iota_indices( table.cols() );
    return fit_tree( policy, table, rows, features.empty() ? std::span<const std::size_t>( all ) : features, params, rng );
}

inline double predict_uv( const UvTree &tree, std::span<const double> features )
{
    return tree.predict( features );
}

} // namespace awb
