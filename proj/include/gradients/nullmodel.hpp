#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/format.h>

#include "gradients/digraph.hpp"
#include "gradients/error.hpp"
#include "gradients/parallel.hpp"
#include "gradients/random.hpp"

namespace gradients {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

enum class NullModel : std::uint8_t { edge_direction, edge_placement, complete_orientation };

inline std::string_view to_string(NullModel m) {
    switch (m) {
        case NullModel::edge_direction: return "edge-direction";
        case NullModel::edge_placement: return "edge-placement";
        case NullModel::complete_orientation: return "complete-orientation";
    }
    return "?";
}

inline NullModel parse_null_model(std::string_view s) {
    if (s == "edge-direction" || s == "edge_direction") return NullModel::edge_direction;
    if (s == "edge-placement" || s == "edge_placement") return NullModel::edge_placement;
    if (s == "complete-orientation" || s == "complete_orientation") return NullModel::complete_orientation;
    throw parameter_error(fmt::format("unknown null model '{}'", s));
}

/// Keeps every edge's endpoints and flips each direction with a fair coin.
inline Digraph randomize_edge_directions(const Digraph& g, Engine& rng) {
    std::set<std::pair<Digraph::Node, Digraph::Node>> seen;
    for (auto [u, v] : g.edges) {
        if (u == v) throw parameter_error("edge-direction randomization needs a loop-free graph");
        if (!seen.emplace(std::min(u, v), std::max(u, v)).second)
            throw parameter_error("edge-direction randomization needs a graph without 2-cycles or repeated edges");
    }
    Digraph out{g.n, {}};
    out.edges.reserve(g.edges.size());
    for (auto [u, v] : g.edges) {
        if (rng() >> 63)
            out.edges.emplace_back(v, u);
        else
            out.edges.emplace_back(u, v);
    }
    return out;
}

/// `n_edges` distinct unordered pairs chosen uniformly without replacement,
/// each oriented by a fair coin.
inline Digraph randomize_edge_placement(std::size_t n_nodes, std::size_t n_edges, Engine& rng) {
    const std::size_t pairs = n_nodes < 2 ? 0 : n_nodes * (n_nodes - 1) / 2;
    if (n_edges > pairs)
        throw parameter_error(fmt::format("{} edges do not fit on {} nodes (max {})", n_edges, n_nodes, pairs));
    std::vector<std::pair<Digraph::Node, Digraph::Node>> all;
    all.reserve(pairs);
    for (Digraph::Node i = 0; i < n_nodes; ++i)
        for (Digraph::Node j = i + 1; j < n_nodes; ++j) all.emplace_back(i, j);
    std::vector<std::pair<Digraph::Node, Digraph::Node>> chosen;
    chosen.reserve(n_edges);
    std::sample(all.begin(), all.end(), std::back_inserter(chosen), n_edges, rng);
    Digraph out{n_nodes, {}};
    for (auto [i, j] : chosen) {
        if (rng() >> 63)
            out.edges.emplace_back(j, i);
        else
            out.edges.emplace_back(i, j);
    }
    return out;
}

/// Uniformly random tournament on n nodes.
inline Digraph random_complete_orientation(std::size_t n, Engine& rng) {
    return randomize_edge_placement(n, n < 2 ? 0 : n * (n - 1) / 2, rng);
}

struct Interval {
    double low = 0;
    double high = 1;
};

/// Exact (Clopper-Pearson) binomial interval for k successes in n trials.
inline Interval clopper_pearson(std::uint64_t k, std::uint64_t n, double confidence = 0.95) {
    if (n == 0 || k > n) throw parameter_error("clopper_pearson needs 0 <= k <= n and n >= 1");
    const double alpha = 1.0 - confidence;
    const auto kd = static_cast<double>(k);
    const auto nd = static_cast<double>(n);
    Interval r;
    if (k > 0) r.low = boost::math::quantile(boost::math::beta_distribution<>(kd, nd - kd + 1), alpha / 2);
    if (k < n) r.high = boost::math::quantile(boost::math::beta_distribution<>(kd + 1, nd - kd), 1 - alpha / 2);
    return r;
}

struct NullResult {
    NullModel model = NullModel::edge_direction;
    std::uint64_t trials = 0;
    std::uint64_t acyclic_count = 0;
    double fraction = 0;
    Interval interval;  // 95% exact binomial
    std::uint64_t seed = 0;
};

using GraphGenerator = std::function<Digraph(Engine&)>;

/// Runs `trials` independent draws; trial i uses a generator derived from
/// (seed, i), so the result is the same for any thread count.
inline NullResult fraction_acyclic_mc(NullModel model, const GraphGenerator& generate, std::uint64_t trials,
                                      std::uint64_t seed, unsigned threads = 1) {
    if (trials == 0) throw parameter_error("trials must be at least 1");
    std::vector<std::uint8_t> acyclic(trials, 0);
    parallel_for(trials, threads, [&](std::size_t i) {
        auto rng = make_engine(seed, {static_cast<std::uint64_t>(model), i});
        acyclic[i] = is_acyclic_fast(generate(rng)) ? 1 : 0;
    });
    NullResult r;
    r.model = model;
    r.trials = trials;
    r.acyclic_count = static_cast<std::uint64_t>(std::count(acyclic.begin(), acyclic.end(), 1));
    r.fraction = static_cast<double>(r.acyclic_count) / static_cast<double>(trials);
    r.interval = clopper_pearson(r.acyclic_count, trials);
    r.seed = seed;
    return r;
}

/// Null result for a concrete graph under one of the randomizations.
inline NullResult null_model_for(const Digraph& g, NullModel model, std::uint64_t trials, std::uint64_t seed,
                                 unsigned threads = 1) {
    switch (model) {
        case NullModel::edge_direction:
            return fraction_acyclic_mc(
                model, [&](Engine& rng) { return randomize_edge_directions(g, rng); }, trials, seed, threads);
        case NullModel::edge_placement:
            return fraction_acyclic_mc(
                model, [&](Engine& rng) { return randomize_edge_placement(g.n, g.edges.size(), rng); }, trials,
                seed, threads);
        case NullModel::complete_orientation:
            return fraction_acyclic_mc(
                model, [&](Engine& rng) { return random_complete_orientation(g.n, rng); }, trials, seed, threads);
    }
    throw parameter_error("unknown null model");
}

/// "**" below 0.01, "*" below 0.05.
inline std::string_view significance_stars(double p) {
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

/// Fraction cell as printed in a null-model table row, e.g. "<0.01**" or "0.21".
inline std::string format_null_fraction(double fraction) {
    if (fraction < 0.01) return "<0.01**";
    return fmt::format("{:.2f}{}", fraction, significance_stars(fraction));
}

// ---------------------------------------------------------------------------
// Exact counting

inline constexpr unsigned kMaxDagNodes = 30;

/// Labeled DAGs on n nodes:
/// a(n) = sum_{k=1..n} (-1)^(k+1) C(n,k) 2^(k(n-k)) a(n-k), a(0) = 1.
inline BigInt count_dags(unsigned n) {
    if (n > kMaxDagNodes) throw parameter_error(fmt::format("count_dags supports n <= {}, got {}", kMaxDagNodes, n));
    std::vector<BigInt> a(n + 1);
    a[0] = 1;
    // binom[m][k] built row by row
    std::vector<std::vector<BigInt>> binom(n + 1);
    for (unsigned m = 0; m <= n; ++m) {
        binom[m].assign(m + 1, 1);
        for (unsigned k = 1; k < m; ++k) binom[m][k] = binom[m - 1][k - 1] + binom[m - 1][k];
    }
    for (unsigned m = 1; m <= n; ++m) {
        BigInt sum = 0;
        for (unsigned k = 1; k <= m; ++k) {
            BigInt term = binom[m][k] * (BigInt(1) << (k * (m - k))) * a[m - k];
            if (k % 2 == 1)
                sum += term;
            else
                sum -= term;
        }
        a[m] = sum;
    }
    return a[n];
}

enum class DigraphConvention : std::uint8_t {
    all_digraphs,   // any subset of the n(n-1) ordered pairs
    no_two_cycles,  // each unordered pair: absent, one way, or the other
    tournaments,    // each unordered pair oriented one way
};

inline std::string_view to_string(DigraphConvention c) {
    switch (c) {
        case DigraphConvention::all_digraphs: return "all_digraphs";
        case DigraphConvention::no_two_cycles: return "no_two_cycles";
        case DigraphConvention::tournaments: return "tournaments";
    }
    return "?";
}

struct DagFraction {
    DigraphConvention convention;
    BigInt numerator;
    BigInt denominator;

    BigRational value() const { return BigRational(numerator, denominator); }

    /// Scientific rendering with `digits` significant digits.
    std::string decimal(int digits = 6) const {
        using Float = boost::multiprecision::cpp_bin_float_50;
        Float v = Float(numerator) / Float(denominator);
        return v.str(digits, std::ios_base::scientific);
    }

    std::string percent(int digits = 6) const {
        using Float = boost::multiprecision::cpp_bin_float_50;
        Float v = Float(numerator) * 100 / Float(denominator);
        return v.str(digits, std::ios_base::scientific);
    }
};

/// Fraction of n-node digraphs (under a convention) that are acyclic. The
/// numerator counts acyclic members of the same family: all labeled DAGs for
/// the first two conventions, n! transitive tournaments for the third.
inline DagFraction dag_fraction(unsigned n, DigraphConvention convention) {
    const unsigned pairs = n * (n > 0 ? n - 1 : 0) / 2;
    DagFraction f{convention, 0, 0};
    switch (convention) {
        case DigraphConvention::all_digraphs:
            f.numerator = count_dags(n);
            f.denominator = BigInt(1) << (2 * pairs);
            break;
        case DigraphConvention::no_two_cycles:
            f.numerator = count_dags(n);
            f.denominator = boost::multiprecision::pow(BigInt(3), pairs);
            break;
        case DigraphConvention::tournaments: {
            BigInt fact = 1;
            for (unsigned i = 2; i <= n; ++i) fact *= i;
            f.numerator = fact;
            f.denominator = BigInt(1) << pairs;
            break;
        }
    }
    return f;
}

}  // namespace gradients
