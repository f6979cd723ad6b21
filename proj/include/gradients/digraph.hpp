#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "gradients/error.hpp"

namespace gradients {

/// Plain directed graph over nodes 0..n-1.
struct Digraph {
    using Node = std::uint32_t;
    using Edge = std::pair<Node, Node>;

    std::size_t n = 0;
    std::vector<Edge> edges;

    std::vector<std::vector<Node>> successors() const {
        std::vector<std::vector<Node>> adj(n);
        for (auto [u, v] : edges) adj[u].push_back(v);
        for (auto& a : adj) std::ranges::sort(a);
        return adj;
    }
};

struct AcyclicityResult {
    bool acyclic = true;
    std::vector<std::size_t> witness;  // cycle as v0, v1, ..., v0 when cyclic

    explicit operator bool() const noexcept { return acyclic; }
};

/// Depth-first cycle search; reports one witness cycle when one exists.
inline AcyclicityResult is_acyclic(const Digraph& g) {
    const auto adj = g.successors();
    enum : std::uint8_t { white, grey, black };
    std::vector<std::uint8_t> colour(g.n, white);
    std::vector<std::size_t> parent(g.n, 0);

    for (std::size_t root = 0; root < g.n; ++root) {
        if (colour[root] != white) continue;
        // (node, next child position)
        std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
        colour[root] = grey;
        while (!stack.empty()) {
            auto& [u, pos] = stack.back();
            if (pos == adj[u].size()) {
                colour[u] = black;
                stack.pop_back();
                continue;
            }
            const std::size_t v = adj[u][pos++];
            if (colour[v] == grey) {
                AcyclicityResult r{false, {}};
                for (std::size_t x = u; x != v; x = parent[x]) r.witness.push_back(x);
                r.witness.push_back(v);
                std::ranges::reverse(r.witness);
                r.witness.push_back(v);
                return r;
            }
            if (colour[v] == white) {
                colour[v] = grey;
                parent[v] = u;
                stack.emplace_back(v, 0);
            }
        }
    }
    return {};
}

/// Kahn's algorithm without witness; the hot path for Monte Carlo trials.
inline bool is_acyclic_fast(const Digraph& g) {
    std::vector<std::uint32_t> indegree(g.n, 0);
    std::vector<std::vector<Digraph::Node>> adj(g.n);
    for (auto [u, v] : g.edges) {
        adj[u].push_back(v);
        ++indegree[v];
    }
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < g.n; ++i)
        if (indegree[i] == 0) ready.push_back(i);
    std::size_t removed = 0;
    while (!ready.empty()) {
        auto u = ready.back();
        ready.pop_back();
        ++removed;
        for (auto v : adj[u])
            if (--indegree[v] == 0) ready.push_back(v);
    }
    return removed == g.n;
}

namespace detail {
inline Error cycle_error(const Digraph& g, const std::vector<std::string>* names) {
    auto cycle = is_acyclic(g).witness;
    std::vector<std::string> labels;
    for (auto v : cycle) labels.push_back(names ? (*names)[v] : std::to_string(v));
    return analysis_error(fmt::format("graph has a cycle: {}", fmt::join(labels, " -> ")));
}
}  // namespace detail

/// Smallest topological order under `less` on node ids (index order by
/// default). Throws an analysis error carrying a witness when cyclic.
inline std::vector<std::size_t> topological_order(const Digraph& g,
                                                  const std::function<bool(std::size_t, std::size_t)>& less = {},
                                                  const std::vector<std::string>* names = nullptr) {
    std::vector<std::uint32_t> indegree(g.n, 0);
    const auto adj = g.successors();
    for (auto [u, v] : g.edges) ++indegree[v];
    auto greater = [&](std::size_t a, std::size_t b) { return less ? less(b, a) : b < a; };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(greater)> ready(greater);
    for (std::size_t i = 0; i < g.n; ++i)
        if (indegree[i] == 0) ready.push(i);
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        auto u = ready.top();
        ready.pop();
        order.push_back(u);
        for (auto v : adj[u])
            if (--indegree[v] == 0) ready.push(v);
    }
    if (order.size() != g.n) throw detail::cycle_error(g, names);
    return order;
}

inline constexpr std::size_t kMaxExtensionNodes = 20;

/// Exact number of linear extensions by dynamic programming over subsets of
/// already-placed nodes. Limited to 20 nodes; 20! still fits in 64 bits.
inline std::uint64_t count_linear_extensions(const Digraph& g, const std::vector<std::string>* names = nullptr) {
    if (g.n > kMaxExtensionNodes)
        throw parameter_error(
            fmt::format("linear extension counting supports at most {} nodes, got {}", kMaxExtensionNodes, g.n));
    if (!is_acyclic_fast(g)) throw detail::cycle_error(g, names);

    std::vector<std::uint32_t> preds(g.n, 0);
    for (auto [u, v] : g.edges) preds[v] |= 1u << u;

    const std::uint32_t full = g.n == 32 ? ~0u : (1u << g.n) - 1;
    std::vector<std::uint64_t> ways(std::size_t{1} << g.n, 0);
    ways[0] = 1;
    for (std::uint32_t placed = 0; placed < full; ++placed) {
        if (ways[placed] == 0) continue;
        for (std::size_t v = 0; v < g.n; ++v) {
            const std::uint32_t bit = 1u << v;
            if ((placed & bit) == 0 && (preds[v] & ~placed) == 0) ways[placed | bit] += ways[placed];
        }
    }
    return ways[full];
}

}  // namespace gradients
