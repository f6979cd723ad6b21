#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "gradients/corpus.hpp"
#include "gradients/digraph.hpp"
#include "gradients/error.hpp"
#include "gradients/extract.hpp"
#include "gradients/migration.hpp"
#include "gradients/parallel.hpp"

namespace gradients {

enum class Modality : std::uint8_t { users, urls, mentions };

inline std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::users: return "users";
        case Modality::urls: return "urls";
        case Modality::mentions: return "mentions";
    }
    return "?";
}

inline Modality parse_modality(std::string_view s) {
    if (s == "users") return Modality::users;
    if (s == "urls") return Modality::urls;
    if (s == "mentions") return Modality::mentions;
    throw parameter_error(fmt::format("unknown modality '{}'", s));
}

inline constexpr std::uint64_t kDefaultMinSupport = 20;

// Slack used when comparing an asymmetry ratio against a decimal threshold.
inline constexpr double kThresholdSlack = 1e-9;

enum class Verdict : std::uint8_t { first_to_second, second_to_first, none };

/// Majority direction of movement (or reference) between two communities.
/// `forward` counts evidence for first -> second, `backward` the reverse.
struct Orientation {
    std::string first;
    std::string second;
    std::uint64_t forward = 0;
    std::uint64_t backward = 0;
    Verdict verdict = Verdict::none;
    Modality modality = Modality::users;

    std::uint64_t support() const noexcept { return forward + backward; }
    std::uint64_t majority() const noexcept { return std::max(forward, backward); }
    bool directed() const noexcept { return verdict != Verdict::none; }
    bool is_void() const noexcept { return verdict == Verdict::none; }

    /// Fraction of support in the majority direction; meaningful when directed.
    double asymmetry() const noexcept {
        return support() == 0 ? 0.0 : static_cast<double>(majority()) / static_cast<double>(support());
    }
    const std::string& source() const noexcept { return verdict == Verdict::second_to_first ? second : first; }
    const std::string& target() const noexcept { return verdict == Verdict::second_to_first ? first : second; }

    Orientation swapped() const {
        Verdict v = verdict == Verdict::first_to_second   ? Verdict::second_to_first
                    : verdict == Verdict::second_to_first ? Verdict::first_to_second
                                                          : Verdict::none;
        return {second, first, backward, forward, v, modality};
    }
};

/// Directed when support reaches min_support and the counts differ; void otherwise.
inline Orientation orient(std::string first, std::string second, std::uint64_t forward, std::uint64_t backward,
                          std::uint64_t min_support, Modality modality) {
    if (min_support == 0) throw parameter_error("min_support must be at least 1");
    Orientation o{std::move(first), std::move(second), forward, backward, Verdict::none, modality};
    if (o.support() >= min_support && forward != backward)
        o.verdict = forward > backward ? Verdict::first_to_second : Verdict::second_to_first;
    return o;
}

namespace detail {
inline void require_distinct(std::string_view a, std::string_view b) {
    if (a == b) throw parameter_error(fmt::format("orientation needs two distinct communities, got '{}' twice", a));
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Per-pair orientations

inline Orientation user_orientation(const std::vector<UserTrajectory>& trajs, const std::string& a,
                                    const std::string& b, std::uint64_t min_support = kDefaultMinSupport) {
    detail::require_distinct(a, b);
    std::uint64_t a_first = 0, b_first = 0;
    for (const auto& t : trajs) {
        std::optional<std::size_t> pa, pb;
        for (std::size_t i = 0; i < t.entries.size(); ++i) {
            if (t.entries[i].community == a) pa = i;
            if (t.entries[i].community == b) pb = i;
        }
        if (pa && pb) ++(*pa < *pb ? a_first : b_first);
    }
    return orient(a, b, a_first, b_first, min_support, Modality::users);
}

/// Earliest posting of one URL in one community, in canonical event order.
struct FirstPosting {
    Timestamp ts = 0;
    std::string event_id;

    friend auto operator<=>(const FirstPosting&, const FirstPosting&) = default;
};

/// canonical URL -> community -> first posting there. Only first postings
/// count; repeats within a community are ignored.
using FirstPostings = std::map<std::string, std::map<std::string, FirstPosting>, std::less<>>;

inline FirstPostings first_postings(const std::vector<UrlPosting>& postings) {
    FirstPostings out;
    for (const auto& p : postings) {
        auto& slot = out[p.url.canonical];
        FirstPosting fp{p.ts, p.event_id};
        auto [it, fresh] = slot.try_emplace(p.community, fp);
        if (!fresh && fp < it->second) it->second = fp;
    }
    return out;
}

inline Orientation url_orientation(const FirstPostings& firsts, const std::string& a, const std::string& b,
                                   std::uint64_t min_support = kDefaultMinSupport) {
    detail::require_distinct(a, b);
    std::uint64_t a_first = 0, b_first = 0;
    for (const auto& [url, by_comm] : firsts) {
        auto ia = by_comm.find(a);
        auto ib = by_comm.find(b);
        if (ia == by_comm.end() || ib == by_comm.end()) continue;
        if (ia->second < ib->second)
            ++a_first;
        else if (ib->second < ia->second)
            ++b_first;
    }
    return orient(a, b, a_first, b_first, min_support, Modality::urls);
}

inline Orientation mention_orientation(const std::vector<MentionRef>& mentions, const std::string& a,
                                       const std::string& b, std::uint64_t min_support = kDefaultMinSupport) {
    detail::require_distinct(a, b);
    std::uint64_t ab = 0, ba = 0;
    for (const auto& m : mentions) {
        if (m.source_community == a && m.target_community == b) ++ab;
        if (m.source_community == b && m.target_community == a) ++ba;
    }
    return orient(a, b, ab, ba, min_support, Modality::mentions);
}

// ---------------------------------------------------------------------------
// Whole-category pair counts

/// counts(i, j): evidence that community i precedes (or mentions) community j.
class PairCounts {
public:
    explicit PairCounts(std::vector<std::string> communities)
        : communities_(std::move(communities)), data_(communities_.size() * communities_.size(), 0) {
        for (std::size_t i = 0; i < communities_.size(); ++i) index_.emplace(communities_[i], i);
    }

    const std::vector<std::string>& communities() const noexcept { return communities_; }
    std::size_t size() const noexcept { return communities_.size(); }

    std::uint64_t operator()(std::size_t i, std::size_t j) const { return data_[i * size() + j]; }
    void add(std::size_t i, std::size_t j, std::uint64_t amount = 1) { data_[i * size() + j] += amount; }

    std::optional<std::size_t> index(std::string_view community) const {
        auto it = index_.find(std::string(community));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    PairCounts& operator+=(const PairCounts& other) {
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }

private:
    std::vector<std::string> communities_;
    std::vector<std::uint64_t> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

inline PairCounts user_pair_counts(const std::vector<UserTrajectory>& trajs, const std::vector<std::string>& communities,
                                   unsigned threads = 1) {
    const std::size_t workers = std::max(1u, threads);
    std::vector<PairCounts> partial(workers, PairCounts(communities));
    const std::size_t chunk = (trajs.size() + workers - 1) / workers;
    parallel_for(workers, threads, [&](std::size_t w) {
        auto& counts = partial[w];
        const std::size_t end = std::min(trajs.size(), (w + 1) * chunk);
        std::vector<std::size_t> idx;
        for (std::size_t t = w * chunk; t < end; ++t) {
            idx.clear();
            for (const auto& e : trajs[t].entries)
                if (auto i = counts.index(e.community)) idx.push_back(*i);
            for (std::size_t x = 0; x < idx.size(); ++x)
                for (std::size_t y = x + 1; y < idx.size(); ++y) counts.add(idx[x], idx[y]);
        }
    });
    PairCounts total(communities);
    for (const auto& p : partial) total += p;
    return total;
}

inline PairCounts url_pair_counts(const FirstPostings& firsts, const std::vector<std::string>& communities) {
    PairCounts counts(communities);
    std::vector<std::pair<std::size_t, const FirstPosting*>> present;
    for (const auto& [url, by_comm] : firsts) {
        present.clear();
        for (const auto& [comm, fp] : by_comm)
            if (auto i = counts.index(comm)) present.emplace_back(*i, &fp);
        for (std::size_t x = 0; x < present.size(); ++x)
            for (std::size_t y = x + 1; y < present.size(); ++y) {
                auto [i, fi] = present[x];
                auto [j, fj] = present[y];
                if (*fi < *fj)
                    counts.add(i, j);
                else if (*fj < *fi)
                    counts.add(j, i);
            }
    }
    return counts;
}

inline PairCounts mention_pair_counts(const std::vector<MentionRef>& mentions,
                                      const std::vector<std::string>& communities) {
    PairCounts counts(communities);
    for (const auto& m : mentions) {
        if (m.is_self()) continue;
        auto i = counts.index(m.source_community);
        auto j = counts.index(m.target_community);
        if (i && j) counts.add(*i, *j);
    }
    return counts;
}

/// Optional veto on individual pairs (used by ingestion presets).
using PairFilter = std::function<bool(const std::string&, const std::string&)>;

/// Orientations for every unordered pair, in roster order (i < j).
inline std::vector<Orientation> orient_all(const PairCounts& counts, std::uint64_t min_support, Modality modality,
                                           const PairFilter& allow = {}) {
    std::vector<Orientation> out;
    const auto& names = counts.communities();
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j) {
            auto o = orient(names[i], names[j], counts(i, j), counts(j, i), min_support, modality);
            if (allow && !allow(names[i], names[j])) o.verdict = Verdict::none;
            out.push_back(std::move(o));
        }
    return out;
}

// ---------------------------------------------------------------------------
// Gradient graphs

struct GradientEdge {
    std::string source;
    std::string target;
    double asymmetry = 0;
    std::uint64_t support = 0;
    std::uint64_t majority = 0;

    friend bool operator==(const GradientEdge&, const GradientEdge&) = default;
};

struct GradientGraph {
    Modality modality = Modality::users;
    double threshold = 0.5;
    std::vector<std::string> communities;  // full roster, including isolated ones
    std::vector<GradientEdge> edges;

    /// Communities with at least one incident edge, in roster order.
    std::vector<std::string> nodes() const {
        std::vector<std::string> out;
        for (const auto& c : communities)
            if (std::ranges::any_of(edges, [&](const auto& e) { return e.source == c || e.target == c; }))
                out.push_back(c);
        return out;
    }

    std::vector<std::string> isolated() const {
        auto used = nodes();
        std::vector<std::string> out;
        for (const auto& c : communities)
            if (std::ranges::find(used, c) == used.end()) out.push_back(c);
        return out;
    }

    /// Digraph over `names` (defaults to the full roster).
    Digraph digraph(const std::vector<std::string>& names) const {
        std::unordered_map<std::string, Digraph::Node> idx;
        for (std::size_t i = 0; i < names.size(); ++i) idx.emplace(names[i], static_cast<Digraph::Node>(i));
        Digraph g{names.size(), {}};
        for (const auto& e : edges) g.edges.emplace_back(idx.at(e.source), idx.at(e.target));
        return g;
    }
    Digraph digraph() const { return digraph(communities); }

    friend bool operator==(const GradientGraph&, const GradientGraph&) = default;
};

inline bool passes_threshold(const Orientation& o, double tau) {
    return o.directed() && o.asymmetry() >= tau - kThresholdSlack;
}

/// Directed orientations with asymmetry at least tau become edges.
inline GradientGraph build_graph(const std::vector<Orientation>& orientations,
                                 const std::vector<std::string>& communities, double tau, Modality modality) {
    if (!(tau >= 0.5 - kThresholdSlack && tau <= 1.0 + kThresholdSlack))
        throw parameter_error(fmt::format("threshold must lie in [0.5, 1], got {}", tau));
    GradientGraph g{modality, tau, communities, {}};
    for (const auto& o : orientations)
        if (passes_threshold(o, tau)) g.edges.push_back({o.source(), o.target(), o.asymmetry(), o.support(), o.majority()});
    return g;
}

inline AcyclicityResult check_acyclic(const GradientGraph& g, std::vector<std::string>* witness_names = nullptr) {
    auto r = is_acyclic(g.digraph());
    if (witness_names) {
        witness_names->clear();
        for (auto v : r.witness) witness_names->push_back(g.communities[v]);
    }
    return r;
}

/// Grid {0.5, 0.5 + step, ..., 1.0}. The step must divide 0.5 evenly.
inline std::vector<double> threshold_grid(double step) {
    if (!(step > 0)) throw parameter_error("grid step must be positive");
    const double count = 0.5 / step;
    const auto n = static_cast<long>(std::llround(count));
    if (n < 1 || std::abs(count - static_cast<double>(n)) > 1e-6)
        throw parameter_error(fmt::format("grid step {} does not divide 0.5 evenly", step));
    std::vector<double> grid;
    for (long i = 0; i <= n; ++i) grid.push_back(0.5 + 0.5 * static_cast<double>(i) / static_cast<double>(n));
    return grid;
}

struct ThresholdSearch {
    double tau = 0.5;
    // True when even tau = 1 leaves a cycle; the gradient is then the empty graph.
    bool exhausted = false;
};

/// Smallest grid threshold whose graph is acyclic.
inline ThresholdSearch minimal_acyclic_threshold(const std::vector<Orientation>& orientations,
                                                 const std::vector<std::string>& communities, double step = 0.05) {
    for (double tau : threshold_grid(step))
        if (is_acyclic_fast(build_graph(orientations, communities, tau, Modality::users).digraph()))
            return {tau, false};
    return {1.0, true};
}

/// Graph at a search result; empty when the search was exhausted.
inline GradientGraph graph_at(const std::vector<Orientation>& orientations, const std::vector<std::string>& communities,
                              const ThresholdSearch& search, Modality modality) {
    auto g = build_graph(orientations, communities, search.tau, modality);
    if (search.exhausted) g.edges.clear();
    return g;
}

struct TopologicalSummary {
    std::vector<std::string> canonical_order;  // lexicographically smallest
    std::uint64_t linear_extensions = 0;
};

/// Canonical order and exact extension count over the graph's non-isolated nodes.
inline TopologicalSummary topological_orders(const GradientGraph& g) {
    const auto names = g.nodes();
    const auto dg = g.digraph(names);
    const auto order =
        topological_order(dg, [&](std::size_t a, std::size_t b) { return names[a] < names[b]; }, &names);
    TopologicalSummary s;
    for (auto v : order) s.canonical_order.push_back(names[v]);
    s.linear_extensions = count_linear_extensions(dg, &names);
    return s;
}

// ---------------------------------------------------------------------------
// Asymmetry histogram

struct Histogram {
    std::vector<double> lows;
    std::vector<double> highs;
    std::vector<std::size_t> counts;

    std::size_t total() const {
        std::size_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }

    std::string csv() const {
        std::string out = "bin_low,bin_high,count\n";
        for (std::size_t i = 0; i < counts.size(); ++i)
            out += fmt::format("{:.4f},{:.4f},{}\n", lows[i], highs[i], counts[i]);
        return out;
    }
};

inline Histogram empty_histogram(std::size_t bins) {
    if (bins < 2) throw parameter_error("histogram needs at least 2 bins");
    Histogram h;
    const double width = 0.5 / static_cast<double>(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        h.lows.push_back(0.5 + width * static_cast<double>(i));
        h.highs.push_back(i + 1 == bins ? 1.0 : 0.5 + width * static_cast<double>(i + 1));
    }
    h.counts.assign(bins, 0);
    return h;
}

/// Adds one asymmetry value; bins are [low, high) with the last one closed.
inline void add_to_histogram(Histogram& h, double asymmetry) {
    const std::size_t bins = h.counts.size();
    const double pos = (asymmetry - 0.5) / 0.5 * static_cast<double>(bins);
    auto bin = static_cast<long>(std::floor(pos + kThresholdSlack));
    bin = std::clamp<long>(bin, 0, static_cast<long>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(bin)];
}

inline Histogram asymmetry_histogram(const std::vector<Orientation>& orientations, std::size_t bins) {
    auto h = empty_histogram(bins);
    for (const auto& o : orientations)
        if (o.directed()) add_to_histogram(h, o.asymmetry());
    return h;
}

// ---------------------------------------------------------------------------
// Export

/// DOT drawing of the non-isolated part of the graph; edges flow downward.
inline std::string to_dot(const GradientGraph& g, std::string_view manifest = "manifest.json") {
    std::uint64_t max_support = 1;
    for (const auto& e : g.edges) max_support = std::max(max_support, e.support);
    std::string out = fmt::format("// manifest: {}\ndigraph \"{}\" {{\n  rankdir=TB;\n  node [shape=box];\n",
                                  manifest, to_string(g.modality));
    for (const auto& n : g.nodes()) out += fmt::format("  \"{}\";\n", n);
    for (const auto& e : g.edges) {
        const double width = 1.0 + 4.0 * static_cast<double>(e.support) / static_cast<double>(max_support);
        out += fmt::format("  \"{}\" -> \"{}\" [label=\"{:.2f}\", penwidth={:.2f}];\n", e.source, e.target,
                           e.asymmetry, width);
    }
    out += "}\n";
    return out;
}

inline std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::first_to_second: return "first_to_second";
        case Verdict::second_to_first: return "second_to_first";
        case Verdict::none: return "void";
    }
    return "?";
}

inline nlohmann::ordered_json to_json(const Orientation& o) {
    nlohmann::ordered_json j;
    j["first"] = o.first;
    j["second"] = o.second;
    j["forward"] = o.forward;
    j["backward"] = o.backward;
    j["verdict"] = std::string(to_string(o.verdict));
    if (o.directed()) j["asymmetry"] = o.asymmetry();
    return j;
}

inline nlohmann::ordered_json to_json(const GradientGraph& g) {
    nlohmann::ordered_json j;
    j["modality"] = std::string(to_string(g.modality));
    j["threshold"] = g.threshold;
    j["communities"] = g.communities;
    j["nodes"] = g.nodes();
    j["isolated"] = g.isolated();
    auto& edges = j["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : g.edges)
        edges.push_back({{"source", e.source},
                         {"target", e.target},
                         {"asymmetry", e.asymmetry},
                         {"support", e.support},
                         {"majority", e.majority}});
    return j;
}

/// Reads back the graph portion of a gradient report.
inline GradientGraph graph_from_json(const nlohmann::json& j) {
    try {
        GradientGraph g;
        g.modality = parse_modality(j.at("modality").get<std::string>());
        g.threshold = j.at("threshold").get<double>();
        g.communities = j.at("communities").get<std::vector<std::string>>();
        for (const auto& e : j.at("edges"))
            g.edges.push_back({e.at("source").get<std::string>(), e.at("target").get<std::string>(),
                               e.at("asymmetry").get<double>(), e.at("support").get<std::uint64_t>(),
                               e.at("majority").get<std::uint64_t>()});
        for (const auto& e : g.edges)
            if (std::ranges::find(g.communities, e.source) == g.communities.end() ||
                std::ranges::find(g.communities, e.target) == g.communities.end())
                throw data_error(fmt::format("edge {} -> {} names an unknown community", e.source, e.target));
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(fmt::format("malformed gradient graph: {}", e.what()));
    }
}

}  // namespace gradients
