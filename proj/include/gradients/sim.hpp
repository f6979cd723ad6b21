#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "gradients/corpus.hpp"
#include "gradients/error.hpp"
#include "gradients/gradient.hpp"
#include "gradients/migration.hpp"
#include "gradients/parallel.hpp"
#include "gradients/random.hpp"

namespace gradients {

enum class SimModel : std::uint8_t { canonical, mallows };

inline std::string_view to_string(SimModel m) { return m == SimModel::canonical ? "canonical" : "mallows"; }

inline SimModel parse_sim_model(std::string_view s) {
    if (s == "canonical") return SimModel::canonical;
    if (s == "mallows") return SimModel::mallows;
    throw parameter_error(fmt::format("unknown simulation model '{}'", s));
}

struct SimConfig {
    std::size_t n_nodes = 20;
    std::size_t m_users = 1000;
    double lambda = 1.0;        // exponential rate of path lengths
    std::optional<double> p;    // conformist fraction (canonical model)
    std::optional<double> phi;  // Mallows dispersion
    std::size_t trials = 100;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_nodes == 0) throw parameter_error("simulation needs at least one node");
        if (!(lambda > 0)) throw parameter_error("lambda must be positive");
        if (p.has_value() == phi.has_value()) throw parameter_error("set exactly one of p and phi");
        if (p && !(*p >= 0 && *p <= 1)) throw parameter_error("p must lie in [0, 1]");
        if (phi && !(*phi > 0 && *phi <= 1)) throw parameter_error("phi must lie in (0, 1]");
        if (trials == 0) throw parameter_error("trials must be at least 1");
    }
};

/// round(x) for x ~ Exponential(lambda) by inverse transform, floored at 2.
inline std::size_t sample_path_length(double lambda, Engine& rng) {
    if (!(lambda > 0)) throw parameter_error("lambda must be positive");
    const double u = uniform01(rng);
    const double x = -std::log1p(-u) / lambda;
    const double r = std::round(x);
    return r < 2.0 ? 2 : static_cast<std::size_t>(r);
}

/// Repeated insertion: the i-th reference item (0-based) is inserted j slots
/// from the right end with probability phi^j / (1 + phi + ... + phi^i).
inline std::vector<std::size_t> sample_mallows(std::span<const std::size_t> reference, double phi, Engine& rng) {
    if (!(phi > 0 && phi <= 1)) throw parameter_error("phi must lie in (0, 1]");
    std::vector<std::size_t> out;
    out.reserve(reference.size());
    std::vector<double> weights;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        weights.assign(i + 1, 1.0);
        for (std::size_t j = 1; j <= i; ++j) weights[j] = weights[j - 1] * phi;
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        double u = uniform01(rng) * total;
        std::size_t j = 0;
        while (j < i && u >= weights[j]) u -= weights[j++];
        out.insert(out.end() - static_cast<std::ptrdiff_t>(j), reference[i]);
    }
    return out;
}

/// Kendall tau distance between two permutations of the same items.
inline std::size_t kendall_distance(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    std::vector<std::size_t> pos(a.size());
    for (std::size_t i = 0; i < b.size(); ++i) pos[b[i]] = i;
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j)
            if (pos[a[i]] > pos[a[j]]) ++d;
    return d;
}

/// Synthetic corpus: each visit is one event and also one entry.
struct SimulatedCorpus {
    std::size_t n_nodes = 0;
    std::vector<std::vector<std::size_t>> visits;  // per user, in visit order
    std::vector<UserTrajectory> trajectories;

    std::vector<std::string> communities() const;
    EventLog log() const;
};

inline std::string sim_node_name(std::size_t node, std::size_t n_nodes) {
    const auto width = std::to_string(n_nodes > 0 ? n_nodes - 1 : 0).size();
    return fmt::format("n{:0{}}", node, width);
}

inline std::string sim_user_name(std::size_t user, std::size_t m_users) {
    const auto width = std::to_string(m_users > 0 ? m_users - 1 : 0).size();
    return fmt::format("u{:0{}}", user, width);
}

inline std::vector<std::string> SimulatedCorpus::communities() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n_nodes; ++i) out.push_back(sim_node_name(i, n_nodes));
    return out;
}

inline EventLog SimulatedCorpus::log() const {
    std::vector<Event> events;
    for (const auto& t : trajectories)
        for (const auto& e : t.entries) events.push_back({e.entry_event_id, e.user, e.community, e.entry_ts, EventKind::post, {}, {}});
    return EventLog(std::move(events));
}

namespace detail {

inline SimulatedCorpus assemble(std::size_t n_nodes, std::vector<std::vector<std::size_t>> visits) {
    SimulatedCorpus c;
    c.n_nodes = n_nodes;
    c.trajectories.resize(visits.size());
    for (std::size_t u = 0; u < visits.size(); ++u) {
        auto& t = c.trajectories[u];
        t.user = sim_user_name(u, visits.size());
        for (std::size_t v = 0; v < visits[u].size(); ++v) {
            t.entries.push_back({t.user, sim_node_name(visits[u][v], n_nodes), static_cast<Timestamp>(v + 1),
                                 fmt::format("{}-{:03}", t.user, v), EntryDefinition::thresholding, 1});
        }
    }
    c.visits = std::move(visits);
    return c;
}

}  // namespace detail

/// Users pick k distinct nodes; with probability p they visit them in the
/// canonical (identity) order, otherwise in a uniformly random order. User u
/// in trial t draws from (seed, t, u), so raising p only converts users into
/// conformists and never changes anything else about them.
inline SimulatedCorpus generate_canonical_users(const SimConfig& cfg, std::size_t trial = 0) {
    if (!cfg.p) throw parameter_error("canonical model needs p");
    cfg.validate();
    std::vector<std::vector<std::size_t>> visits(cfg.m_users);
    std::vector<std::size_t> nodes(cfg.n_nodes);
    std::iota(nodes.begin(), nodes.end(), 0);
    for (std::size_t u = 0; u < cfg.m_users; ++u) {
        auto rng = make_engine(cfg.seed, {trial, u});
        const bool conforms = uniform01(rng) < *cfg.p;
        const std::size_t k = std::min(sample_path_length(cfg.lambda, rng), cfg.n_nodes);
        auto& v = visits[u];
        std::sample(nodes.begin(), nodes.end(), std::back_inserter(v), k, rng);  // ascending
        if (!conforms) std::shuffle(v.begin(), v.end(), rng);
    }
    return detail::assemble(cfg.n_nodes, std::move(visits));
}

/// Users draw a full Mallows permutation around the identity and visit its
/// first k nodes.
inline SimulatedCorpus generate_mallows_users(const SimConfig& cfg, std::size_t trial = 0) {
    if (!cfg.phi) throw parameter_error("Mallows model needs phi");
    cfg.validate();
    std::vector<std::vector<std::size_t>> visits(cfg.m_users);
    std::vector<std::size_t> identity(cfg.n_nodes);
    std::iota(identity.begin(), identity.end(), 0);
    for (std::size_t u = 0; u < cfg.m_users; ++u) {
        auto rng = make_engine(cfg.seed, {trial, u});
        const std::size_t k = std::min(sample_path_length(cfg.lambda, rng), cfg.n_nodes);
        auto perm = sample_mallows(identity, *cfg.phi, rng);
        perm.resize(k);
        visits[u] = std::move(perm);
    }
    return detail::assemble(cfg.n_nodes, std::move(visits));
}

inline SimulatedCorpus generate_users(SimModel model, const SimConfig& cfg, std::size_t trial = 0) {
    return model == SimModel::canonical ? generate_canonical_users(cfg, trial) : generate_mallows_users(cfg, trial);
}

struct PipelineParams {
    std::uint64_t min_support = kDefaultMinSupport;
    double tau = 0.5;
    unsigned threads = 1;
};

struct TrialOutcome {
    bool acyclic = true;
    std::size_t edges = 0;
    std::vector<double> asymmetries;
};

struct CurvePoint {
    double value = 0;
    std::size_t trials = 0;
    double acyclic_fraction = 0;
    double mean_asymmetry = 0;
    double sd_asymmetry = 0;
    std::vector<TrialOutcome> per_trial;
};

/// Orientation onward is the regular pipeline: pair counts, orientations,
/// graph at tau, acyclicity.
inline TrialOutcome evaluate_trial(const SimulatedCorpus& corpus, const PipelineParams& params) {
    const auto comms = corpus.communities();
    const auto counts = user_pair_counts(corpus.trajectories, comms);
    const auto orientations = orient_all(counts, params.min_support, Modality::users);
    const auto graph = build_graph(orientations, comms, params.tau, Modality::users);
    TrialOutcome out;
    out.acyclic = is_acyclic_fast(graph.digraph());
    out.edges = graph.edges.size();
    for (const auto& e : graph.edges) out.asymmetries.push_back(e.asymmetry);
    return out;
}

inline void summarize(CurvePoint& point) {
    point.trials = point.per_trial.size();
    std::size_t acyclic = 0;
    std::vector<double> all;
    for (const auto& t : point.per_trial) {
        acyclic += t.acyclic ? 1 : 0;
        all.insert(all.end(), t.asymmetries.begin(), t.asymmetries.end());
    }
    point.acyclic_fraction = point.trials ? static_cast<double>(acyclic) / static_cast<double>(point.trials) : 0.0;
    if (!all.empty()) {
        point.mean_asymmetry = std::accumulate(all.begin(), all.end(), 0.0) / static_cast<double>(all.size());
        double ss = 0;
        for (double a : all) ss += (a - point.mean_asymmetry) * (a - point.mean_asymmetry);
        point.sd_asymmetry = all.size() > 1 ? std::sqrt(ss / static_cast<double>(all.size() - 1)) : 0.0;
    }
}

/// Acyclic fraction and asymmetry summary for each grid value (p for the
/// canonical model, phi for Mallows). Trials run in parallel.
inline std::vector<CurvePoint> acyclicity_curve(SimModel model, const SimConfig& base, const std::vector<double>& grid,
                                                const PipelineParams& params = {}) {
    if (grid.empty()) throw parameter_error("acyclicity curve needs a nonempty grid");
    std::vector<CurvePoint> out;
    for (double value : grid) {
        SimConfig cfg = base;
        cfg.p.reset();
        cfg.phi.reset();
        (model == SimModel::canonical ? cfg.p : cfg.phi) = value;
        cfg.validate();
        CurvePoint point;
        point.value = value;
        point.per_trial.resize(cfg.trials);
        parallel_for(cfg.trials, params.threads, [&](std::size_t t) {
            point.per_trial[t] = evaluate_trial(generate_users(model, cfg, t), params);
        });
        summarize(point);
        out.push_back(std::move(point));
    }
    return out;
}

inline std::string curve_csv(const std::vector<CurvePoint>& curve) {
    std::string out = "grid_value,acyclic_fraction,mean_asymmetry,sd_asymmetry\n";
    for (const auto& p : curve)
        out += fmt::format("{},{},{:.6f},{:.6f}\n", p.value, p.acyclic_fraction, p.mean_asymmetry, p.sd_asymmetry);
    return out;
}

}  // namespace gradients
