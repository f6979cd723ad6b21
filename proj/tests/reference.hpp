#pragma once

// Slow, obviously-correct reference implementations used as test oracles.

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gradients/corpus.hpp"
#include "gradients/migration.hpp"

namespace gradients::test {

/// Entry at event i when exactly k events among [0..i] share its community.
inline std::vector<Entry> naive_thresholding(const std::vector<Event>& ev, unsigned k) {
    std::vector<Entry> out;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        unsigned count = 0;
        for (std::size_t j = 0; j <= i; ++j) count += ev[j].community == ev[i].community ? 1 : 0;
        if (count == k) out.push_back({ev[i].user, ev[i].community, ev[i].ts, ev[i].event_id, EntryDefinition::thresholding, k});
    }
    return out;
}

/// From the last entry point p, find the first t whose window [p..t], with
/// entered communities dropped, ends in a run of exactly k of one community.
inline std::vector<Entry> naive_expanding(const std::vector<Event>& ev, unsigned k) {
    std::vector<Entry> out;
    std::set<std::string> entered;
    std::size_t p = 0;
    for (std::size_t t = 0; t < ev.size(); ++t) {
        std::vector<std::size_t> window;
        for (std::size_t j = p; j <= t; ++j)
            if (!entered.contains(ev[j].community)) window.push_back(j);
        if (window.empty() || window.back() != t) continue;
        std::size_t run = 0;
        while (run < window.size() && ev[window[window.size() - 1 - run]].community == ev[t].community) ++run;
        if (run == k) {
            const Event& s = ev[window[window.size() - k]];
            out.push_back({s.user, s.community, s.ts, s.event_id, EntryDefinition::expanding, k});
            entered.insert(s.community);
            p = t + 1;
        }
    }
    return out;
}

/// Random log: up to 5 users, 4 communities, 50 events, timestamps in a
/// narrow range so ties are common.
inline std::vector<Event> random_small_log(std::mt19937_64& rng) {
    const int users = 1 + static_cast<int>(rng() % 5);
    const int comms = 1 + static_cast<int>(rng() % 4);
    const int n = static_cast<int>(rng() % 51);
    std::vector<Event> out;
    for (int i = 0; i < n; ++i) {
        Event e;
        e.event_id = "e" + std::to_string(rng() % 1000) + "_" + std::to_string(i);
        e.user = "u" + std::to_string(rng() % users);
        e.community = std::string(1, static_cast<char>('A' + rng() % comms));
        e.ts = static_cast<Timestamp>(rng() % 12);
        out.push_back(std::move(e));
    }
    return out;
}

inline bool same_entries(const std::vector<Entry>& a, const std::vector<Entry>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].user != b[i].user || a[i].community != b[i].community || a[i].entry_ts != b[i].entry_ts ||
            a[i].entry_event_id != b[i].entry_event_id || a[i].definition != b[i].definition || a[i].k != b[i].k)
            return false;
    return true;
}

/// Every digraph on n labeled nodes, counted acyclic by peeling sinks.
inline std::uint64_t brute_force_dags(unsigned n) {
    std::vector<std::pair<unsigned, unsigned>> slots;
    for (unsigned i = 0; i < n; ++i)
        for (unsigned j = 0; j < n; ++j)
            if (i != j) slots.emplace_back(i, j);
    std::uint64_t acyclic = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << slots.size()); ++mask) {
        std::vector<unsigned> out(n, 0);  // successor bitsets
        for (std::size_t s = 0; s < slots.size(); ++s)
            if (mask >> s & 1) out[slots[s].first] |= 1u << slots[s].second;
        unsigned alive = (1u << n) - 1;
        bool progress = true;
        while (alive && progress) {
            progress = false;
            for (unsigned v = 0; v < n; ++v)
                if ((alive >> v & 1) && (out[v] & alive) == 0) {
                    alive &= ~(1u << v);
                    progress = true;
                }
        }
        acyclic += alive == 0 ? 1 : 0;
    }
    return acyclic;
}

}  // namespace gradients::test
