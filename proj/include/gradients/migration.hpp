#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ranges>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "gradients/corpus.hpp"
#include "gradients/error.hpp"
#include "gradients/parallel.hpp"

namespace gradients {

enum class EntryDefinition : std::uint8_t { thresholding, expanding };

inline std::string_view to_string(EntryDefinition d) {
    return d == EntryDefinition::thresholding ? "thresholding" : "expanding";
}

inline EntryDefinition parse_entry_definition(std::string_view s) {
    if (s == "thresholding") return EntryDefinition::thresholding;
    if (s == "expanding") return EntryDefinition::expanding;
    throw parameter_error(fmt::format("unknown entry definition '{}'", s));
}

/// The moment a user is deemed to have joined a community.
struct Entry {
    std::string user;
    std::string community;
    Timestamp entry_ts = 0;
    std::string entry_event_id;
    EntryDefinition definition = EntryDefinition::expanding;
    unsigned k = 1;

    friend bool operator==(const Entry&, const Entry&) = default;
};

struct UserTrajectory {
    std::string user;
    std::vector<Entry> entries;  // ordered by (entry_ts, entry_event_id)

    friend bool operator==(const UserTrajectory&, const UserTrajectory&) = default;
};

template <class R>
concept EventRange = std::ranges::input_range<R> &&
                     std::convertible_to<std::ranges::range_reference_t<R>, const Event&>;

namespace detail {
inline void require_positive_k(unsigned k) {
    if (k == 0) throw parameter_error("entry threshold k must be at least 1");
}
}  // namespace detail

/// A user enters a community on their k-th event there.
template <EventRange R>
std::vector<Entry> entries_thresholding(R&& user_events, unsigned k) {
    detail::require_positive_k(k);
    std::vector<Entry> out;
    std::map<std::string, unsigned, std::less<>> seen;
    for (const Event& e : user_events) {
        auto it = seen.find(e.community);
        if (it == seen.end()) it = seen.emplace(e.community, 0u).first;
        if (++it->second == k)
            out.push_back({e.user, e.community, e.ts, e.event_id, EntryDefinition::thresholding, k});
    }
    return out;
}

/// A user enters a community after k events there with no event in any
/// other not-yet-entered community in between; the entry is stamped with
/// the first event of that run. Events in already-entered communities do
/// not interrupt a run. After an entry the run state is cleared.
template <EventRange R>
std::vector<Entry> entries_expanding(R&& user_events, unsigned k) {
    detail::require_positive_k(k);
    std::vector<Entry> out;
    std::set<std::string, std::less<>> entered;
    struct RunStart {
        std::string community;
        Timestamp ts;
        std::string event_id;
    };
    std::optional<RunStart> start;
    unsigned run = 0;
    for (const Event& e : user_events) {
        if (entered.contains(e.community)) continue;
        if (start && start->community == e.community) {
            ++run;
        } else {
            start = RunStart{e.community, e.ts, e.event_id};
            run = 1;
        }
        if (run == k) {
            out.push_back({e.user, start->community, start->ts, start->event_id, EntryDefinition::expanding, k});
            entered.insert(start->community);
            start.reset();
            run = 0;
        }
    }
    return out;
}

template <EventRange R>
std::vector<Entry> entries_for(R&& user_events, EntryDefinition definition, unsigned k) {
    return definition == EntryDefinition::thresholding ? entries_thresholding(std::forward<R>(user_events), k)
                                                       : entries_expanding(std::forward<R>(user_events), k);
}

/// Entry sequences for every user in the log, sorted by user. Users with
/// fewer than two entries are kept; they contribute to sizes, not pairs.
inline std::vector<UserTrajectory> trajectories(const EventLog& log, EntryDefinition definition, unsigned k,
                                                unsigned threads = 1) {
    detail::require_positive_k(k);
    const auto& index = log.user_index();
    std::vector<const std::pair<const std::string, std::vector<std::size_t>>*> users;
    users.reserve(index.size());
    for (const auto& kv : index) users.push_back(&kv);

    std::vector<UserTrajectory> out(users.size());
    parallel_for(users.size(), threads, [&](std::size_t i) {
        out[i].user = users[i]->first;
        out[i].entries = entries_for(log.user_events(users[i]->second), definition, k);
    });
    return out;
}

/// Entries exported as CSV: user, community, entry_ts, entry_event_id.
inline std::string entries_csv(const std::vector<UserTrajectory>& trajs) {
    std::string out = "user,community,entry_ts,entry_event_id\n";
    for (const auto& t : trajs)
        for (const auto& e : t.entries)
            out += fmt::format("{},{},{},{}\n", e.user, e.community, e.entry_ts, e.entry_event_id);
    return out;
}

}  // namespace gradients
