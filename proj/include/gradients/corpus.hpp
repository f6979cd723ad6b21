#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ranges>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "gradients/error.hpp"
#include "gradients/parallel.hpp"

namespace gradients {

using Timestamp = std::int64_t;

enum class EventKind : std::uint8_t { post, comment, edit };

inline std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::post: return "post";
        case EventKind::comment: return "comment";
        case EventKind::edit: return "edit";
    }
    return "?";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
    if (s == "post") return EventKind::post;
    if (s == "comment") return EventKind::comment;
    if (s == "edit") return EventKind::edit;
    return std::nullopt;
}

/// One unit of activity: a post, comment, or page edit.
struct Event {
    std::string event_id;
    std::string user;
    std::string community;
    Timestamp ts = 0;
    EventKind kind = EventKind::post;
    std::optional<std::string> text;
    std::vector<std::string> urls;  // explicit link field, raw form

    friend bool operator==(const Event&, const Event&) = default;
};

/// Canonical event order: timestamp, then event_id.
inline bool canonical_less(const Event& a, const Event& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    return a.event_id < b.event_id;
}

struct Category {
    std::string name;
    std::vector<std::string> communities;

    void validate() const {
        if (communities.size() < 2)
            throw data_error(fmt::format("category '{}' needs at least 2 communities", name));
        std::set<std::string_view> seen;
        for (const auto& c : communities) {
            if (c.empty()) throw data_error(fmt::format("category '{}' has an empty community name", name));
            if (!seen.insert(c).second)
                throw data_error(fmt::format("category '{}' lists community '{}' twice", name, c));
        }
    }

    bool contains(std::string_view community) const {
        return std::ranges::find(communities, community) != communities.end();
    }

    std::optional<std::size_t> index_of(std::string_view community) const {
        auto it = std::ranges::find(communities, community);
        if (it == communities.end()) return std::nullopt;
        return static_cast<std::size_t>(it - communities.begin());
    }
};

inline Category parse_category(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("name") || !j.contains("communities") ||
        !j["name"].is_string() || !j["communities"].is_array())
        throw data_error("category must be an object with 'name' and 'communities'");
    Category cat;
    cat.name = j["name"].get<std::string>();
    for (const auto& c : j["communities"]) {
        if (!c.is_string()) throw data_error("category communities must be strings");
        cat.communities.push_back(c.get<std::string>());
    }
    cat.validate();
    return cat;
}

inline Category load_category(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error(fmt::format("cannot read category file {}", path.string()));
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(fmt::format("category file {}: {}", path.string(), e.what()));
    }
    return parse_category(j);
}

inline nlohmann::json to_json(const Category& cat) {
    return {{"name", cat.name}, {"communities", cat.communities}};
}

/// Immutable, canonically ordered event sequence with user and community
/// indices. Safe to share read-only across threads.
class EventLog {
public:
    using Index = std::map<std::string, std::vector<std::size_t>, std::less<>>;

    EventLog() = default;

    explicit EventLog(std::vector<Event> events) : events_(std::move(events)) {
        std::ranges::stable_sort(events_, canonical_less);
        for (std::size_t i = 0; i < events_.size(); ++i) {
            by_user_[events_[i].user].push_back(i);
            by_community_[events_[i].community].push_back(i);
        }
    }

    const std::vector<Event>& events() const noexcept { return events_; }
    std::size_t size() const noexcept { return events_.size(); }
    bool empty() const noexcept { return events_.empty(); }

    const Index& user_index() const noexcept { return by_user_; }
    const Index& community_index() const noexcept { return by_community_; }

    /// Events of one user in canonical order, as a view of `const Event&`.
    auto user_events(const std::vector<std::size_t>& indices) const {
        return indices | std::views::transform([this](std::size_t i) -> const Event& { return events_[i]; });
    }

    template <class Pred>
    EventLog filtered(Pred keep) const {
        std::vector<Event> out;
        for (const auto& e : events_)
            if (keep(e)) out.push_back(e);
        return EventLog(std::move(out));
    }

    friend bool operator==(const EventLog& a, const EventLog& b) { return a.events_ == b.events_; }

private:
    std::vector<Event> events_;
    Index by_user_;
    Index by_community_;
};

/// Parses one input record. Throws a data error describing the first defect.
inline Event parse_event(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        throw data_error("not a JSON object");
    }
    if (!j.is_object()) throw data_error("not a JSON object");

    auto required_string = [&](const char* key) {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) throw data_error(fmt::format("missing or non-string '{}'", key));
        auto s = it->get<std::string>();
        if (s.empty()) throw data_error(fmt::format("empty '{}'", key));
        return s;
    };

    Event e;
    e.event_id = required_string("event_id");
    e.user = required_string("user");
    e.community = required_string("community");

    auto ts = j.find("ts");
    if (ts == j.end() || !ts->is_number_integer()) throw data_error("missing or non-integer 'ts'");
    e.ts = ts->get<Timestamp>();
    if (e.ts < 0) throw data_error("negative 'ts'");

    auto kind = parse_event_kind(required_string("kind"));
    if (!kind) throw data_error("'kind' must be one of post, comment, edit");
    e.kind = *kind;

    if (auto t = j.find("text"); t != j.end() && !t->is_null()) {
        if (!t->is_string()) throw data_error("non-string 'text'");
        e.text = t->get<std::string>();
    }
    if (auto u = j.find("urls"); u != j.end() && !u->is_null()) {
        if (!u->is_array()) throw data_error("'urls' must be an array");
        for (const auto& x : *u) {
            if (!x.is_string()) throw data_error("'urls' entries must be strings");
            e.urls.push_back(x.get<std::string>());
        }
    }
    return e;
}

/// Serializes an event in the input record format (fixed key order).
inline std::string to_json_line(const Event& e) {
    nlohmann::ordered_json j;
    j["event_id"] = e.event_id;
    j["user"] = e.user;
    j["community"] = e.community;
    j["ts"] = e.ts;
    j["kind"] = std::string(to_string(e.kind));
    if (e.text) j["text"] = *e.text;
    if (!e.urls.empty()) j["urls"] = e.urls;
    return j.dump();
}

struct LoadOptions {
    bool strict = false;
    unsigned threads = 1;
};

struct LoadResult {
    EventLog log;
    std::size_t dropped_unknown = 0;
    std::vector<std::string> malformed;  // "<file>:<line>: <reason>"
};

namespace detail {

struct ShardResult {
    std::vector<Event> events;
    std::size_t dropped_unknown = 0;
    std::vector<std::string> malformed;
};

inline ShardResult load_shard(const std::filesystem::path& path, const Category& category, bool strict) {
    std::ifstream in(path);
    if (!in) throw data_error(fmt::format("cannot read {}", path.string()));
    const std::set<std::string, std::less<>> roster(category.communities.begin(), category.communities.end());

    ShardResult out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            Event e = parse_event(line);
            if (!roster.contains(e.community)) {
                ++out.dropped_unknown;
                continue;
            }
            out.events.push_back(std::move(e));
        } catch (const Error& err) {
            auto msg = fmt::format("{}:{}: {}", path.string(), line_no, err.what());
            if (strict) throw data_error(msg);
            out.malformed.push_back(std::move(msg));
        }
    }
    return out;
}

}  // namespace detail

/// Loads newline-delimited records from one or more shards, keeping only
/// events of the category's communities.
inline LoadResult load_events(const std::vector<std::filesystem::path>& paths, const Category& category,
                              LoadOptions options = {}) {
    std::vector<detail::ShardResult> shards(paths.size());
    parallel_for(paths.size(), options.threads,
                 [&](std::size_t i) { shards[i] = detail::load_shard(paths[i], category, options.strict); });

    LoadResult result;
    std::vector<Event> all;
    for (auto& s : shards) {
        result.dropped_unknown += s.dropped_unknown;
        std::ranges::move(s.malformed, std::back_inserter(result.malformed));
        std::ranges::move(s.events, std::back_inserter(all));
    }
    result.log = EventLog(std::move(all));
    return result;
}

inline LoadResult load_events(const std::filesystem::path& path, const Category& category, LoadOptions options = {}) {
    return load_events(std::vector<std::filesystem::path>{path}, category, options);
}

struct CommunitySummary {
    std::size_t events = 0;
    Timestamp first_ts = 0;
    Timestamp last_ts = 0;
};

struct ValidationReport {
    std::size_t total_events = 0;
    std::map<std::string, CommunitySummary> communities;
    std::map<std::string, std::size_t> users;
    std::vector<std::string> duplicate_event_ids;  // each id listed once
    std::vector<std::string> issues;               // malformed-record descriptions
};

inline ValidationReport validate_log(const EventLog& log) {
    ValidationReport r;
    r.total_events = log.size();
    std::map<std::string_view, std::size_t> id_count;
    for (const auto& e : log.events()) {
        auto [it, fresh] = r.communities.try_emplace(e.community, CommunitySummary{0, e.ts, e.ts});
        auto& c = it->second;
        ++c.events;
        c.first_ts = std::min(c.first_ts, e.ts);
        c.last_ts = std::max(c.last_ts, e.ts);
        ++r.users[e.user];
        if (++id_count[e.event_id] == 2) r.duplicate_event_ids.push_back(e.event_id);
    }
    std::ranges::sort(r.duplicate_event_ids);
    for (const auto& id : r.duplicate_event_ids) r.issues.push_back(fmt::format("duplicate event_id '{}'", id));
    return r;
}

inline ValidationReport validate_log(const LoadResult& loaded) {
    auto r = validate_log(loaded.log);
    r.issues.insert(r.issues.begin(), loaded.malformed.begin(), loaded.malformed.end());
    return r;
}

inline nlohmann::ordered_json to_json(const ValidationReport& r) {
    nlohmann::ordered_json j;
    j["total_events"] = r.total_events;
    auto& comms = j["communities"] = nlohmann::ordered_json::object();
    for (const auto& [name, c] : r.communities)
        comms[name] = {{"events", c.events}, {"first_ts", c.first_ts}, {"last_ts", c.last_ts}};
    j["n_users"] = r.users.size();
    j["duplicate_event_ids"] = r.duplicate_event_ids;
    j["issues"] = r.issues;
    return j;
}

struct TimeWindow {
    Timestamp begin = 0;
    Timestamp end = 0;
    bool empty() const noexcept { return begin > end; }
};

/// Intersection of the active spans of every category community.
inline TimeWindow common_window(const EventLog& log, const Category& category) {
    TimeWindow w;
    bool first = true;
    for (const auto& c : category.communities) {
        auto it = log.community_index().find(c);
        if (it == log.community_index().end() || it->second.empty())
            throw data_error(fmt::format("community '{}' has no events", c));
        const auto& idx = it->second;
        Timestamp lo = log.events()[idx.front()].ts;
        Timestamp hi = log.events()[idx.back()].ts;
        if (first) {
            w = {lo, hi};
            first = false;
        } else {
            w.begin = std::max(w.begin, lo);
            w.end = std::min(w.end, hi);
        }
    }
    return w;
}

/// Keeps events inside the common active window. An inverted window yields
/// an empty log; callers decide whether to warn.
inline EventLog restrict_to_common_window(const EventLog& log, const Category& category) {
    const auto w = common_window(log, category);
    if (w.empty()) return EventLog{};
    return log.filtered([&](const Event& e) { return e.ts >= w.begin && e.ts <= w.end; });
}

}  // namespace gradients
