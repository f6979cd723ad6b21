#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "gradients/corpus.hpp"
#include "gradients/error.hpp"
#include "gradients/parallel.hpp"

namespace gradients {

namespace detail {

inline char ascii_lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

inline std::string lowercase(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = ascii_lower(c);
    return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return ascii_lower(x) == ascii_lower(y); });
}

inline bool istarts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

inline bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Trailing characters stripped from a URL candidate.
constexpr std::string_view kUrlTrim = ".,;:)]}>\"'";

}  // namespace detail

struct NormalizedUrl {
    std::string canonical;
    std::string original;

    friend bool operator==(const NormalizedUrl&, const NormalizedUrl&) = default;
};

/// Canonical form: lowercase scheme and authority, fragment removed, all
/// trailing slashes removed. Returns nullopt for anything that is not an
/// http(s) URL with a non-empty host.
inline std::optional<NormalizedUrl> normalize_url(std::string_view raw) {
    std::string_view scheme;
    if (detail::istarts_with(raw, "https://"))
        scheme = "https";
    else if (detail::istarts_with(raw, "http://"))
        scheme = "http";
    else
        return std::nullopt;

    std::string_view rest = raw.substr(scheme.size() + 3);
    if (auto hash = rest.find('#'); hash != std::string_view::npos) rest = rest.substr(0, hash);
    auto auth_end = rest.find_first_of("/?");
    std::string_view authority = rest.substr(0, auth_end);
    std::string_view tail = auth_end == std::string_view::npos ? std::string_view{} : rest.substr(auth_end);
    if (authority.empty()) return std::nullopt;

    std::string canonical = fmt::format("{}://{}{}", scheme, detail::lowercase(authority), tail);
    while (canonical.back() == '/') canonical.pop_back();
    return NormalizedUrl{std::move(canonical), std::string(raw)};
}

/// Host part of a canonical URL: authority without userinfo or port.
inline std::string_view url_host(std::string_view canonical) {
    auto start = canonical.find("://");
    if (start == std::string_view::npos) return {};
    auto rest = canonical.substr(start + 3);
    auto authority = rest.substr(0, rest.find_first_of("/?"));
    if (auto at = authority.rfind('@'); at != std::string_view::npos) authority = authority.substr(at + 1);
    if (auto colon = authority.find(':'); colon != std::string_view::npos) authority = authority.substr(0, colon);
    return authority;
}

/// Path of a canonical URL (without query), possibly empty.
inline std::string_view url_path(std::string_view canonical) {
    auto start = canonical.find("://");
    if (start == std::string_view::npos) return {};
    auto rest = canonical.substr(start + 3);
    auto slash = rest.find('/');
    auto query = rest.find('?');
    if (slash == std::string_view::npos || (query != std::string_view::npos && query < slash)) return {};
    auto path = rest.substr(slash);
    return path.substr(0, path.find('?'));
}

/// Every http(s) URL in the text, normalized, in order of occurrence. A URL
/// runs to the next whitespace and loses trailing punctuation.
inline std::vector<NormalizedUrl> extract_urls(std::string_view text) {
    std::vector<NormalizedUrl> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t hit = std::string_view::npos;
        for (std::size_t i = pos; i + 7 <= text.size(); ++i) {
            if (detail::ascii_lower(text[i]) != 'h') continue;
            auto rest = text.substr(i);
            if (detail::istarts_with(rest, "http://") || detail::istarts_with(rest, "https://")) {
                hit = i;
                break;
            }
        }
        if (hit == std::string_view::npos) break;
        std::size_t end = hit;
        while (end < text.size() && !detail::is_space(text[end])) ++end;
        std::string_view candidate = text.substr(hit, end - hit);
        while (!candidate.empty() && detail::kUrlTrim.find(candidate.back()) != std::string_view::npos)
            candidate.remove_suffix(1);
        if (auto url = normalize_url(candidate)) out.push_back(std::move(*url));
        pos = end;
    }
    return out;
}

inline const std::set<std::string>& default_platform_hosts() {
    static const std::set<std::string> hosts{"reddit.com", "www.reddit.com", "old.reddit.com", "redd.it"};
    return hosts;
}

struct UrlClassification {
    enum class Kind { external, platform_other, platform_self };
    Kind kind = Kind::external;
    std::string target;  // community named by a platform URL; may be empty

    bool is_platform() const noexcept { return kind != Kind::external; }
    friend bool operator==(const UrlClassification&, const UrlClassification&) = default;
};

namespace detail {

/// Resolves a community name case-insensitively against the roster. Returns
/// the roster's spelling, or the name itself when it is not a member.
inline std::string resolve_community(std::string_view name, const std::set<std::string>& roster, bool* member) {
    for (const auto& r : roster) {
        if (iequals(r, name)) {
            if (member) *member = true;
            return r;
        }
    }
    if (member) *member = false;
    return std::string(name);
}

}  // namespace detail

/// Classifies a URL as external, a link to another community on the
/// platform, or a link back into the carrying community.
inline UrlClassification classify_platform_url(const NormalizedUrl& url, std::string_view carrying_community,
                                               const std::set<std::string>& host_set,
                                               const std::set<std::string>& roster) {
    const auto host = url_host(url.canonical);
    if (!host_set.contains(std::string(host))) return {};

    // Look for a leading "/r/<name>" path.
    auto path = url_path(url.canonical);
    std::vector<std::string_view> segments;
    while (!path.empty()) {
        if (path.front() == '/') {
            path.remove_prefix(1);
            continue;
        }
        auto cut = path.find('/');
        segments.push_back(path.substr(0, cut));
        path = cut == std::string_view::npos ? std::string_view{} : path.substr(cut);
    }
    if (segments.size() >= 2 && detail::iequals(segments[0], "r") && !segments[1].empty()) {
        const auto name = segments[1];
        if (detail::iequals(name, carrying_community))
            return {UrlClassification::Kind::platform_self, std::string(carrying_community)};
        return {UrlClassification::Kind::platform_other, detail::resolve_community(name, roster, nullptr)};
    }
    return {UrlClassification::Kind::platform_other, {}};
}

enum class MentionOrigin : std::uint8_t { text_pattern, reddit_url };

inline std::string_view to_string(MentionOrigin o) {
    return o == MentionOrigin::text_pattern ? "text_pattern" : "reddit_url";
}

struct MentionMatch {
    std::string target;
    MentionOrigin origin = MentionOrigin::text_pattern;
    friend bool operator==(const MentionMatch&, const MentionMatch&) = default;
};

/// Every `r/<name>` or `/r/<name>` occurrence that starts at a word boundary,
/// regardless of any roster. Names keep their original spelling.
inline std::vector<std::string> scan_mention_names(std::string_view text) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i + 1 < text.size(); ++i) {
        if (detail::ascii_lower(text[i]) != 'r' || text[i + 1] != '/') continue;
        std::size_t start = i;
        if (i > 0 && text[i - 1] == '/') start = i - 1;
        // "grill/r/x" or "site.com/r/x" continue a word or path: not a mention.
        if (start > 0 && (detail::is_word_char(text[start - 1]) || text[start - 1] == '/')) continue;
        std::size_t end = i + 2;
        while (end < text.size() && detail::is_word_char(text[end])) ++end;
        if (end == i + 2) continue;
        out.emplace_back(text.substr(i + 2, end - i - 2));
        i = end - 1;
    }
    return out;
}

/// Roster-filtered text mentions, one per occurrence, targets in roster spelling.
inline std::vector<MentionMatch> extract_mentions(std::string_view text, const std::set<std::string>& roster) {
    std::vector<MentionMatch> out;
    for (const auto& name : scan_mention_names(text)) {
        bool member = false;
        auto target = detail::resolve_community(name, roster, &member);
        if (member) out.push_back({std::move(target), MentionOrigin::text_pattern});
    }
    return out;
}

struct UrlPosting {
    NormalizedUrl url;
    std::string community;
    Timestamp ts = 0;
    std::string event_id;
};

struct MentionRef {
    std::string source_community;
    std::string target_community;
    Timestamp ts = 0;
    std::string event_id;
    MentionOrigin origin = MentionOrigin::text_pattern;

    bool is_self() const noexcept { return source_community == target_community; }
};

struct BotFilterResult {
    std::vector<UrlPosting> postings;
    std::size_t removed = 0;
};

/// Drops postings whose canonical URL starts with any denylist prefix.
inline BotFilterResult filter_bot_urls(std::vector<UrlPosting> postings, const std::vector<std::string>& denylist) {
    BotFilterResult r;
    for (auto& p : postings) {
        bool denied = std::ranges::any_of(denylist, [&](const std::string& prefix) {
            return !prefix.empty() && p.url.canonical.starts_with(prefix);
        });
        if (denied)
            ++r.removed;
        else
            r.postings.push_back(std::move(p));
    }
    return r;
}

/// Prefixes for links that bots and settings pages spread across many
/// communities. Matched against canonical URLs.
inline const std::vector<std::string>& default_denylist() {
    static const std::vector<std::string> list{
        "https://reddit.com/message/compose",
        "https://www.reddit.com/message/compose",
        "https://old.reddit.com/message/compose",
        "https://reddit.com/prefs",
        "https://www.reddit.com/prefs",
        "https://www.reddit.com/r/autotldr",
        "https://reddit.com/r/autotldr",
        "https://www.reddit.com/r/botwatch",
        "https://www.reddit.com/wiki/faq",
        "https://www.reddithelp.com",
    };
    return list;
}

/// Denylist file: one literal prefix per line; '#' starts a comment.
inline std::vector<std::string> load_denylist(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error(fmt::format("cannot read denylist {}", path.string()));
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        out.push_back(line.substr(b, e - b + 1));
    }
    return out;
}

struct ExtractOptions {
    std::set<std::string> platform_hosts = default_platform_hosts();
    std::vector<std::string> denylist = default_denylist();
    unsigned threads = 1;
};

struct PlatformCounts {
    std::size_t urls = 0;
    std::size_t platform = 0;
    std::size_t self = 0;
};

/// Everything the URL and mention modalities need from a log.
struct Extraction {
    std::vector<UrlPosting> postings;  // after bot filtering, canonical event order
    std::size_t bot_removed = 0;
    std::vector<MentionRef> mentions;  // roster targets only, self-mentions included
    std::map<std::string, PlatformCounts> platform_counts;  // per carrying community
    std::map<std::pair<std::string, std::string>, std::size_t> mention_names;  // (source, raw lowercase name)
};

/// Extracts URLs (explicit `urls` field first, then text) and mentions from
/// every event. Within one event a canonical URL is kept once.
inline Extraction extract_category(const EventLog& log, const Category& category, const ExtractOptions& options = {}) {
    const std::set<std::string> roster(category.communities.begin(), category.communities.end());
    const auto& events = log.events();

    struct PerEvent {
        std::vector<UrlPosting> postings;
        std::vector<MentionRef> mentions;
        std::vector<std::string> names;
    };
    std::vector<PerEvent> per(events.size());

    parallel_for(events.size(), options.threads, [&](std::size_t i) {
        const Event& e = events[i];
        auto& out = per[i];
        std::vector<NormalizedUrl> urls;
        for (const auto& raw : e.urls)
            if (auto u = normalize_url(raw)) urls.push_back(std::move(*u));
        if (e.text) {
            auto found = extract_urls(*e.text);
            std::ranges::move(found, std::back_inserter(urls));
        }
        std::set<std::string_view> seen;
        for (auto& u : urls) {
            if (!seen.insert(u.canonical).second) continue;
            out.postings.push_back({u, e.community, e.ts, e.event_id});
        }
        if (e.text) {
            for (auto& m : extract_mentions(*e.text, roster))
                out.mentions.push_back({e.community, std::move(m.target), e.ts, e.event_id, m.origin});
            for (auto& n : scan_mention_names(*e.text)) out.names.push_back(detail::lowercase(n));
        }
    });

    Extraction x;
    std::vector<UrlPosting> all;
    for (auto& p : per) std::ranges::move(p.postings, std::back_inserter(all));
    auto filtered = filter_bot_urls(std::move(all), options.denylist);
    x.postings = std::move(filtered.postings);
    x.bot_removed = filtered.removed;

    // Platform-directed URLs double as mentions; merge them in event order.
    std::map<std::string_view, std::vector<MentionRef>> url_mentions;
    for (const auto& p : x.postings) {
        auto cls = classify_platform_url(p.url, p.community, options.platform_hosts, roster);
        auto& counts = x.platform_counts[p.community];
        ++counts.urls;
        if (cls.is_platform()) ++counts.platform;
        if (cls.kind == UrlClassification::Kind::platform_self) ++counts.self;
        if (cls.is_platform() && roster.contains(cls.target))
            url_mentions[p.event_id].push_back({p.community, cls.target, p.ts, p.event_id, MentionOrigin::reddit_url});
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
        std::ranges::move(per[i].mentions, std::back_inserter(x.mentions));
        if (auto it = url_mentions.find(events[i].event_id); it != url_mentions.end()) {
            std::ranges::move(it->second, std::back_inserter(x.mentions));
            url_mentions.erase(it);
        }
        for (auto& n : per[i].names) ++x.mention_names[{events[i].community, n}];
    }
    for (const auto& c : category.communities) x.platform_counts.try_emplace(c);
    return x;
}

struct PlatformStats {
    std::size_t n_urls = 0;
    std::size_t n_platform = 0;
    std::size_t n_self = 0;
    std::optional<double> fraction_platform;          // undefined when there are no URLs
    std::optional<double> fraction_self_of_platform;  // undefined when there are no platform URLs
};

inline PlatformStats platform_stats(const PlatformCounts& c) {
    PlatformStats s{c.urls, c.platform, c.self, std::nullopt, std::nullopt};
    if (c.urls > 0) s.fraction_platform = static_cast<double>(c.platform) / static_cast<double>(c.urls);
    if (c.platform > 0) s.fraction_self_of_platform = static_cast<double>(c.self) / static_cast<double>(c.platform);
    return s;
}

/// Category-level share of platform links and, among those, self links.
inline PlatformStats url_platform_stats(const Extraction& x) {
    PlatformCounts total;
    for (const auto& [_, c] : x.platform_counts) {
        total.urls += c.urls;
        total.platform += c.platform;
        total.self += c.self;
    }
    return platform_stats(total);
}

}  // namespace gradients
