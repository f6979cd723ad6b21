#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "gradients/corpus.hpp"
#include "gradients/random.hpp"
#include "gradients/stats.hpp"

namespace gradients {

/// Parameters of a synthetic category with a planted gradient: communities
/// are listed upstream first, users, URLs and mentions flow downstream, user
/// counts and toxicity fall and vocabulary becomes more specialised along
/// the order.
struct SyntheticSpec {
    std::string name = "synthetic";
    std::vector<std::string> communities{"atlas", "bramble", "cinder", "dune", "ember", "fjord", "grove", "helix"};
    std::size_t migrants = 500;
    double reverse_fraction = 0.15;     // migrants that walk the order backwards
    std::size_t events_per_stay = 21;   // one more than the default entry threshold
    std::size_t base_lurkers = 1500;    // one-off users in the first community
    std::size_t lurker_step = 150;      // fewer lurkers per downstream step
    std::size_t urls = 1200;
    std::size_t mentions_forward = 30;  // per pair, upstream -> downstream
    std::size_t mentions_backward = 6;
    std::size_t max_hop = 3;            // widest pair distance that gets traffic
    std::size_t filler_events = 8000;
    Timestamp start = 1600000000;
    Timestamp span = 365 * 86400;
    std::uint64_t seed = 7;
};

struct SyntheticCorpus {
    Category category;
    std::vector<Event> events;
    std::vector<ExternalValue> toxicity;
};

namespace detail {

inline const std::vector<std::string>& shared_vocabulary() {
    static const std::vector<std::string> words{
        "game",   "team",   "season", "play",   "week",  "good",   "think",   "people", "really", "time",
        "year",   "best",   "better", "point",  "first", "last",   "right",   "still",  "thread", "post",
        "agree",  "maybe",  "never",  "always", "today", "night",  "friend",  "price",  "news",   "thanks",
        "great",  "little", "long",   "start",  "stop",  "change", "support", "group",  "hope",   "question",
        "answer", "idea",   "plan",   "work",   "home",  "money",  "watch",   "read",   "write",  "share",
    };
    return words;
}

inline std::string synthetic_text(std::size_t community, const std::string& name, std::size_t n_communities,
                                  Engine& rng) {
    const auto& shared = shared_vocabulary();
    const double jargon = 0.05 + 0.6 * static_cast<double>(community) / static_cast<double>(std::max<std::size_t>(1, n_communities - 1));
    const auto words = 8 + rng() % 8;
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) out += ' ';
        if (uniform01(rng) < jargon)
            out += fmt::format("{}term{}", name, rng() % 25);
        else
            out += shared[rng() % shared.size()];
    }
    return out;
}

inline Timestamp uniform_time(const SyntheticSpec& s, Engine& rng, double from = 0.0, double to = 1.0) {
    const double u = from + (to - from) * uniform01(rng);
    return s.start + static_cast<Timestamp>(u * static_cast<double>(s.span));
}

}  // namespace detail

inline SyntheticCorpus make_synthetic_category(const SyntheticSpec& s) {
    const std::size_t n = s.communities.size();
    if (n < 3) throw parameter_error("synthetic category needs at least 3 communities");
    if (s.base_lurkers < s.lurker_step * (n - 1) + 1) throw parameter_error("lurker counts must stay positive");

    SyntheticCorpus out;
    out.category = {s.name, s.communities};
    out.category.validate();
    auto& ev = out.events;
    auto text = [&](std::size_t c, Engine& rng) { return detail::synthetic_text(c, s.communities[c], n, rng); };

    // Lurkers: one event each, fewer per step downstream.
    std::vector<std::vector<std::string>> lurkers(n);
    {
        auto rng = make_engine(s.seed, {1});
        for (std::size_t c = 0; c < n; ++c) {
            const std::size_t count = s.base_lurkers - s.lurker_step * c;
            for (std::size_t i = 0; i < count; ++i) {
                auto user = fmt::format("{}-reader{:04}", s.communities[c], i);
                lurkers[c].push_back(user);
                ev.push_back({fmt::format("l{}-{}", c, i), user, s.communities[c], detail::uniform_time(s, rng),
                              EventKind::comment, text(c, rng), {}});
            }
        }
    }
    auto poster = [&](std::size_t c, Engine& rng) { return lurkers[c][rng() % lurkers[c].size()]; };

    // Migrants: contiguous walks down the order, some walked backwards.
    {
        auto rng = make_engine(s.seed, {2});
        std::vector<double> start_weight(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) start_weight[i] = std::pow(0.7, static_cast<double>(i));
        std::discrete_distribution<std::size_t> pick_start(start_weight.begin(), start_weight.end());
        for (std::size_t u = 0; u < s.migrants; ++u) {
            const std::size_t first = pick_start(rng);
            const std::size_t len = std::min<std::size_t>(2 + rng() % (s.max_hop), n - first);
            std::vector<std::size_t> path(len);
            for (std::size_t i = 0; i < len; ++i) path[i] = first + i;
            if (uniform01(rng) < s.reverse_fraction) std::ranges::reverse(path);
            const auto user = fmt::format("walker{:04}", u);
            Timestamp t = detail::uniform_time(s, rng, 0.02, 0.5);
            std::size_t k = 0;
            for (auto c : path) {
                for (std::size_t i = 0; i < s.events_per_stay; ++i) {
                    t += 600 + static_cast<Timestamp>(rng() % 7200);
                    ev.push_back({fmt::format("m{}-{}", u, k++), user, s.communities[c], t,
                                  i == 0 ? EventKind::post : EventKind::comment, text(c, rng), {}});
                }
                t += 86400 + static_cast<Timestamp>(rng() % (7 * 86400));
            }
        }
    }

    // URLs: first seen upstream, reposted downstream; a share arrive the other way.
    {
        auto rng = make_engine(s.seed, {3});
        for (std::size_t i = 0; i < s.urls; ++i) {
            const std::size_t a = rng() % (n - 1);
            const std::size_t hop = 1 + rng() % std::min(s.max_hop, n - 1 - a);
            const std::size_t b = a + hop;
            Timestamp ta = detail::uniform_time(s, rng, 0.02, 0.9);
            Timestamp tb = ta + 3600 + static_cast<Timestamp>(rng() % (10 * 86400));
            if (uniform01(rng) < s.reverse_fraction) std::swap(ta, tb);
            const auto url = fmt::format("https://news.example.org/story/{}", i);
            for (auto [c, t] : {std::pair{a, ta}, std::pair{b, tb}}) {
                std::string body = fmt::format("{} {} {}", text(c, rng), url, text(c, rng));
                if (rng() % 10 == 0) {
                    const std::size_t other = rng() % n;
                    body += fmt::format(" https://www.reddit.com/r/{}/comments/x{}", s.communities[other], i);
                }
                if (rng() % 40 == 0) body += " https://www.reddit.com/message/compose?to=bot";
                ev.push_back({fmt::format("u{}-{}", i, c), poster(c, rng), s.communities[c], t, EventKind::post,
                              std::move(body), {}});
            }
        }
    }

    // Mentions: upstream communities point downstream more often than back.
    {
        auto rng = make_engine(s.seed, {4});
        std::size_t id = 0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n && b - a <= s.max_hop; ++b) {
                for (std::size_t i = 0; i < s.mentions_forward + s.mentions_backward; ++i) {
                    const bool forward = i < s.mentions_forward;
                    const std::size_t from = forward ? a : b;
                    const std::size_t to = forward ? b : a;
                    ev.push_back({fmt::format("r{}", id++), poster(from, rng), s.communities[from],
                                  detail::uniform_time(s, rng, 0.02, 0.98), EventKind::comment,
                                  fmt::format("{} see r/{} for more", text(from, rng), s.communities[to]), {}});
                }
                ev.push_back({fmt::format("r{}", id++), poster(a, rng), s.communities[a],
                              detail::uniform_time(s, rng, 0.02, 0.98), EventKind::comment,
                              fmt::format("welcome to /r/{}", s.communities[a]), {}});
            }
    }

    // Filler chatter by existing lurkers.
    {
        auto rng = make_engine(s.seed, {5});
        for (std::size_t i = 0; i < s.filler_events; ++i) {
            const std::size_t c = rng() % n;
            ev.push_back({fmt::format("f{}", i), poster(c, rng), s.communities[c], detail::uniform_time(s, rng),
                          EventKind::comment, text(c, rng), {}});
        }
    }

    std::ranges::stable_sort(ev, canonical_less);
    for (std::size_t c = 0; c < n; ++c)
        out.toxicity.push_back({s.communities[c], "toxicity", 0.40 - 0.04 * static_cast<double>(c)});
    return out;
}

inline std::string toxicity_csv(const std::vector<ExternalValue>& rows) {
    std::string out = "community,attribute,value\n";
    for (const auto& r : rows) out += fmt::format("{},{},{:.4f}\n", r.community, r.attribute, r.value);
    return out;
}

}  // namespace gradients
