#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "gradients/corpus.hpp"
#include "test_util.hpp"

using namespace gradients;
using gradients::test::ev;
using gradients::test::TempDir;

namespace {

const Category kSports{"sports", {"nba", "fantasybball", "nfl"}};

std::string line(std::string_view id, std::string_view user, std::string_view comm, Timestamp ts,
                 std::string_view kind = "comment") {
    return fmt::format(R"({{"event_id":"{}","user":"{}","community":"{}","ts":{},"kind":"{}"}})", id, user, comm, ts,
                       kind);
}

}  // namespace

TEST(Corpus, LoadFiltersUnknownCommunities) {
    TempDir dir;
    auto path = dir.write("events.jsonl", line("e1", "u1", "nba", 10) + "\n" + line("e2", "u1", "knitting", 11) +
                                              "\n" + line("e3", "u2", "nfl", 12) + "\n");
    auto r = load_events(path, kSports);
    EXPECT_EQ(r.log.size(), 2u);
    EXPECT_EQ(r.dropped_unknown, 1u);
    EXPECT_TRUE(r.malformed.empty());
}

TEST(Corpus, EmptyFileGivesEmptyLog) {
    TempDir dir;
    auto r = load_events(dir.write("empty.jsonl", ""), kSports);
    EXPECT_TRUE(r.log.empty());
    EXPECT_EQ(r.dropped_unknown, 0u);
}

TEST(Corpus, UnreadableFileIsDataError) {
    try {
        load_events("/nonexistent/events.jsonl", kSports);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::data);
    }
}

TEST(Corpus, EqualTimestampsOrderedByEventId) {
    TempDir dir;
    std::vector<std::tuple<std::string, Timestamp>> rows{{"e9", 5}, {"e2", 5}, {"e5", 1}, {"e1", 7}, {"e3", 5}};
    std::string body;
    for (auto& [id, ts] : rows) body += line(id, "u", "nba", ts) + "\n";
    auto r = load_events(dir.write("ties.jsonl", body), kSports);

    // oracle: full sort by (ts, event_id)
    std::ranges::sort(rows, [](auto& a, auto& b) {
        return std::get<1>(a) != std::get<1>(b) ? std::get<1>(a) < std::get<1>(b) : std::get<0>(a) < std::get<0>(b);
    });
    ASSERT_EQ(r.log.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(r.log.events()[i].event_id, std::get<0>(rows[i]));
}

TEST(Corpus, MalformedLinesCollectedOrFatalWhenStrict) {
    TempDir dir;
    auto path = dir.write("bad.jsonl", line("e1", "u1", "nba", 10) + "\n{not json\n" +
                                           R"({"event_id":"e2","user":"u","community":"nba","ts":-4,"kind":"post"})" +
                                           "\n" + R"({"event_id":"e3","user":"u","community":"nba","ts":4,"kind":"vote"})" +
                                           "\n" + R"({"event_id":"e4","user":"","community":"nba","ts":4,"kind":"post"})" +
                                           "\n");
    auto r = load_events(path, kSports);
    EXPECT_EQ(r.log.size(), 1u);
    ASSERT_EQ(r.malformed.size(), 4u);
    EXPECT_NE(r.malformed[0].find(":2:"), std::string::npos);

    EXPECT_THROW(load_events(path, kSports, {.strict = true}), Error);
}

TEST(Corpus, OptionalFieldsAndUnknownFields) {
    auto e = parse_event(
        R"({"event_id":"x","user":"u","community":"nba","ts":3,"kind":"edit","text":"hi","urls":["https://a.io"],"score":9})");
    EXPECT_EQ(e.kind, EventKind::edit);
    EXPECT_EQ(e.text.value(), "hi");
    ASSERT_EQ(e.urls.size(), 1u);
    EXPECT_EQ(parse_event(to_json_line(e)), e);
}

TEST(Corpus, CategoryValidation) {
    EXPECT_THROW(parse_category(nlohmann::json{{"name", "x"}, {"communities", {"a"}}}), Error);
    EXPECT_THROW(parse_category(nlohmann::json{{"name", "x"}, {"communities", {"a", "a"}}}), Error);
    auto c = parse_category(nlohmann::json{{"name", "x"}, {"communities", {"a", "b"}}});
    EXPECT_EQ(c.communities.size(), 2u);
}

TEST(Validate, CountsPerUser) {
    EventLog log({ev("1", "ann", "nba", 1), ev("2", "ann", "nfl", 2), ev("3", "bob", "nba", 3),
                  ev("4", "ann", "nba", 4), ev("5", "bob", "nfl", 5)});
    auto r = validate_log(log);
    EXPECT_EQ(r.total_events, 5u);
    EXPECT_EQ(r.users.at("ann"), 3u);
    EXPECT_EQ(r.users.at("bob"), 2u);
    EXPECT_EQ(r.communities.at("nba").events, 3u);
    EXPECT_EQ(r.communities.at("nba").first_ts, 1);
    EXPECT_EQ(r.communities.at("nba").last_ts, 4);
}

TEST(Validate, DuplicateIdFlaggedOnce) {
    EventLog log({ev("dup", "a", "nba", 1), ev("dup", "b", "nba", 2), ev("dup", "c", "nba", 3), ev("ok", "a", "nba", 4)});
    auto r = validate_log(log);
    ASSERT_EQ(r.duplicate_event_ids.size(), 1u);
    EXPECT_EQ(r.duplicate_event_ids[0], "dup");
    EXPECT_EQ(r.issues.size(), 1u);
}

TEST(Validate, EmptyLog) {
    auto r = validate_log(EventLog{});
    EXPECT_EQ(r.total_events, 0u);
    EXPECT_TRUE(r.users.empty());
    EXPECT_TRUE(r.communities.empty());
    EXPECT_TRUE(r.issues.empty());
}

TEST(Window, IntersectsSpans) {
    Category cat{"c", {"a", "b"}};
    EventLog log({ev("1", "u", "a", 0), ev("2", "u", "a", 10), ev("3", "u", "b", 5), ev("4", "u", "b", 20),
                  ev("5", "u", "a", 7)});
    auto w = common_window(log, cat);
    EXPECT_EQ(w.begin, 5);
    EXPECT_EQ(w.end, 10);
    auto r = restrict_to_common_window(log, cat);
    EXPECT_EQ(r.size(), 3u);  // ts 5, 7, 10
    for (const auto& e : r.events()) EXPECT_TRUE(e.ts >= 5 && e.ts <= 10);
}

TEST(Window, IdenticalSpansUnchanged) {
    Category cat{"c", {"a", "b"}};
    EventLog log({ev("1", "u", "a", 0), ev("2", "u", "a", 9), ev("3", "u", "b", 0), ev("4", "u", "b", 9)});
    EXPECT_EQ(restrict_to_common_window(log, cat), log);
}

TEST(Window, DisjointSpansGiveEmptyLog) {
    Category cat{"c", {"a", "b"}};
    EventLog log({ev("1", "u", "a", 0), ev("2", "u", "a", 3), ev("3", "u", "b", 5), ev("4", "u", "b", 9)});
    EXPECT_TRUE(common_window(log, cat).empty());
    EXPECT_TRUE(restrict_to_common_window(log, cat).empty());
}

TEST(Window, SilentCommunityIsError) {
    Category cat{"c", {"a", "quiet"}};
    EventLog log({ev("1", "u", "a", 0)});
    try {
        restrict_to_common_window(log, cat);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("quiet"), std::string::npos);
    }
}

namespace {
EventLog random_log(std::mt19937_64& rng, std::size_t n) {
    std::vector<Event> events;
    const char* comms[] = {"a", "b", "c"};
    for (std::size_t i = 0; i < n; ++i)
        events.push_back(ev("e" + std::to_string(rng() % 1000), "u" + std::to_string(rng() % 4), comms[rng() % 3],
                            static_cast<Timestamp>(rng() % 30)));
    return EventLog(std::move(events));
}
}  // namespace

TEST(CorpusProperties, CanonicalOrderIdempotent) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 200; ++t) {
        auto log = random_log(rng, rng() % 40);
        EXPECT_EQ(EventLog(log.events()), log);
        EXPECT_TRUE(std::ranges::is_sorted(log.events(), canonical_less));
    }
}

TEST(CorpusProperties, WindowShrinksAndNests) {
    std::mt19937_64 rng(11);
    Category cat{"c", {"a", "b", "c"}};
    int stable = 0;
    for (int t = 0; t < 200; ++t) {
        auto log = random_log(rng, 10 + rng() % 40);
        bool all_present = std::ranges::all_of(cat.communities, [&](auto& c) { return log.community_index().contains(c); });
        if (!all_present) continue;
        const auto w1 = common_window(log, cat);
        auto once = restrict_to_common_window(log, cat);
        EXPECT_LE(once.size(), log.size());
        for (const auto& e : once.events()) EXPECT_TRUE(e.ts >= w1.begin && e.ts <= w1.end);
        bool still_all = std::ranges::all_of(cat.communities, [&](auto& c) { return once.community_index().contains(c); });
        if (!still_all) continue;
        const auto w2 = common_window(once, cat);
        EXPECT_GE(w2.begin, w1.begin);
        EXPECT_LE(w2.end, w1.end);
        auto twice = restrict_to_common_window(once, cat);
        EXPECT_LE(twice.size(), once.size());
        stable += twice == once ? 1 : 0;
    }
    EXPECT_GT(stable, 0);
}

// Re-applying can narrow further: a's in-window events no longer reach the
// original window edges.
TEST(CorpusProperties, WindowNotAlwaysIdempotent) {
    Category cat{"c", {"a", "b"}};
    EventLog log({ev("1", "u", "a", 0), ev("2", "u", "a", 50), ev("3", "u", "a", 100), ev("4", "v", "b", 20),
                  ev("5", "v", "b", 80)});
    auto once = restrict_to_common_window(log, cat);
    EXPECT_EQ(once.size(), 3u);
    auto twice = restrict_to_common_window(once, cat);
    ASSERT_EQ(twice.size(), 1u);
    EXPECT_EQ(twice.events().front().event_id, "2");
}

TEST(CorpusProperties, ValidationTotalsMatchAcceptedRecords) {
    std::mt19937_64 rng(3);
    TempDir dir;
    for (int t = 0; t < 20; ++t) {
        std::string body;
        for (int i = 0; i < 30; ++i) {
            const char* comm = (rng() % 4 == 0) ? "elsewhere" : "nba";
            body += (rng() % 7 == 0) ? "garbage\n" : line("e" + std::to_string(i), "u", comm, rng() % 50) + "\n";
        }
        auto r = load_events(dir.write("f.jsonl", body), kSports);
        auto report = validate_log(r);
        EXPECT_EQ(report.total_events, r.log.size());
        std::size_t sum = 0;
        for (auto& [_, n] : report.users) sum += n;
        EXPECT_EQ(sum, r.log.size());
        EXPECT_EQ(report.issues.size(), r.malformed.size());
    }
}

TEST(Corpus, ShardsLoadInParallelDeterministically) {
    TempDir dir;
    std::vector<std::filesystem::path> shards;
    for (int s = 0; s < 4; ++s) {
        std::string body;
        for (int i = 0; i < 25; ++i) body += line(fmt::format("s{}e{}", s, i), "u", "nba", (i * 7 + s) % 13) + "\n";
        shards.push_back(dir.write(fmt::format("shard{}.jsonl", s), body));
    }
    auto one = load_events(shards, kSports, {.threads = 1});
    auto four = load_events(shards, kSports, {.threads = 4});
    EXPECT_EQ(one.log, four.log);
    EXPECT_EQ(one.log.size(), 100u);
}
