#include <gtest/gtest.h>

#include <random>

#include "gradients/archive.hpp"
#include "gradients/wikipedia.hpp"
#include "test_util.hpp"

using namespace gradients;
using gradients::test::ev;

namespace {
Archive sample_archive() {
    Event a = ev("e1", "alice", "nba", 10, "hello r/nfl");
    a.urls = {"https://x.io", "https://y.io/p"};
    Event b = ev("e2", "bob", "nfl", 5);
    b.kind = EventKind::post;
    Event c = ev("e3", "alice", "nfl", 5, std::string("text with \0 byte", 16));
    return {{"sports", {"nba", "nfl"}}, "", EventLog({a, b, c})};
}
}  // namespace

TEST(Archive, RoundTripByteIdentical) {
    auto a = sample_archive();
    auto bytes = serialize_archive(a);
    auto back = parse_archive(bytes);
    EXPECT_EQ(back.category.name, "sports");
    EXPECT_EQ(back.category.communities, a.category.communities);
    EXPECT_TRUE(back.log == a.log);
    EXPECT_EQ(serialize_archive(back), bytes);
}

TEST(Archive, FileRoundTrip) {
    test::TempDir dir;
    auto a = sample_archive();
    a.preset = "wikipedia";
    write_archive(dir / "c.gca", a);
    auto back = read_archive(dir / "c.gca");
    EXPECT_EQ(back.preset, "wikipedia");
    EXPECT_TRUE(back.log == a.log);
    EXPECT_THROW(read_archive(dir / "missing.gca"), Error);
}

TEST(Archive, RejectsCorruptInput) {
    auto bytes = serialize_archive(sample_archive());
    EXPECT_THROW(parse_archive("NOTANARC"), Error);
    for (std::size_t cut : {std::size_t{4}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1})
        EXPECT_THROW(parse_archive(std::string_view(bytes).substr(0, cut)), Error) << cut;
    EXPECT_THROW(parse_archive(bytes + "x"), Error);
    auto bad_version = bytes;
    bad_version[8] = 9;
    EXPECT_THROW(parse_archive(bad_version), Error);
}

TEST(Archive, RandomLogsRoundTrip) {
    std::mt19937_64 rng(10);
    for (int t = 0; t < 50; ++t) {
        std::vector<Event> events;
        for (int i = 0; i < 40; ++i) {
            Event e = ev("id" + std::to_string(rng() % 100) + "_" + std::to_string(i), "u" + std::to_string(rng() % 6),
                         rng() % 2 ? "a" : "b", static_cast<Timestamp>(rng() % 1000) - 500);
            if (rng() % 2) e.text = std::string(rng() % 20, 'x');
            e.kind = static_cast<EventKind>(rng() % 3);
            events.push_back(e);
        }
        Archive a{{"c", {"a", "b"}}, "", EventLog(events)};
        auto back = parse_archive(serialize_archive(a));
        EXPECT_TRUE(back.log == a.log);
    }
}

TEST(Archive, CommunityOutsideCategoryRejected) {
    Archive a{{"c", {"a", "b"}}, "", EventLog({ev("1", "u", "z", 1)})};
    EXPECT_THROW(serialize_archive(a), Error);
}

namespace {
/// Page with `editors` distinct editors, each making `edits` edits at
/// timestamps starting from `start`.
void add_page(std::vector<Event>& out, const std::string& page, int editors, int edits, Timestamp start,
              const std::string& prefix = "ed") {
    for (int u = 0; u < editors; ++u)
        for (int k = 0; k < edits; ++k)
            out.push_back(ev(fmt::format("{}-{}-{}", page, u, k), prefix + std::to_string(u), page, start + u * 10 + k));
}
}  // namespace

TEST(WikipediaPreset, PageAndEditorFilters) {
    WikipediaPreset preset;
    preset.since = 1000;
    std::vector<Event> events;
    add_page(events, "Big", 120, 3, 2000);
    add_page(events, "Other", 110, 3, 2000);
    add_page(events, "Small", 50, 3, 2000);
    // an editor with two recent edits and one old edit is dropped
    events.push_back(ev("old", "lonely", "Big", 10));
    events.push_back(ev("new1", "lonely", "Big", 5000));
    events.push_back(ev("new2", "lonely", "Big", 5001));
    Category cat{"wiki", {"Big", "Other", "Small"}};
    auto r = apply_wikipedia_filters(EventLog(events), cat, preset);
    EXPECT_EQ(r.category.communities, (std::vector<std::string>{"Big", "Other"}));
    EXPECT_FALSE(r.log.user_index().contains("lonely"));
    EXPECT_EQ(r.log.size(), 120u * 3 + 110u * 3);
    EXPECT_FALSE(r.notes.empty());
}

TEST(WikipediaPreset, TooFewPagesIsDataError) {
    std::vector<Event> events;
    add_page(events, "Only", 150, 3, 2000000000);
    try {
        apply_wikipedia_filters(EventLog(events), Category{"w", {"Only", "Tiny"}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::data);
    }
}

TEST(WikipediaPreset, PairFilterCommonEditorsAndOverlap) {
    std::vector<Event> events;
    add_page(events, "A", 40, 1, 0);      // ts 0..390
    add_page(events, "B", 40, 1, 0);      // same editors, same span
    add_page(events, "C", 20, 1, 0);      // only 20 editors in common
    add_page(events, "D", 40, 1, 300);    // span 300..690: overlap with A is 300..390
    auto allow = wikipedia_pair_filter(EventLog(events));
    EXPECT_TRUE(allow("A", "B"));
    EXPECT_FALSE(allow("A", "C"));
    // A has 10 edits in [300, 390], D has 10: 20 / 80 = 0.25 < 0.6
    EXPECT_FALSE(allow("A", "D"));
    EXPECT_FALSE(allow("A", "missing"));
}
