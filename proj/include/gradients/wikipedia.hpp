#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "gradients/corpus.hpp"
#include "gradients/error.hpp"
#include "gradients/gradient.hpp"

namespace gradients {

/// Filters that adapt the Reddit-oriented definitions to wiki edit logs,
/// where a page is a community and an edit is a comment.
struct WikipediaPreset {
    std::size_t min_page_editors = 100;
    std::size_t min_editor_edits = 3;
    Timestamp since = 1262304000;  // 2010-01-01T00:00:00Z
    std::uint64_t min_common_editors = 30;
    double min_overlap = 0.6;
};

struct PresetResult {
    Category category;
    EventLog log;
    std::vector<std::string> notes;
};

/// Page and editor filters, applied in order:
///   1. keep pages with at least min_page_editors distinct editors;
///   2. drop edits before `since`;
///   3. keep editors with at least min_editor_edits remaining edits.
inline PresetResult apply_wikipedia_filters(const EventLog& log, const Category& category,
                                            const WikipediaPreset& preset = {}) {
    PresetResult r;
    r.category.name = category.name;
    for (const auto& page : category.communities) {
        std::set<std::string_view> editors;
        if (auto it = log.community_index().find(page); it != log.community_index().end())
            for (auto i : it->second) editors.insert(log.events()[i].user);
        if (editors.size() >= preset.min_page_editors)
            r.category.communities.push_back(page);
        else
            r.notes.push_back(fmt::format("dropped page '{}' ({} editors < {})", page, editors.size(),
                                          preset.min_page_editors));
    }
    if (r.category.communities.size() < 2)
        throw data_error(fmt::format("wikipedia preset leaves {} page(s); need at least 2",
                                     r.category.communities.size()));

    auto recent = log.filtered([&](const Event& e) { return e.ts >= preset.since && r.category.contains(e.community); });
    std::map<std::string_view, std::size_t> edits;
    for (const auto& e : recent.events()) ++edits[e.user];
    std::size_t dropped_editors = 0;
    for (const auto& [u, n] : edits)
        if (n < preset.min_editor_edits) ++dropped_editors;
    r.log = recent.filtered([&](const Event& e) { return edits.at(e.user) >= preset.min_editor_edits; });
    r.notes.push_back(fmt::format("kept {} of {} editors with >= {} edits since {}", edits.size() - dropped_editors,
                                  edits.size(), preset.min_editor_edits, preset.since));
    return r;
}

/// Pages A and B are comparable when they share at least min_common_editors
/// editors and at least min_overlap of their combined edits fall inside the
/// intersection of the two pages' edit spans.
inline PairFilter wikipedia_pair_filter(const EventLog& log, const WikipediaPreset& preset = {}) {
    struct Page {
        std::set<std::string> editors;
        std::vector<Timestamp> times;  // ascending
    };
    auto pages = std::make_shared<std::map<std::string, Page, std::less<>>>();
    for (const auto& e : log.events()) {
        auto& p = (*pages)[e.community];
        p.editors.insert(e.user);
        p.times.push_back(e.ts);
    }
    return [pages, preset](const std::string& a, const std::string& b) {
        auto ia = pages->find(a);
        auto ib = pages->find(b);
        if (ia == pages->end() || ib == pages->end()) return false;
        const auto& pa = ia->second;
        const auto& pb = ib->second;
        std::size_t common = 0;
        for (const auto& u : pa.editors) common += pb.editors.contains(u) ? 1 : 0;
        if (common < preset.min_common_editors) return false;

        const Timestamp lo = std::max(pa.times.front(), pb.times.front());
        const Timestamp hi = std::min(pa.times.back(), pb.times.back());
        if (lo > hi) return false;
        auto inside = [&](const std::vector<Timestamp>& t) {
            return static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), hi) -
                                            std::lower_bound(t.begin(), t.end(), lo));
        };
        const double frac = static_cast<double>(inside(pa.times) + inside(pb.times)) /
                            static_cast<double>(pa.times.size() + pb.times.size());
        return frac >= preset.min_overlap;
    };
}

}  // namespace gradients
