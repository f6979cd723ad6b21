#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "gradients/corpus.hpp"
#include "gradients/error.hpp"
#include "gradients/extract.hpp"
#include "gradients/gradient.hpp"
#include "gradients/parallel.hpp"

namespace gradients {

/// Built-in per-community measures, in report order.
inline const std::vector<std::string>& builtin_attributes() {
    static const std::vector<std::string> names{
        "n_users",       "total_activity", "activity_per_user",     "n_urls",
        "urls_per_user", "urls_per_post",  "self_mentions",         "mentions_received",
        "mentions_made", "self_mentions_per_post", "mentions_others_per_post", "distinctiveness",
    };
    return names;
}

/// Row label used in printed reports.
inline std::string attribute_label(std::string_view name) {
    static const std::map<std::string, std::string, std::less<>> labels{
        {"n_users", "# users"},
        {"total_activity", "total activity"},
        {"activity_per_user", "activity per user"},
        {"toxicity", "toxicity"},
        {"distinctiveness", "distinctiveness"},
        {"n_urls", "# URLs"},
        {"urls_per_user", "URLs per user"},
        {"urls_per_post", "URL per post"},
        {"self_mentions", "Self-mentions"},
        {"mentions_received", "# times mentioned"},
        {"mentions_made", "# times mentions others"},
        {"self_mentions_per_post", "self-mentions per post"},
        {"mentions_others_per_post", "mentions others per post"},
    };
    auto it = labels.find(name);
    return it == labels.end() ? std::string(name) : it->second;
}

/// community -> attribute -> value. Absent values stay absent.
class AttributeTable {
public:
    void set(const std::string& community, const std::string& attribute, double value) {
        values_[community][attribute] = value;
        if (std::ranges::find(attributes_, attribute) == attributes_.end()) attributes_.push_back(attribute);
    }

    std::optional<double> get(std::string_view community, std::string_view attribute) const {
        auto c = values_.find(community);
        if (c == values_.end()) return std::nullopt;
        auto a = c->second.find(attribute);
        if (a == c->second.end()) return std::nullopt;
        return a->second;
    }

    const std::vector<std::string>& attributes() const noexcept { return attributes_; }

    std::vector<std::string> communities() const {
        std::vector<std::string> out;
        for (const auto& [c, _] : values_) out.push_back(c);
        return out;
    }

    /// Long-form CSV: community,attribute,value.
    std::string csv(const std::vector<std::string>& community_order) const {
        std::string out = "community,attribute,value\n";
        for (const auto& c : community_order)
            for (const auto& a : attributes_)
                if (auto v = get(c, a)) out += fmt::format("{},{},{}\n", c, a, *v);
        return out;
    }

    std::map<std::string, std::string> metadata;

private:
    std::map<std::string, std::map<std::string, double, std::less<>>, std::less<>> values_;
    std::vector<std::string> attributes_;
};

// ---------------------------------------------------------------------------
// Distinctiveness

/// Lowercase ASCII alphanumeric runs of length >= 2.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (cur.size() >= 2) out.push_back(cur);
        cur.clear();
    };
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (c < 128 && std::isalnum(c))
            cur.push_back(static_cast<char>(std::tolower(c)));
        else
            flush();
    }
    flush();
    return out;
}

using TermVector = std::map<std::string, double>;

namespace detail {

inline double dot(const TermVector& a, const TermVector& b) {
    const TermVector& small = a.size() <= b.size() ? a : b;
    const TermVector& large = a.size() <= b.size() ? b : a;
    double s = 0;
    for (const auto& [t, w] : small)
        if (auto it = large.find(t); it != large.end()) s += w * it->second;
    return s;
}

inline double norm(const TermVector& v) { return std::sqrt(dot(v, v)); }

}  // namespace detail

/// One minus the cosine similarity between a community's tf-idf vector and
/// the mean of the other communities' unit-normalized tf-idf vectors. A
/// "document" is one community's concatenated text; idf uses the smoothed
/// form ln((1 + N) / (1 + df)) + 1 over the N communities with text.
/// Communities without tokens map to nullopt.
inline std::map<std::string, std::optional<double>> distinctiveness_all(const EventLog& log, const Category& category,
                                                                        unsigned threads = 1) {
    const auto& comms = category.communities;
    std::vector<std::map<std::string, std::uint64_t>> tf(comms.size());
    parallel_for(comms.size(), threads, [&](std::size_t i) {
        auto it = log.community_index().find(comms[i]);
        if (it == log.community_index().end()) return;
        for (auto idx : it->second) {
            const auto& e = log.events()[idx];
            if (!e.text) continue;
            for (auto& tok : tokenize(*e.text)) ++tf[i][tok];
        }
    });

    std::map<std::string, std::uint64_t> df;
    std::size_t with_text = 0;
    for (const auto& counts : tf) {
        if (counts.empty()) continue;
        ++with_text;
        for (const auto& [t, _] : counts) ++df[t];
    }

    std::vector<TermVector> unit(comms.size());
    for (std::size_t i = 0; i < comms.size(); ++i) {
        for (const auto& [t, c] : tf[i]) {
            const double idf = std::log((1.0 + static_cast<double>(with_text)) / (1.0 + static_cast<double>(df[t]))) + 1.0;
            unit[i][t] = static_cast<double>(c) * idf;
        }
        const double n = detail::norm(unit[i]);
        if (n > 0)
            for (auto& [_, w] : unit[i]) w /= n;
    }

    std::map<std::string, std::optional<double>> out;
    for (std::size_t i = 0; i < comms.size(); ++i) {
        out[comms[i]] = std::nullopt;
        if (unit[i].empty()) continue;
        TermVector centroid;
        std::size_t others = 0;
        for (std::size_t j = 0; j < comms.size(); ++j) {
            if (j == i || unit[j].empty()) continue;
            ++others;
            for (const auto& [t, w] : unit[j]) centroid[t] += w;
        }
        if (others == 0) continue;
        for (auto& [_, w] : centroid) w /= static_cast<double>(others);
        const double denom = detail::norm(centroid);  // unit[i] has norm 1
        if (denom <= 0) continue;
        const double cosine = detail::dot(unit[i], centroid) / denom;
        out[comms[i]] = std::clamp(1.0 - cosine, 0.0, 1.0);
    }
    return out;
}

inline std::optional<double> distinctiveness(const std::string& community, const Category& category,
                                             const EventLog& log) {
    auto all = distinctiveness_all(log, category);
    auto it = all.find(community);
    if (it == all.end()) throw parameter_error(fmt::format("community '{}' is not in the category", community));
    return it->second;
}

// ---------------------------------------------------------------------------
// External attributes

struct ExternalValue {
    std::string community;
    std::string attribute;
    double value = 0;
};

/// Reads `community,attribute,value` CSV rows. Any malformed row is an error.
inline std::vector<ExternalValue> load_external_attributes(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error(fmt::format("cannot read attribute file {}", path.string()));
    std::string line;
    std::size_t line_no = 0;
    std::vector<ExternalValue> out;
    auto fail = [&](std::string_view why) {
        return data_error(fmt::format("{}:{}: {}", path.string(), line_no, why));
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != "community,attribute,value") throw fail("header must be 'community,attribute,value'");
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        std::string_view rest = line;
        for (auto comma = rest.find(','); comma != std::string_view::npos; comma = rest.find(',')) {
            fields.push_back(rest.substr(0, comma));
            rest.remove_prefix(comma + 1);
        }
        fields.push_back(rest);
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) throw fail("expected 3 non-empty fields");
        double v = 0;
        auto [ptr, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), v);
        if (ec != std::errc{} || ptr != fields[2].data() + fields[2].size() || !std::isfinite(v))
            throw fail(fmt::format("value '{}' is not a decimal", fields[2]));
        out.push_back({std::string(fields[0]), std::string(fields[1]), v});
    }
    if (line_no == 0) throw data_error(fmt::format("{}: empty attribute file", path.string()));
    return out;
}

/// Adds external values; returns warnings for communities outside the category.
inline std::vector<std::string> merge_external(AttributeTable& table, const Category& category,
                                               const std::vector<ExternalValue>& rows) {
    std::vector<std::string> warnings;
    for (const auto& r : rows) {
        if (!category.contains(r.community)) {
            warnings.push_back(fmt::format("external attribute '{}' names unknown community '{}'", r.attribute,
                                           r.community));
            continue;
        }
        table.set(r.community, r.attribute, r.value);
    }
    return warnings;
}

// ---------------------------------------------------------------------------
// Per-community attributes

/// Sizes, activity, URL and mention rates, and distinctiveness for every
/// community. Rates use all users and all events of the community.
inline AttributeTable community_attributes(const EventLog& log, const Category& category, const Extraction& extraction,
                                           unsigned threads = 1) {
    AttributeTable t;
    t.metadata["activity_per_user"] = "total events / distinct users (all users, not only entered users)";
    t.metadata["n_urls"] = "distinct canonical URLs posted in the community after bot filtering";
    t.metadata["distinctiveness"] =
        "1 - cosine(tf-idf, mean of other communities' unit tf-idf); document = community text; "
        "tokens = lowercase alphanumeric runs of length >= 2";

    std::map<std::string, std::set<std::string>, std::less<>> urls;
    for (const auto& p : extraction.postings) urls[p.community].insert(p.url.canonical);

    std::map<std::string, std::uint64_t, std::less<>> self, received, made;
    for (const auto& m : extraction.mentions) {
        if (m.is_self()) {
            ++self[m.source_community];
        } else {
            ++made[m.source_community];
            ++received[m.target_community];
        }
    }

    const auto dist = distinctiveness_all(log, category, threads);

    for (const auto& c : category.communities) {
        std::set<std::string_view> users;
        std::uint64_t events = 0;
        if (auto it = log.community_index().find(c); it != log.community_index().end()) {
            events = it->second.size();
            for (auto idx : it->second) users.insert(log.events()[idx].user);
        }
        const auto n_users = static_cast<double>(users.size());
        const auto total = static_cast<double>(events);
        auto ratio = [](double num, double den) { return den > 0 ? num / den : 0.0; };
        const auto n_urls = static_cast<double>(urls[c].size());
        const auto n_self = static_cast<double>(self[c]);
        const auto n_made = static_cast<double>(made[c]);

        t.set(c, "n_users", n_users);
        t.set(c, "total_activity", total);
        t.set(c, "activity_per_user", ratio(total, n_users));
        t.set(c, "n_urls", n_urls);
        t.set(c, "urls_per_user", ratio(n_urls, n_users));
        t.set(c, "urls_per_post", ratio(n_urls, total));
        t.set(c, "self_mentions", n_self);
        t.set(c, "mentions_received", static_cast<double>(received[c]));
        t.set(c, "mentions_made", n_made);
        t.set(c, "self_mentions_per_post", ratio(n_self, total));
        t.set(c, "mentions_others_per_post", ratio(n_made, total));
        if (auto d = dist.at(c)) t.set(c, "distinctiveness", *d);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Edge sign test

enum class Trend : std::uint8_t { increases, decreases, none };

inline std::string_view to_string(Trend t) {
    switch (t) {
        case Trend::increases: return "Increases";
        case Trend::decreases: return "Decreases";
        case Trend::none: return "None";
    }
    return "?";
}

struct EdgeTestResult {
    std::string attribute;
    Modality modality = Modality::users;
    std::size_t n_edges = 0;       // usable edges
    std::size_t n_decreasing = 0;  // source value > target value
    std::size_t n_excluded = 0;    // missing value or exact tie
    Trend direction = Trend::none;
    double p_value = 1.0;
    int stars = 0;

    std::string cell() const { return fmt::format("{}{}", to_string(direction), std::string(stars, '*')); }
};

/// Two-sided exact sign test: 2 * min(P[X <= d], P[X >= d]), X ~ Bin(n, 1/2), capped at 1.
inline double sign_test_p_value(std::size_t n, std::size_t d) {
    if (n == 0 || d > n) throw parameter_error("sign test needs 0 <= d <= n and n >= 1");
    boost::math::binomial_distribution<> dist(static_cast<double>(n), 0.5);
    const double lower = boost::math::cdf(dist, static_cast<double>(d));
    const double upper = d == 0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, static_cast<double>(d - 1)));
    return std::min(1.0, 2.0 * std::min(lower, upper));
}

inline int stars_for(double p) {
    if (p < 0.01) return 2;
    if (p < 0.05) return 1;
    return 0;
}

/// Does the attribute fall or rise from source to target across the graph's edges?
inline EdgeTestResult edge_binomial_test(const GradientGraph& graph, const AttributeTable& table,
                                         const std::string& attribute) {
    EdgeTestResult r;
    r.attribute = attribute;
    r.modality = graph.modality;
    for (const auto& e : graph.edges) {
        auto s = table.get(e.source, attribute);
        auto t = table.get(e.target, attribute);
        if (!s || !t || *s == *t) {
            ++r.n_excluded;
            continue;
        }
        ++r.n_edges;
        if (*s > *t) ++r.n_decreasing;
    }
    if (r.n_edges == 0) throw analysis_error(fmt::format("no testable edges for attribute '{}'", attribute));
    r.p_value = sign_test_p_value(r.n_edges, r.n_decreasing);
    const auto twice = 2 * r.n_decreasing;
    r.direction = twice > r.n_edges ? Trend::decreases : twice < r.n_edges ? Trend::increases : Trend::none;
    r.stars = stars_for(r.p_value);
    return r;
}

struct ReportColumn {
    std::string label;  // e.g. "URL", "Mention", "Expanding"
    std::optional<GradientGraph> graph;
};

/// One row per attribute, one column per modality graph; blank cells where a
/// graph is missing or has no testable edges.
struct AttributeReport {
    std::vector<std::string> columns;
    std::vector<std::string> attributes;
    std::vector<std::vector<std::optional<EdgeTestResult>>> cells;  // [attribute][column]

    std::string text() const {
        std::vector<std::vector<std::string>> rows;
        rows.push_back({"measure"});
        for (const auto& c : columns) rows.back().push_back(c);
        for (std::size_t a = 0; a < attributes.size(); ++a) {
            rows.push_back({attribute_label(attributes[a])});
            for (const auto& cell : cells[a]) rows.back().push_back(cell ? cell->cell() : "");
        }
        std::vector<std::size_t> width(columns.size() + 1, 0);
        for (const auto& r : rows)
            for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
        std::string out;
        for (std::size_t ri = 0; ri < rows.size(); ++ri) {
            std::string line;
            for (std::size_t i = 0; i < rows[ri].size(); ++i) {
                line += rows[ri][i];
                if (i + 1 < rows[ri].size()) line += std::string(width[i] - rows[ri][i].size() + 2, ' ');
            }
            while (!line.empty() && line.back() == ' ') line.pop_back();
            out += line + "\n";
            if (ri == 0) {
                std::size_t total = 0;
                for (auto w : width) total += w + 2;
                out += std::string(total - 2, '-') + "\n";
            }
        }
        return out;
    }

    nlohmann::ordered_json json() const {
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        for (std::size_t a = 0; a < attributes.size(); ++a)
            for (std::size_t c = 0; c < columns.size(); ++c) {
                const auto& cell = cells[a][c];
                if (!cell) continue;
                j.push_back({{"attribute", attributes[a]},
                             {"column", columns[c]},
                             {"n_edges", cell->n_edges},
                             {"n_decreasing", cell->n_decreasing},
                             {"n_excluded", cell->n_excluded},
                             {"direction", std::string(to_string(cell->direction))},
                             {"p_value", cell->p_value},
                             {"stars", std::string(cell->stars, '*')}});
            }
        return j;
    }
};

inline AttributeReport attribute_report(const std::vector<ReportColumn>& columns, const AttributeTable& table,
                                        const std::vector<std::string>& attributes) {
    if (std::ranges::none_of(columns, [](const auto& c) { return c.graph.has_value(); }))
        throw parameter_error("attribute report needs at least one modality graph");
    AttributeReport r;
    for (const auto& c : columns) r.columns.push_back(c.label);
    r.attributes = attributes;
    for (const auto& a : attributes) {
        auto& row = r.cells.emplace_back();
        for (const auto& c : columns) {
            if (!c.graph) {
                row.emplace_back();
                continue;
            }
            try {
                row.emplace_back(edge_binomial_test(*c.graph, table, a));
            } catch (const Error&) {
                row.emplace_back();
            }
        }
    }
    return r;
}

}  // namespace gradients
