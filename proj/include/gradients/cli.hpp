#pragma once

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "gradients/gradients.hpp"

namespace gradients::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_analysis = 3 };

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::parameter: return exit_usage;
        case ErrorKind::data: return exit_data;
        case ErrorKind::analysis: return exit_analysis;
    }
    return exit_usage;
}

inline std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw data_error("SHA-256 digest failed");
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

inline std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Globals {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    fs::path output_dir = ".";
};

/// Record of one command run. Written last, as manifest_<command>.json in the
/// output directory; every other output names it.
class Run {
public:
    Run(std::string command, std::vector<std::string> argv, const Globals& g)
        : command_(std::move(command)), argv_(std::move(argv)), globals_(g), started_(utc_now()) {
        fs::create_directories(g.output_dir);
    }

    std::string manifest_name() const { return "manifest_" + command_ + ".json"; }
    ojson& config() { return config_; }
    const Globals& globals() const { return globals_; }

    void input(const fs::path& p) { inputs_.push_back(p); }

    fs::path emit(const std::string& name, std::string_view content) {
        auto path = globals_.output_dir / name;
        write_file(path, content);
        outputs_.push_back(path);
        return path;
    }

    void finish() {
        ojson m;
        m["command"] = command_;
        m["argv"] = argv_;
        m["version"] = GRADIENTS_VERSION;
        m["seed"] = globals_.seed;
        m["threads"] = globals_.threads;
        m["config"] = config_;
        auto digests = [](const std::vector<fs::path>& paths) {
            ojson arr = ojson::array();
            for (const auto& p : paths) arr.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
            return arr;
        };
        m["inputs"] = digests(inputs_);
        m["outputs"] = digests(outputs_);
        m["started"] = started_;
        m["finished"] = utc_now();
        write_file(globals_.output_dir / manifest_name(), m.dump(2) + "\n");
    }

private:
    std::string command_;
    std::vector<std::string> argv_;
    Globals globals_;
    std::string started_;
    ojson config_ = ojson::object();
    std::vector<fs::path> inputs_;
    std::vector<fs::path> outputs_;
};

// ---------------------------------------------------------------------------
// ingest

struct IngestOptions {
    std::vector<fs::path> paths;
    fs::path category;
    bool strict = false;
    std::string preset = "none";
    Timestamp wiki_since = WikipediaPreset{}.since;
    std::string archive_name = "corpus.gca";
};

inline int cmd_ingest(const IngestOptions& o, Run& run, std::ostream& out, std::ostream& err) {
    run.config() = {{"paths", [&] {
                         std::vector<std::string> v;
                         for (const auto& p : o.paths) v.push_back(p.string());
                         return v;
                     }()},
                    {"category", o.category.string()},
                    {"strict", o.strict},
                    {"preset", o.preset},
                    {"wiki_since", o.wiki_since},
                    {"archive", o.archive_name}};
    if (o.preset != "none" && o.preset != "wikipedia") throw parameter_error(fmt::format("unknown preset '{}'", o.preset));
    run.input(o.category);
    for (const auto& p : o.paths) run.input(p);

    auto category = load_category(o.category);
    auto loaded = load_events(o.paths, category, {o.strict, run.globals().threads});
    auto report = to_json(validate_log(loaded));
    report["dropped_unknown_community"] = loaded.dropped_unknown;

    Archive archive{category, "", std::move(loaded.log)};
    if (o.preset == "wikipedia") {
        WikipediaPreset preset;
        preset.since = o.wiki_since;
        auto filtered = apply_wikipedia_filters(archive.log, category, preset);
        archive = {filtered.category, "wikipedia", std::move(filtered.log)};
        report["preset"] = "wikipedia";
        report["preset_notes"] = filtered.notes;
        for (const auto& note : filtered.notes) err << note << "\n";
    }
    report["archived_events"] = archive.log.size();
    report["manifest"] = run.manifest_name();

    run.emit(o.archive_name, serialize_archive(archive));
    run.emit("validation.json", report.dump(2) + "\n");
    for (const auto& issue : report["issues"]) err << "warning: " << issue.get<std::string>() << "\n";
    out << fmt::format("archived {} events across {} communities ({} unknown-community events dropped)\n",
                       archive.log.size(), archive.category.communities.size(), report["dropped_unknown_community"].get<std::size_t>());
    return exit_ok;
}

// ---------------------------------------------------------------------------
// gradient

struct GradientOptions {
    fs::path archive;
    std::string modality = "users";
    std::string definition = "expanding";
    unsigned k = 20;
    std::uint64_t min_support = kDefaultMinSupport;
    double tau = 0.5;
    bool auto_threshold = false;
    double grid_step = 0.05;
    std::size_t bins = 10;
    std::optional<fs::path> denylist;
    bool no_window = false;
    bool export_entries = false;
};

inline std::vector<Modality> parse_modalities(const std::string& s) {
    if (s == "all") return {Modality::users, Modality::urls, Modality::mentions};
    return {parse_modality(s)};
}

inline std::string capitalized(std::string_view s) {
    std::string out(s);
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
}

/// Column label used in attribute reports.
inline std::string modality_label(Modality m, std::string_view definition) {
    switch (m) {
        case Modality::urls: return "URL";
        case Modality::mentions: return "Mention";
        case Modality::users: return capitalized(definition);
    }
    return "?";
}

inline ExtractOptions extract_options(const std::optional<fs::path>& denylist, unsigned threads) {
    ExtractOptions x;
    if (denylist) x.denylist = load_denylist(*denylist);
    x.threads = threads;
    return x;
}

inline int cmd_gradient(const GradientOptions& o, Run& run, std::ostream& out, std::ostream& err) {
    run.config() = {{"archive", o.archive.string()},
                    {"modality", o.modality},
                    {"definition", o.definition},
                    {"k", o.k},
                    {"min_support", o.min_support},
                    {"tau", o.tau},
                    {"auto_threshold", o.auto_threshold},
                    {"grid_step", o.grid_step},
                    {"bins", o.bins},
                    {"denylist", o.denylist ? o.denylist->string() : std::string("default")},
                    {"common_window", !o.no_window},
                    {"export_entries", o.export_entries}};
    const auto modalities = parse_modalities(o.modality);
    const auto definition = parse_entry_definition(o.definition);
    if (o.k == 0) throw parameter_error("--k must be at least 1");
    if (o.min_support == 0) throw parameter_error("--min-support must be at least 1");
    if (!(o.tau >= 0.5 && o.tau <= 1.0)) throw parameter_error(fmt::format("--tau must lie in [0.5, 1], got {}", o.tau));
    threshold_grid(o.grid_step);
    empty_histogram(o.bins);
    if (o.denylist) run.input(*o.denylist);

    run.input(o.archive);
    const auto archive = read_archive(o.archive);
    const auto& cat = archive.category;
    const auto& comms = cat.communities;
    const EventLog log = o.no_window ? archive.log : restrict_to_common_window(archive.log, cat);
    if (log.empty()) err << "warning: the common activity window is empty\n";

    std::optional<Extraction> extraction;
    auto need_extraction = [&]() -> const Extraction& {
        if (!extraction) extraction = extract_category(log, cat, extract_options(o.denylist, run.globals().threads));
        return *extraction;
    };

    int status = exit_ok;
    for (auto m : modalities) {
        std::vector<Orientation> orientations;
        switch (m) {
            case Modality::users: {
                auto trajs = trajectories(log, definition, o.k, run.globals().threads);
                PairFilter filter;
                if (archive.preset == "wikipedia") filter = wikipedia_pair_filter(log);
                orientations = orient_all(user_pair_counts(trajs, comms, run.globals().threads), o.min_support, m, filter);
                if (o.export_entries) run.emit(fmt::format("entries_{}.csv", o.definition), entries_csv(trajs));
                break;
            }
            case Modality::urls:
                orientations = orient_all(url_pair_counts(first_postings(need_extraction().postings), comms),
                                          o.min_support, m);
                break;
            case Modality::mentions:
                orientations = orient_all(mention_pair_counts(need_extraction().mentions, comms), o.min_support, m);
                break;
        }

        const auto search = minimal_acyclic_threshold(orientations, comms, o.grid_step);
        auto graph = build_graph(orientations, comms, o.tau, m);
        std::vector<std::string> witness;
        bool acyclic = check_acyclic(graph, &witness).acyclic;
        double used = o.tau;
        bool escalated = false;
        if (!acyclic && o.auto_threshold) {
            graph = graph_at(orientations, comms, search, m);
            used = search.tau;
            escalated = true;
            acyclic = true;
            witness.clear();
        }

        const std::string mod = std::string(to_string(m));
        ojson report;
        report["manifest"] = run.manifest_name();
        report["category"] = cat.name;
        report["definition"] = m == Modality::users ? o.definition : "n/a";
        report["k"] = o.k;
        report["min_support"] = o.min_support;
        report["requested_threshold"] = o.tau;
        report["tau_star"] = search.tau;
        report["tau_star_exhausted"] = search.exhausted;
        report["escalated"] = escalated;
        report["acyclic"] = acyclic;
        report["witness"] = witness;
        const auto graph_json = to_json(graph);
        for (const auto& [key, value] : graph_json.items()) report[key] = value;
        report["threshold"] = used;
        if (acyclic) {
            auto orders = topological_orders(graph);
            report["canonical_order"] = orders.canonical_order;
            report["linear_extensions"] = orders.linear_extensions;
        }
        auto& os = report["orientations"] = ojson::array();
        for (const auto& x : orientations)
            if (x.support() > 0) os.push_back(to_json(x));

        run.emit(fmt::format("gradient_{}.json", mod), report.dump(2) + "\n");
        run.emit(fmt::format("histogram_{}.csv", mod), asymmetry_histogram(orientations, o.bins).csv());
        if (acyclic) run.emit(fmt::format("gradient_{}.dot", mod), to_dot(graph, run.manifest_name()));

        out << fmt::format("{}: {} edges over {} nodes at tau={:.2f} (tau*={:.2f}{}){}\n", mod, graph.edges.size(),
                           graph.nodes().size(), used, search.tau, search.exhausted ? ", exhausted" : "",
                           acyclic ? "" : ", CYCLIC");
        if (acyclic && !graph.edges.empty())
            out << fmt::format("  order: {}\n", fmt::join(report["canonical_order"].get<std::vector<std::string>>(), " > "));
        if (!acyclic) {
            err << fmt::format("error: {} graph has a cycle at tau={:.2f}: {}; rerun with --auto-threshold\n", mod, o.tau,
                               fmt::join(witness, " -> "));
            status = exit_analysis;
        }
    }
    return status;
}

// ---------------------------------------------------------------------------
// nullmodel

struct NullOptions {
    fs::path graph;
    std::string model = "all";
    std::uint64_t trials = 1000;
    std::optional<unsigned> dag_count;
};

struct NullRow {
    std::string category;
    std::string modality;
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::vector<NullResult> results;
};

inline std::vector<NullModel> parse_null_models(const std::string& s) {
    if (s == "all") return {NullModel::edge_direction, NullModel::edge_placement};
    return {parse_null_model(s)};
}

/// Randomizations of the graph's non-isolated part.
inline NullRow null_row(const GradientGraph& g, const std::string& category, const std::vector<NullModel>& models,
                        std::uint64_t trials, std::uint64_t seed, unsigned threads) {
    const auto names = g.nodes();
    const auto dg = g.digraph(names);
    NullRow row{category, std::string(to_string(g.modality)), names.size(), g.edges.size(), {}};
    for (auto m : models) row.results.push_back(null_model_for(dg, m, trials, seed, threads));
    return row;
}

inline ojson to_json(const NullResult& r) {
    return {{"model", std::string(to_string(r.model))},
            {"trials", r.trials},
            {"acyclic_count", r.acyclic_count},
            {"fraction", r.fraction},
            {"ci95_low", r.interval.low},
            {"ci95_high", r.interval.high},
            {"seed", r.seed},
            {"cell", format_null_fraction(r.fraction)}};
}

inline std::string null_table(const std::vector<NullRow>& rows) {
    std::string out = fmt::format("{:<14} {:<9} {:>7} {:>7}", "category", "modality", "# nodes", "# edges");
    std::vector<NullModel> models;
    if (!rows.empty())
        for (const auto& r : rows.front().results) models.push_back(r.model);
    for (auto m : models) out += fmt::format(" {:>21}", to_string(m));
    out += "\n";
    for (const auto& row : rows) {
        out += fmt::format("{:<14} {:<9} {:>7} {:>7}", row.category, row.modality, row.nodes, row.edges);
        for (const auto& r : row.results) out += fmt::format(" {:>21}", format_null_fraction(r.fraction));
        out += "\n";
    }
    return out;
}

inline std::string dag_count_text(unsigned n) {
    std::string out = fmt::format("labeled DAGs on {} nodes: {}\n", n, count_dags(n).str());
    for (auto c : {DigraphConvention::all_digraphs, DigraphConvention::no_two_cycles, DigraphConvention::tournaments}) {
        auto f = dag_fraction(n, c);
        out += fmt::format("  acyclic fraction [{}]: {} / {} = {} %\n", to_string(c), f.numerator.str(),
                           f.denominator.str(), f.percent(6));
    }
    if (n == 10)
        out += "  published figure for 10 nodes: < 4.1e-4 % (matches none of the conventions above)\n";
    return out;
}

inline GradientGraph read_graph_file(const fs::path& path, std::string* category = nullptr) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw data_error(fmt::format("{}: {}", path.string(), e.what()));
    }
    if (category) *category = j.value("category", std::string("?"));
    if (!j.value("acyclic", true))
        throw analysis_error(fmt::format("{} holds a cyclic graph; rerun gradient with --auto-threshold", path.string()));
    return graph_from_json(j);
}

inline int cmd_nullmodel(const NullOptions& o, Run& run, std::ostream& out, std::ostream&) {
    run.config() = {{"graph", o.graph.string()},
                    {"model", o.model},
                    {"trials", o.trials},
                    {"dag_count", o.dag_count ? ojson(*o.dag_count) : ojson(nullptr)}};
    if (o.dag_count) {
        const auto text = dag_count_text(*o.dag_count);
        out << text;
        run.emit(fmt::format("dag_count_{}.txt", *o.dag_count), text + fmt::format("manifest: {}\n", run.manifest_name()));
        if (o.graph.empty()) return exit_ok;
    }
    if (o.graph.empty()) throw parameter_error("nullmodel needs --graph or --dag-count");
    const auto models = parse_null_models(o.model);
    if (o.trials == 0) throw parameter_error("--trials must be at least 1");
    run.input(o.graph);
    std::string category;
    const auto g = read_graph_file(o.graph, &category);
    auto row = null_row(g, category, models, o.trials, run.globals().seed, run.globals().threads);

    ojson j;
    j["manifest"] = run.manifest_name();
    j["category"] = row.category;
    j["modality"] = row.modality;
    j["nodes"] = row.nodes;
    j["edges"] = row.edges;
    auto& results = j["results"] = ojson::array();
    for (const auto& r : row.results) results.push_back(to_json(r));
    run.emit(fmt::format("nullmodel_{}.json", row.modality), j.dump(2) + "\n");
    out << null_table({row});
    return exit_ok;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
    std::string model = "canonical";
    std::size_t nodes = 20;
    std::size_t users = 1000;
    double lambda = 1.0;
    std::optional<double> p;
    std::optional<double> phi;
    std::vector<double> grid;
    std::size_t trials = 100;
    std::uint64_t min_support = kDefaultMinSupport;
    double tau = 0.5;
    bool emit_log = false;
};

inline int cmd_simulate(const SimulateOptions& o, Run& run, std::ostream& out, std::ostream&) {
    run.config() = {{"model", o.model},           {"nodes", o.nodes},
                    {"users", o.users},           {"lambda", o.lambda},
                    {"p", o.p ? ojson(*o.p) : ojson(nullptr)},
                    {"phi", o.phi ? ojson(*o.phi) : ojson(nullptr)},
                    {"grid", o.grid},             {"trials", o.trials},
                    {"min_support", o.min_support}, {"tau", o.tau},
                    {"emit_log", o.emit_log}};
    const auto model = parse_sim_model(o.model);
    std::vector<double> grid = o.grid;
    const auto single = model == SimModel::canonical ? o.p : o.phi;
    if ((model == SimModel::canonical ? o.phi : o.p))
        throw parameter_error(model == SimModel::canonical ? "--phi applies to the mallows model" : "--p applies to the canonical model");
    if (single && !grid.empty()) throw parameter_error("give either a single value or --grid, not both");
    if (single) grid = {*single};
    if (grid.empty()) throw parameter_error(model == SimModel::canonical ? "canonical model needs --p or --grid" : "mallows model needs --phi or --grid");

    SimConfig cfg;
    cfg.n_nodes = o.nodes;
    cfg.m_users = o.users;
    cfg.lambda = o.lambda;
    cfg.trials = o.trials;
    cfg.seed = run.globals().seed;
    PipelineParams params{o.min_support, o.tau, run.globals().threads};
    if (params.min_support == 0) throw parameter_error("--min-support must be at least 1");
    if (!(o.tau >= 0.5 && o.tau <= 1.0)) throw parameter_error("--tau must lie in [0.5, 1]");

    const auto curve = acyclicity_curve(model, cfg, grid, params);
    const auto csv = curve_csv(curve);
    run.emit(fmt::format("curve_{}.csv", o.model), csv);
    out << csv;
    if (o.emit_log) {
        SimConfig one = cfg;
        (model == SimModel::canonical ? one.p : one.phi) = grid.front();
        auto corpus = generate_users(model, one, 0);
        std::string lines;
        const auto log = corpus.log();
        for (const auto& e : log.events()) lines += to_json_line(e) + "\n";
        run.emit(fmt::format("sim_{}_events.jsonl", o.model), lines);
        run.emit(fmt::format("sim_{}_category.json", o.model),
                 to_json(Category{"simulated", corpus.communities()}).dump(2) + "\n");
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------
// stats and report

struct StatsOptions {
    fs::path archive;
    std::vector<fs::path> attributes;
    std::optional<fs::path> denylist;
};

struct CategoryStats {
    Archive archive;
    Extraction extraction;
    AttributeTable table;
    std::vector<std::string> attribute_names;  // built-in then external
    std::vector<std::string> warnings;
};

/// Attributes over the whole archived log (no window restriction).
inline CategoryStats category_stats(const fs::path& archive_path, const std::vector<fs::path>& attribute_files,
                                    const std::optional<fs::path>& denylist, Run& run) {
    run.input(archive_path);
    CategoryStats s{read_archive(archive_path), {}, {}, builtin_attributes(), {}};
    s.extraction = extract_category(s.archive.log, s.archive.category, extract_options(denylist, run.globals().threads));
    s.table = community_attributes(s.archive.log, s.archive.category, s.extraction, run.globals().threads);
    for (const auto& f : attribute_files) {
        run.input(f);
        auto rows = load_external_attributes(f);
        auto w = merge_external(s.table, s.archive.category, rows);
        s.warnings.insert(s.warnings.end(), w.begin(), w.end());
        for (const auto& r : rows)
            if (std::ranges::find(s.attribute_names, r.attribute) == s.attribute_names.end())
                s.attribute_names.push_back(r.attribute);
    }
    return s;
}

inline std::string fraction_cell(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : "n/a"; }

/// Per-community platform link shares, plus a category total row.
inline std::string url_stats_csv(const Extraction& x, const Category& cat) {
    std::string out = "community,n_urls,n_platform,n_self,fraction_platform,fraction_self_of_platform\n";
    auto row = [&](const std::string& name, const PlatformStats& s) {
        out += fmt::format("{},{},{},{},{},{}\n", name, s.n_urls, s.n_platform, s.n_self, fraction_cell(s.fraction_platform),
                           fraction_cell(s.fraction_self_of_platform));
    };
    for (const auto& c : cat.communities) {
        auto it = x.platform_counts.find(c);
        row(c, platform_stats(it == x.platform_counts.end() ? PlatformCounts{} : it->second));
    }
    row("(all)", url_platform_stats(x));
    return out;
}

inline int cmd_stats(const StatsOptions& o, Run& run, std::ostream& out, std::ostream& err) {
    std::vector<std::string> files;
    for (const auto& f : o.attributes) files.push_back(f.string());
    run.config() = {{"archive", o.archive.string()},
                    {"attributes", files},
                    {"denylist", o.denylist ? o.denylist->string() : std::string("default")}};
    if (o.denylist) run.input(*o.denylist);
    auto s = category_stats(o.archive, o.attributes, o.denylist, run);
    for (const auto& w : s.warnings) err << "warning: " << w << "\n";

    run.emit("attributes.csv", s.table.csv(s.archive.category.communities));
    run.emit("url_stats.csv", url_stats_csv(s.extraction, s.archive.category));
    ojson j;
    j["manifest"] = run.manifest_name();
    j["category"] = s.archive.category.name;
    j["attribute_notes"] = s.table.metadata;
    j["bot_urls_removed"] = s.extraction.bot_removed;
    j["warnings"] = s.warnings;
    run.emit("stats.json", j.dump(2) + "\n");
    out << s.table.csv(s.archive.category.communities);
    return exit_ok;
}

struct ReportOptions {
    fs::path archive;
    std::vector<fs::path> graphs;
    std::vector<fs::path> attributes;
    std::optional<fs::path> denylist;
    std::uint64_t trials = 1000;
};

inline std::string category_summary(const Archive& a) {
    const auto v = validate_log(a.log);
    std::string out = fmt::format("{:<14} {:>12} {:>8} {:>10}  {}\n", "category", "communities", "users", "events", "span (UTC seconds)");
    Timestamp lo = 0, hi = 0;
    if (!a.log.empty()) lo = a.log.events().front().ts, hi = a.log.events().back().ts;
    out += fmt::format("{:<14} {:>12} {:>8} {:>10}  {}..{}\n\n", a.category.name, a.category.communities.size(),
                       v.users.size(), v.total_events, lo, hi);
    out += fmt::format("{:<20} {:>8} {:>10}\n", "community", "users", "events");
    for (const auto& c : a.category.communities) {
        std::set<std::string_view> users;
        std::size_t events = 0;
        if (auto it = a.log.community_index().find(c); it != a.log.community_index().end()) {
            events = it->second.size();
            for (auto i : it->second) users.insert(a.log.events()[i].user);
        }
        out += fmt::format("{:<20} {:>8} {:>10}\n", c, users.size(), events);
    }
    return out;
}

inline std::string platform_table(const Extraction& x, const Category& cat) {
    std::string out = fmt::format("{:<20} {:>8} {:>12} {:>18}\n", "community", "# URLs", "% platform", "% self of platform");
    auto pct = [](const std::optional<double>& v) { return v ? fmt::format("{:.1f}", 100 * *v) : std::string("n/a"); };
    auto row = [&](const std::string& name, const PlatformStats& s) {
        out += fmt::format("{:<20} {:>8} {:>12} {:>18}\n", name, s.n_urls, pct(s.fraction_platform),
                           pct(s.fraction_self_of_platform));
    };
    for (const auto& c : cat.communities) {
        auto it = x.platform_counts.find(c);
        row(c, platform_stats(it == x.platform_counts.end() ? PlatformCounts{} : it->second));
    }
    row("(all)", url_platform_stats(x));
    return out;
}

inline int cmd_report(const ReportOptions& o, Run& run, std::ostream& out, std::ostream& err) {
    std::vector<std::string> graphs, attrs;
    for (const auto& f : o.graphs) graphs.push_back(f.string());
    for (const auto& f : o.attributes) attrs.push_back(f.string());
    run.config() = {{"archive", o.archive.string()},
                    {"graphs", graphs},
                    {"attributes", attrs},
                    {"denylist", o.denylist ? o.denylist->string() : std::string("default")},
                    {"trials", o.trials}};
    if (o.graphs.empty()) throw parameter_error("report needs at least one --graph");
    if (o.trials == 0) throw parameter_error("--trials must be at least 1");
    if (o.denylist) run.input(*o.denylist);
    auto s = category_stats(o.archive, o.attributes, o.denylist, run);
    for (const auto& w : s.warnings) err << "warning: " << w << "\n";

    // Columns in the fixed order URL, Mention, user graph(s).
    std::vector<std::pair<GradientGraph, std::string>> loaded;
    for (const auto& f : o.graphs) {
        run.input(f);
        auto j = nlohmann::json::parse(read_file(f));
        std::string category;
        auto g = read_graph_file(f, &category);
        loaded.emplace_back(std::move(g), j.value("definition", std::string("expanding")));
    }
    auto rank = [](Modality m) { return m == Modality::urls ? 0 : m == Modality::mentions ? 1 : 2; };
    std::ranges::stable_sort(loaded, {}, [&](const auto& p) { return rank(p.first.modality); });

    std::vector<ReportColumn> columns;
    std::vector<NullRow> null_rows;
    for (const auto& [g, def] : loaded) {
        columns.push_back({modality_label(g.modality, def), g});
        null_rows.push_back(null_row(g, s.archive.category.name, {NullModel::edge_direction, NullModel::edge_placement},
                                     o.trials, run.globals().seed, run.globals().threads));
    }
    const auto matrix = attribute_report(columns, s.table, s.attribute_names);

    std::string text;
    text += "Category summary\n================\n" + category_summary(s.archive) + "\n";
    text += "Fraction randomly acyclic\n=========================\n" + null_table(null_rows) + "\n";
    text += "Platform links\n==============\n" + platform_table(s.extraction, s.archive.category) + "\n";
    text += "Attribute trends along gradient edges (* p<.05, ** p<.01)\n"
            "=========================================================\n" +
            matrix.text();
    text += fmt::format("\nmanifest: {}\n", run.manifest_name());

    ojson j;
    j["manifest"] = run.manifest_name();
    j["category"] = s.archive.category.name;
    ojson nulls = ojson::array();
    for (const auto& r : null_rows) {
        ojson row{{"modality", r.modality}, {"nodes", r.nodes}, {"edges", r.edges}, {"results", ojson::array()}};
        for (const auto& x : r.results) row["results"].push_back(to_json(x));
        nulls.push_back(row);
    }
    j["null_models"] = nulls;
    j["attribute_tests"] = matrix.json();
    j["attribute_notes"] = s.table.metadata;

    run.emit("report.txt", text);
    run.emit("report.json", j.dump(2) + "\n");
    out << text;
    return exit_ok;
}

// ---------------------------------------------------------------------------
// entry point

/// Parses `args` (without the program name) and runs one subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Community gradients: migration orderings between online communities"};
    app.set_version_flag("--version", GRADIENTS_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(CLI::Range(1u, 1024u));
    app.add_option("--output-dir", g.output_dir, "Directory for outputs and manifests")->capture_default_str();

    IngestOptions ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Load JSON-lines events into a corpus archive");
    c_ingest->add_option("paths", ingest.paths, "Event files (JSON lines)")->required();
    c_ingest->add_option("--category", ingest.category, "Category file (JSON)")->required();
    c_ingest->add_flag("--strict", ingest.strict, "Fail on the first malformed record");
    c_ingest->add_option("--preset", ingest.preset, "Ingestion preset: none|wikipedia")->capture_default_str();
    c_ingest->add_option("--wiki-since", ingest.wiki_since, "Wikipedia preset: ignore edits before this time")
        ->capture_default_str();
    c_ingest->add_option("--archive-name", ingest.archive_name, "Archive file name")->capture_default_str();

    GradientOptions grad;
    auto* c_grad = app.add_subcommand("gradient", "Orient community pairs and build the gradient graph");
    c_grad->add_option("--archive", grad.archive, "Corpus archive")->required();
    c_grad->add_option("--modality", grad.modality, "users|urls|mentions|all")->capture_default_str();
    c_grad->add_option("--definition", grad.definition, "Entry definition: expanding|thresholding")->capture_default_str();
    c_grad->add_option("--k", grad.k, "Events needed to enter a community")->capture_default_str();
    c_grad->add_option("--min-support", grad.min_support, "Minimum evidence for a directed pair")->capture_default_str();
    c_grad->add_option("--tau", grad.tau, "Asymmetry threshold")->capture_default_str();
    c_grad->add_flag("--auto-threshold", grad.auto_threshold, "Raise tau to the smallest acyclic grid value if needed");
    c_grad->add_option("--grid-step", grad.grid_step, "Threshold search grid step")->capture_default_str();
    c_grad->add_option("--bins", grad.bins, "Asymmetry histogram bins")->capture_default_str();
    c_grad->add_option("--denylist", grad.denylist, "Bot URL prefix file");
    c_grad->add_flag("--no-window", grad.no_window, "Use all events, not only the common activity window");
    c_grad->add_flag("--export-entries", grad.export_entries, "Write the user entries as CSV");

    NullOptions nullo;
    auto* c_null = app.add_subcommand("nullmodel", "Acyclicity of randomized graphs");
    c_null->add_option("--graph", nullo.graph, "Gradient report (gradient_<modality>.json)");
    c_null->add_option("--model", nullo.model, "edge-direction|edge-placement|complete-orientation|all")
        ->capture_default_str();
    c_null->add_option("--trials", nullo.trials, "Monte Carlo trials")->capture_default_str();
    c_null->add_option("--dag-count", nullo.dag_count, "Print exact acyclic fractions for N nodes");

    SimulateOptions sim;
    auto* c_sim = app.add_subcommand("simulate", "Acyclicity curves of synthetic migration");
    c_sim->add_option("--model", sim.model, "canonical|mallows")->capture_default_str();
    c_sim->add_option("--nodes", sim.nodes, "Communities")->capture_default_str();
    c_sim->add_option("--users", sim.users, "Users")->capture_default_str();
    c_sim->add_option("--lambda", sim.lambda, "Path length rate")->capture_default_str();
    c_sim->add_option("--p", sim.p, "Conformist fraction (canonical)");
    c_sim->add_option("--phi", sim.phi, "Dispersion (mallows)");
    c_sim->add_option("--grid", sim.grid, "Comma-separated values of p or phi")->delimiter(',');
    c_sim->add_option("--trials", sim.trials, "Trials per grid value")->capture_default_str();
    c_sim->add_option("--min-support", sim.min_support, "Minimum users for a directed pair")->capture_default_str();
    c_sim->add_option("--tau", sim.tau, "Asymmetry threshold")->capture_default_str();
    c_sim->add_flag("--emit-log", sim.emit_log, "Also write trial 0 of the first grid value as an event log");

    StatsOptions stats;
    auto* c_stats = app.add_subcommand("stats", "Per-community attributes and platform link shares");
    c_stats->add_option("--archive", stats.archive, "Corpus archive")->required();
    c_stats->add_option("--attributes", stats.attributes, "External attribute CSV files");
    c_stats->add_option("--denylist", stats.denylist, "Bot URL prefix file");

    ReportOptions report;
    auto* c_report = app.add_subcommand("report", "Summary, null-model, platform and attribute tables");
    c_report->add_option("--archive", report.archive, "Corpus archive")->required();
    c_report->add_option("--graph", report.graphs, "Gradient reports (repeatable)");
    c_report->add_option("--attributes", report.attributes, "External attribute CSV files");
    c_report->add_option("--denylist", report.denylist, "Bot URL prefix file");
    c_report->add_option("--trials", report.trials, "Null-model trials per graph")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::CallForVersion&) {
        out << GRADIENTS_VERSION << "\n";
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }

    auto sub = app.get_subcommands().front();
    try {
        Run run(sub->get_name(), args, g);
        int code = exit_ok;
        if (sub == c_ingest) code = cmd_ingest(ingest, run, out, err);
        else if (sub == c_grad) code = cmd_gradient(grad, run, out, err);
        else if (sub == c_null) code = cmd_nullmodel(nullo, run, out, err);
        else if (sub == c_sim) code = cmd_simulate(sim, run, out, err);
        else if (sub == c_stats) code = cmd_stats(stats, run, out, err);
        else code = cmd_report(report, run, out, err);
        run.finish();
        return code;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_data;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_data;
    }
}

}  // namespace gradients::cli
