#include "p2pcbir/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "p2pcbir/costmodel.hpp"
#include "p2pcbir/error.hpp"
#include "p2pcbir/graph.hpp"
#include "p2pcbir/percolation.hpp"
#include "p2pcbir/prism.hpp"
#include "p2pcbir/rng.hpp"
#include "p2pcbir/supernode.hpp"
#include "p2pcbir/version.hpp"

namespace p2pcbir {

using nlohmann::json;

std::string to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::supernode:
        return "supernode";
    case ExperimentKind::percolation:
        return "percolation";
    case ExperimentKind::prism:
        return "prism";
    case ExperimentKind::costmodel:
        return "costmodel";
    }
    return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(const std::string& name) {
    for (auto k : {ExperimentKind::supernode, ExperimentKind::percolation, ExperimentKind::prism,
                   ExperimentKind::costmodel})
        if (to_string(k) == name) return k;
    return std::nullopt;
}

namespace {

class Reader {
public:
    Reader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
        if (!obj_.is_object()) throw Error(where_ + ": expected an object");
    }

    template <typename T>
    void get(const char* key, T& field) {
        seen_.insert(key);
        if (!obj_.contains(key)) return;
        const auto& v = obj_[key];
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) fail(key, "a boolean");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) fail(key, "a string");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 && !v.is_number_unsigned()))
                fail(key, "a non-negative integer");
        } else {
            if (!v.is_number()) fail(key, "a number");
        }
        field = v.get<T>();
    }

    void mark(const char* key) { seen_.insert(key); }

    void reject_unknown() const {
        for (const auto& [key, value] : obj_.items())
            if (!seen_.contains(key)) throw Error(where_ + ": unknown key \"" + key + "\"");
    }

private:
    [[noreturn]] void fail(const char* key, const char* what) const {
        throw Error(where_ + "." + key + " must be " + what);
    }

    const json& obj_;
    std::string where_;
    std::set<std::string> seen_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    ExperimentConfig c;
    Reader top(root, "config");

    std::string arch;
    top.get("architecture", arch);
    if (arch.empty()) throw Error("config: architecture is required");
    const auto kind = parse_experiment_kind(arch);
    if (!kind) throw Error("config: unknown architecture \"" + arch + "\"");
    c.kind = *kind;

    top.mark("workload");
    if (root.contains("workload")) c.workload = workload_from_json(root["workload"].dump());

    top.mark("seeds");
    if (root.contains("seeds")) {
        const auto& s = root["seeds"];
        if (!s.is_array()) throw Error("config.seeds must be an array of integers");
        c.seeds.clear();
        for (const auto& v : s) {
            if (!v.is_number_unsigned()) throw Error("config.seeds must be an array of non-negative integers");
            c.seeds.push_back(v.get<std::uint64_t>());
        }
    }
    top.get("output", c.output);
    top.get("jobs", c.jobs);
    top.get("record_wall_time", c.record_wall_time);

    top.mark("percolation");
    if (root.contains("percolation")) {
        Reader r(root["percolation"], "config.percolation");
        auto& p = c.percolation;
        r.get("n_nodes", p.n_nodes);
        r.get("k_min", p.k_min);
        r.get("k_max", p.k_max);
        r.get("q", p.q);
        r.get("ttl", p.ttl);
        r.get("n_content", p.n_content);
        r.get("n_queries", p.n_queries);
        r.reject_unknown();
    }
    top.mark("supernode");
    if (root.contains("supernode")) {
        Reader r(root["supernode"], "config.supernode");
        r.get("s", c.supernode.s);
        r.get("n_queries", c.supernode.n_queries);
        r.reject_unknown();
    }
    top.mark("prism");
    if (root.contains("prism")) {
        Reader r(root["prism"], "config.prism");
        auto& p = c.prism;
        r.get("n_items", p.n_items);
        r.get("n_clusters", p.n_clusters);
        r.get("spread", p.spread);
        r.get("n_refs", p.n_refs);
        r.get("n_peers", p.n_peers);
        r.get("n_queries", p.n_queries);
        r.get("k", p.k);
        std::string metric = to_string(p.metric);
        r.get("metric", metric);
        p.metric = parse_metric(metric);
        r.get("curve_output", p.curve_output);
        r.reject_unknown();
    }
    top.mark("costmodel");
    if (root.contains("costmodel")) {
        Reader r(root["costmodel"], "config.costmodel");
        r.get("s", c.costmodel.s);
        r.get("k_max", c.costmodel.k_max);
        r.get("A", c.costmodel.norm_a);
        r.reject_unknown();
    }
    top.reject_unknown();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace {

json config_json(const ExperimentConfig& c) {
    json j;
    j["architecture"] = to_string(c.kind);
    j["workload"] = json::parse(workload_to_json(c.workload));
    j["seeds"] = c.seeds;
    j["output"] = c.output;
    j["jobs"] = c.jobs;
    j["record_wall_time"] = c.record_wall_time;
    switch (c.kind) {
    case ExperimentKind::percolation: {
        const auto& p = c.percolation;
        j["percolation"] = {{"n_nodes", p.n_nodes}, {"k_min", p.k_min},         {"k_max", p.k_max},
                            {"q", p.q},             {"ttl", p.ttl},             {"n_content", p.n_content},
                            {"n_queries", p.n_queries}};
        break;
    }
    case ExperimentKind::supernode:
        j["supernode"] = {{"s", c.supernode.s}, {"n_queries", c.supernode.n_queries}};
        break;
    case ExperimentKind::prism: {
        const auto& p = c.prism;
        j["prism"] = {{"n_items", p.n_items}, {"n_clusters", p.n_clusters}, {"spread", p.spread},
                      {"n_refs", p.n_refs},   {"n_peers", p.n_peers},       {"n_queries", p.n_queries},
                      {"k", p.k},             {"metric", to_string(p.metric)}, {"curve_output", p.curve_output}};
        break;
    }
    case ExperimentKind::costmodel:
        j["costmodel"] = {{"s", c.costmodel.s}, {"k_max", c.costmodel.k_max}, {"A", c.costmodel.norm_a}};
        break;
    }
    return j;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config) { return config_json(config).dump(2); }

std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> d = c.workload.violations();
    if (c.seeds.empty()) d.emplace_back("at least one seed is required");
    if (c.jobs == 0) d.emplace_back("jobs must be at least 1");

    switch (c.kind) {
    case ExperimentKind::percolation: {
        const auto& p = c.percolation;
        if (p.n_nodes < 3) d.emplace_back("percolation n_nodes must be at least 3");
        if (p.k_min < 1) d.emplace_back("k_min must be at least 1");
        const std::uint32_t k_max =
            p.k_max != 0 ? p.k_max : static_cast<std::uint32_t>(std::floor(std::sqrt(static_cast<double>(p.n_nodes))));
        if (p.k_min > k_max) d.emplace_back("k_min exceeds k_max");
        if (p.n_nodes > 0 && k_max > p.n_nodes - 1) d.emplace_back("k_max must be below n_nodes");
        if (!(p.q >= 0.0 && p.q <= 1.0)) d.emplace_back("probability out of range");
        if (p.n_content < 1) d.emplace_back("n_content must be at least 1");
        if (p.n_queries < 1) d.emplace_back("n_queries must be at least 1");
        break;
    }
    case ExperimentKind::supernode: {
        const auto& s = c.supernode;
        if (!(s.s >= 0.0)) d.emplace_back("supernode fraction must be positive");
        else if (s.s > 1.0) d.emplace_back("supernode fraction must not exceed 1");
        if (s.n_queries < 1) d.emplace_back("n_queries must be at least 1");
        const double frac = s.s > 0 ? s.s : 1.0 / std::sqrt(c.workload.n_peers);
        if (c.workload.n_peers > 4294967295.0 || c.workload.n_peers != std::floor(c.workload.n_peers))
            d.emplace_back("supernode simulation needs an integral n_peers below 2^32");
        else if (frac > 0 && std::llround(frac * c.workload.n_peers) < 1)
            d.emplace_back("supernode fraction selects no super-nodes");
        break;
    }
    case ExperimentKind::prism: {
        const auto& p = c.prism;
        if (p.n_refs < 5) d.emplace_back("prism needs at least 5 reference vectors");
        if (p.n_items < p.n_refs) d.emplace_back("prism n_items must be at least n_refs");
        if (p.n_clusters < 1) d.emplace_back("n_clusters must be at least 1");
        if (!(p.spread >= 0.0)) d.emplace_back("spread must be non-negative");
        if (p.n_queries < 1) d.emplace_back("n_queries must be at least 1");
        if (p.k < 1) d.emplace_back("k must be at least 1");
        if (p.n_peers == 0 && c.workload.n_peers > 4294967295.0)
            d.emplace_back("prism ring size must fit in 32 bits");
        break;
    }
    case ExperimentKind::costmodel: {
        const auto& m = c.costmodel;
        if (m.s < 0.0 || m.s > 1.0) d.emplace_back("supernode fraction must be in (0, 1]");
        if (m.k_max != 0 && m.k_max < 2) d.emplace_back("k_max must be at least 2");
        if (!(m.norm_a > 0)) d.emplace_back("normalization A must be positive");
        break;
    }
    }
    return d;
}

namespace {

// One CSV row; nullopt renders as an empty field.
using Cell = std::optional<double>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

std::string format_cell(const Cell& c) { return c ? fmt::format("{:.12g}", *c) : std::string(); }

std::string render_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + csv_field(t.columns[i]);
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(format_cell(row[i]));
        out += '\n';
    }
    return out;
}

json summarize(const Table& t) {
    json metrics = json::object();
    for (std::size_t col = 0; col < t.columns.size(); ++col) {
        if (t.columns[col] == "seed") continue;
        std::vector<double> values;
        for (const auto& row : t.rows)
            if (row[col]) values.push_back(*row[col]);
        if (values.empty()) continue;
        const double n = static_cast<double>(values.size());
        double mean = 0;
        for (double v : values) mean += v;
        mean /= n;
        double ss = 0;
        for (double v : values) ss += (v - mean) * (v - mean);
        metrics[t.columns[col]] = {
            {"mean", mean},
            {"std", values.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0},
            {"min", *std::min_element(values.begin(), values.end())},
            {"max", *std::max_element(values.begin(), values.end())},
            {"count", values.size()},
        };
    }
    return metrics;
}

struct SeedResult {
    std::vector<Cell> row;
    std::string curve_rows;
};

double uint_or_default(std::uint32_t v, double fallback) { return v != 0 ? v : fallback; }

SeedResult run_percolation_seed(const ExperimentConfig& c, std::uint64_t seed) {
    const auto& p = c.percolation;
    PowerLawParams params = PowerLawParams::for_size(p.n_nodes, p.k_min);
    if (p.k_max != 0) params.k_max = p.k_max;
    PercolationParams pp;
    pp.q = p.q;
    pp.walk_len = p.ttl != 0 ? p.ttl : PercolationParams::default_walk_len(p.n_nodes);
    pp.n_content = p.n_content;
    pp.n_queries = p.n_queries;

    Rng master(seed);
    const auto graph_seed = master();
    const auto sim_seed = master();
    const auto net = generate_power_law_network(params, graph_seed);
    const auto m = run_experiment(net, pp, sim_seed);
    return {{static_cast<double>(seed), static_cast<double>(p.n_nodes), p.q, static_cast<double>(pp.walk_len),
             m.hit_rate, m.copies_per_query, m.max_cost_per_object},
            {}};
}

SeedResult run_supernode_seed(const ExperimentConfig& c, std::uint64_t seed) {
    const auto n = static_cast<std::uint32_t>(c.workload.n_peers);
    const double s = c.supernode.s > 0 ? c.supernode.s : 1.0 / std::sqrt(c.workload.n_peers);
    Rng master(seed);
    const auto topo_seed = master();
    const auto sim_seed = master();
    const auto topo = build_topology(n, s, topo_seed);
    const auto m = run_experiment(topo, c.workload, c.supernode.n_queries, sim_seed);
    return {{static_cast<double>(seed), static_cast<double>(n), s, m.hit_rate, m.mean_bytes_per_s(),
             m.max_bytes_per_s(), m.max_stored_items() * c.workload.message_bytes, m.max_flop_per_s()},
            {}};
}

SeedResult run_prism_seed(const ExperimentConfig& c, std::uint64_t seed) {
    const auto& p = c.prism;
    const auto n_peers = static_cast<std::size_t>(uint_or_default(p.n_peers, c.workload.n_peers));
    Rng master(seed);
    const auto data_seed = master();
    const auto ref_seed = master();
    const auto ring_seed = master();

    // Indexed items and held-out queries come from the same clusters.
    const auto all = synth_collection(std::size_t{p.n_items} + p.n_queries, p.n_clusters, p.spread, data_seed);
    std::vector<Item> indexed(all.begin(), all.begin() + p.n_items);
    std::vector<Histogram> queries;
    for (auto it = all.begin() + p.n_items; it != all.end(); ++it) queries.push_back(it->vector);
    const Collection coll(std::move(indexed));

    PrismIndex index(Ring::random(n_peers, ring_seed), choose_references(coll, p.n_refs, ref_seed),
                     PairScheme::standard(), p.metric);
    index.insert(coll);

    const auto curve = recall_curve(index, coll, queries, p.k);
    const auto traffic = traffic_skew(index, queries, index.scheme().size());
    const auto load = storage_skew(index);

    SeedResult r;
    const auto& full = curve.back();
    r.row = {static_cast<double>(seed),
             static_cast<double>(n_peers),
             static_cast<double>(p.n_items),
             static_cast<double>(p.n_refs),
             full.recall,
             full.visited_fraction,
             traffic.top_share(5),
             traffic.top_share(15),
             traffic.top_share(60),
             load.hottest_share,
             load.hottest_share / load.mean_share};
    for (const auto& pt : curve)
        r.curve_rows += fmt::format("{},{},{:.12g},{:.12g},{:.12g}\n", seed, pt.n_pairs, pt.visited_fraction,
                                    pt.recall, pt.busiest_peer_share);
    return r;
}

}  // namespace

RunOutput execute(const ExperimentConfig& c) {
    if (const auto problems = validate(c); !problems.empty()) throw Error("invalid config: " + problems.front());

    json summary;
    summary["tool"] = "p2pcbir";
    summary["version"] = kVersion;
    summary["rng"] = kRngName;
    summary["config"] = config_json(c);

    RunOutput out;
    if (c.kind == ExperimentKind::costmodel) {
        const auto& m = c.costmodel;
        const double s = m.s > 0 ? m.s : 1.0 / std::sqrt(c.workload.n_peers);
        const auto perc = m.k_max > 0 ? percolation_costs(c.workload, m.k_max, m.norm_a)
                                      : percolation_costs_sqrt_n(c.workload, m.norm_a);
        const std::vector<CostReport> reports{supernode_costs(c.workload, s), perc, prism_costs(c.workload)};
        out.csv = cost_tables_csv(reports);
        json tables = json::object();
        for (const auto& r : reports)
            tables[to_string(r.architecture)] = {{"B_ave", r.b_ave}, {"B_max", r.b_max}, {"D_ave", r.d_ave},
                                                 {"D_max", r.d_max}, {"P_ave", r.p_ave}, {"P_max", r.p_max}};
        tables["supernode"]["B_ave_approx"] = reports[0].b_ave_approx;
        summary["tables"] = tables;
        out.summary_json = summary.dump(2) + "\n";
        return out;
    }

    Table table;
    SeedResult (*runner)(const ExperimentConfig&, std::uint64_t) = nullptr;
    switch (c.kind) {
    case ExperimentKind::percolation:
        table.columns = {"seed", "N", "q", "ttl", "hit_rate", "copies_per_query", "max_cost_per_object"};
        runner = run_percolation_seed;
        break;
    case ExperimentKind::supernode:
        table.columns = {"seed",          "N", "s", "hit_rate", "mean_bytes_per_s", "max_bytes_per_s",
                         "max_stored_bytes", "max_flop_per_s"};
        runner = run_supernode_seed;
        break;
    case ExperimentKind::prism:
        table.columns = {"seed",        "N",           "n_items",      "n_refs",        "recall",          "visited_fraction",
                         "top5_share",  "top15_share", "top60_share",  "hottest_peer_share", "hottest_over_mean"};
        runner = run_prism_seed;
        break;
    case ExperimentKind::costmodel:
        break;
    }
    table.columns.emplace_back("wall_time_s");

    std::vector<SeedResult> results(c.seeds.size());
    auto work = [&](std::size_t i) {
        const auto t0 = std::chrono::steady_clock::now();
        results[i] = runner(c, c.seeds[i]);
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        results[i].row.push_back(c.record_wall_time ? Cell(dt.count()) : std::nullopt);
    };
    const unsigned jobs = std::min<unsigned>(c.jobs, static_cast<unsigned>(c.seeds.size()));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < c.seeds.size(); ++i) work(i);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(jobs);
        for (unsigned w = 0; w < jobs; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < c.seeds.size(); i += jobs) work(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    for (auto& r : results) {
        table.rows.push_back(std::move(r.row));
        out.curve_csv += r.curve_rows;
    }
    if (c.kind == ExperimentKind::prism)
        out.curve_csv = "seed,n_pairs,visited_fraction,recall,busiest_peer_share\n" + out.curve_csv;
    out.csv = render_csv(table);
    summary["metrics"] = summarize(table);
    out.summary_json = summary.dump(2) + "\n";
    return out;
}

namespace {

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << text;
    if (!f) throw Error("write failed: " + path);
}

}  // namespace

int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
    const auto problems = validate(config);
    if (!problems.empty()) {
        for (const auto& p : problems) err << "error: " << p << '\n';
        return 2;
    }
    try {
        const auto result = execute(config);
        if (config.output.empty()) {
            out << result.csv;
        } else {
            write_file(config.output + ".csv", result.csv);
            write_file(config.output + ".summary.json", result.summary_json);
        }
        if (config.kind == ExperimentKind::prism && !config.prism.curve_output.empty())
            write_file(config.prism.curve_output, result.curve_csv);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
    std::string quoted = "\"";
    for (char ch : value) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    quoted += '"';
    return quoted;
}

}  // namespace p2pcbir
