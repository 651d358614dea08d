// p2pcbir command-line front-end.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "p2pcbir/cbir.hpp"
#include "p2pcbir/costmodel.hpp"
#include "p2pcbir/error.hpp"
#include "p2pcbir/graph.hpp"
#include "p2pcbir/harness.hpp"
#include "p2pcbir/prism.hpp"
#include "p2pcbir/rng.hpp"
#include "p2pcbir/version.hpp"

namespace {

using namespace p2pcbir;
using nlohmann::json;

// Registers --some-key and --some_key for config key some_key.
template <typename T>
CLI::Option* key_flag(CLI::App* app, const std::string& key, std::optional<T>& target, const std::string& help) {
    std::string dashed = key;
    for (auto& ch : dashed)
        if (ch == '_') ch = '-';
    std::string names = "--" + dashed;
    if (dashed != key) names += ",--" + key;
    return app->add_option(names, target, help);
}

template <typename T, typename U>
void override_with(const std::optional<T>& flag, U& field) {
    if (flag) field = static_cast<U>(*flag);
}

struct WorkloadFlags {
    std::optional<double> n_peers, per_day, items, flop, bytes;

    void add(CLI::App* app) {
        key_flag(app, "n_peers", n_peers, "Number of peers N")->group("Workload");
        key_flag(app, "queries_per_peer_per_day", per_day, "Queries issued per peer per day")->group("Workload");
        key_flag(app, "items_per_peer", items, "Shared items per peer C")->group("Workload");
        key_flag(app, "flop_per_compare", flop, "FlOps per vector comparison f")->group("Workload");
        key_flag(app, "message_bytes", bytes, "Bytes per message or stored descriptor z")->group("Workload");
    }

    void apply_to(WorkloadParams& w) const {
        override_with(n_peers, w.n_peers);
        if (per_day) w.query_rate = *per_day / 86400.0;
        override_with(items, w.items_per_peer);
        override_with(flop, w.flop_per_compare);
        override_with(bytes, w.message_bytes);
    }
};

struct RunFlags {
    std::string config_path;
    std::optional<std::vector<std::uint64_t>> seeds;
    std::optional<std::string> output;
    std::optional<unsigned> jobs;
    bool wall_time = false;
    WorkloadFlags workload;

    void add(CLI::App* app) {
        app->add_option("-c,--config", config_path, "JSON experiment config; flags override its values")
            ->check(CLI::ExistingFile);
        app->add_option("--seeds", seeds, "Seeds, one output row each")->delimiter(',')->group("Run");
        app->add_option("-o,--output", output, "Output prefix for <prefix>.csv and <prefix>.summary.json "
                                               "(default: CSV to stdout)")
            ->group("Run");
        app->add_option("-j,--jobs", jobs, "Worker threads across seeds")->group("Run");
        app->add_flag("--record-wall-time,--record_wall_time", wall_time, "Fill the wall_time_s column")
            ->group("Run");
        workload.add(app);
    }

    ExperimentConfig load(ExperimentKind kind) const {
        ExperimentConfig c;
        if (!config_path.empty()) {
            c = load_config(config_path);
            if (c.kind != kind)
                throw Error(fmt::format("config architecture is {} but this command runs {}", to_string(c.kind),
                                        to_string(kind)));
        }
        c.kind = kind;
        if (seeds) c.seeds = *seeds;
        if (output) c.output = *output;
        if (jobs) c.jobs = *jobs;
        if (wall_time) c.record_wall_time = true;
        workload.apply_to(c.workload);
        return c;
    }
};

int report(const ExperimentConfig& c) { return run(c, std::cout, std::cerr); }

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// A .ppm image or a JSON array of 166 bins.
Histogram load_query(const std::string& path) {
    if (ends_with(path, ".ppm")) return extract_histogram(read_ppm(path));
    return histogram_from_json(slurp(path));
}

// JSON lines as written by `extract`: {"id": ..., "histogram": [...]}.
Collection load_collection(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::vector<Item> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            items.push_back({j.at("id").get<ItemId>(), histogram_from_json(j.at("histogram").dump())});
        } catch (const json::exception& e) {
            throw Error(fmt::format("{}:{}: {}", path, line_no, e.what()));
        }
    }
    return Collection(std::move(items));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Peer-to-peer content-based image retrieval: cost model, simulators and search tools"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    // cost
    auto* cost = app.add_subcommand("cost", "Print per-peer bandwidth, storage and CPU for the three architectures");
    std::string cost_config;
    std::optional<double> cost_s, cost_kmax, cost_a;
    std::string cost_format = "text";
    std::optional<std::string> cost_output;
    WorkloadFlags cost_workload;
    cost->add_option("-c,--config", cost_config, "JSON experiment config (architecture costmodel)")
        ->check(CLI::ExistingFile);
    key_flag(cost, "s", cost_s, "Super-node fraction (default 1/sqrt(N))")->check(CLI::Range(0.0, 1.0));
    key_flag(cost, "k_max", cost_kmax, "Percolation degree cutoff (default sqrt(N), closed forms)");
    cost->add_option("--A,--norm-a", cost_a, "Power-law normalization A");
    cost->add_option("--format", cost_format, "Output format")->check(CLI::IsMember({"text", "csv", "both"}));
    cost->add_option("-o,--output", cost_output, "Output prefix for <prefix>.csv and <prefix>.summary.json");
    cost_workload.add(cost);

    // gen-graph
    auto* gen = app.add_subcommand("gen-graph", "Generate a power-law configuration-model network");
    std::string gen_config, gen_out;
    std::optional<std::uint32_t> gen_n, gen_kmin, gen_kmax;
    std::uint64_t gen_seed = 1;
    gen->add_option("-c,--config", gen_config, "JSON experiment config; its percolation section is used")
        ->check(CLI::ExistingFile);
    key_flag(gen, "n_nodes", gen_n, "Number of nodes");
    key_flag(gen, "k_min", gen_kmin, "Minimum degree");
    key_flag(gen, "k_max", gen_kmax, "Maximum degree (default floor(sqrt(n_nodes)))");
    gen->add_option("--seed", gen_seed, "Seed; matches the graph sim-percolation builds for the same seed");
    gen->add_option("-o,--output", gen_out, "Edge-list file (two little-endian uint32 per edge)")->required();

    // sim-percolation
    auto* perc = app.add_subcommand("sim-percolation", "Random-walk replication with bond-percolation queries");
    RunFlags perc_run;
    std::optional<std::uint32_t> p_n, p_kmin, p_kmax, p_ttl, p_content, p_queries;
    std::optional<double> p_q;
    perc_run.add(perc);
    key_flag(perc, "n_nodes", p_n, "Simulated network size")->group("Percolation");
    key_flag(perc, "k_min", p_kmin, "Minimum degree")->group("Percolation");
    key_flag(perc, "k_max", p_kmax, "Maximum degree (0: floor(sqrt(n_nodes)))")->group("Percolation");
    key_flag(perc, "q", p_q, "Edge forwarding probability")->group("Percolation");
    key_flag(perc, "ttl", p_ttl, "Walk length for replication and query implant (0: ceil(log2 N)+1)")
        ->group("Percolation");
    key_flag(perc, "n_content", p_content, "Content objects replicated")->group("Percolation");
    key_flag(perc, "n_queries", p_queries, "Queries per seed")->group("Percolation");

    // sim-supernode
    auto* sup = app.add_subcommand("sim-supernode", "Message-level super-node broadcast simulation");
    RunFlags sup_run;
    std::optional<double> s_s;
    std::optional<std::uint32_t> s_queries;
    sup_run.add(sup);
    key_flag(sup, "s", s_s, "Super-node fraction (0: 1/sqrt(N))")->group("Super-node");
    key_flag(sup, "n_queries", s_queries, "Queries per seed")->group("Super-node");

    // sim-prism
    auto* pr = app.add_subcommand("sim-prism", "Reference-pair index on synthetic histograms: recall and skew");
    RunFlags pr_run;
    std::optional<std::uint32_t> x_items, x_clusters, x_refs, x_peers, x_queries, x_k;
    std::optional<double> x_spread;
    std::optional<std::string> x_metric, x_curve;
    pr_run.add(pr);
    key_flag(pr, "n_items", x_items, "Indexed items")->group("Prism");
    key_flag(pr, "n_clusters", x_clusters, "Synthetic clusters")->group("Prism");
    key_flag(pr, "spread", x_spread, "Per-bin noise amplitude in units of the mean bin mass")->group("Prism");
    key_flag(pr, "n_refs", x_refs, "Reference vectors")->group("Prism");
    pr->add_option("--ring-peers", x_peers, "Ring size (config prism.n_peers; 0: workload N)")->group("Prism");
    key_flag(pr, "n_queries", x_queries, "Held-out queries per seed")->group("Prism");
    key_flag(pr, "k", x_k, "Neighbours per query")->group("Prism");
    key_flag(pr, "metric", x_metric, "euclidean or histogram-intersection")->group("Prism");
    key_flag(pr, "curve_output", x_curve, "Write the recall curve CSV here")->group("Prism");

    // extract
    auto* ext = app.add_subcommand("extract", "Extract 166-bin color histograms from PPM images");
    std::vector<std::string> ext_inputs;
    std::string ext_out;
    ext->add_option("inputs", ext_inputs, "PPM (P6) images")->required()->check(CLI::ExistingFile);
    ext->add_option("-o,--output", ext_out, "JSON-lines file (default stdout); ids follow input order");

    // knn
    auto* knn = app.add_subcommand("knn", "Nearest neighbours of a query image or histogram");
    std::string knn_query, knn_coll;
    std::size_t knn_k = 20;
    std::string knn_metric = "euclidean";
    std::size_t knn_pairs = 0, knn_refs = 32, knn_peers = 1024;
    std::uint64_t knn_seed = 1;
    knn->add_option("-q,--query", knn_query, "Query .ppm image or JSON histogram")
        ->required()
        ->check(CLI::ExistingFile);
    knn->add_option("--collection", knn_coll, "JSON-lines collection written by extract")
        ->required()
        ->check(CLI::ExistingFile);
    knn->add_option("-k,--k", knn_k, "Neighbours to return")->check(CLI::PositiveNumber);
    knn->add_option("--metric", knn_metric, "euclidean or histogram-intersection");
    knn->add_option("--pairs", knn_pairs, "Search through a reference-pair index using this many pairs "
                                          "(0: exact full scan)")
        ->check(CLI::Range(0, 11));
    knn->add_option("--n-refs,--n_refs", knn_refs, "Reference vectors for the index");
    knn->add_option("--ring-peers", knn_peers, "Ring size for the index");
    knn->add_option("--seed", knn_seed, "Seed for reference choice and ring ids");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cost) {
            ExperimentConfig c;
            if (!cost_config.empty()) {
                c = load_config(cost_config);
                if (c.kind != ExperimentKind::costmodel) throw Error("config architecture must be costmodel");
            }
            c.kind = ExperimentKind::costmodel;
            cost_workload.apply_to(c.workload);
            override_with(cost_s, c.costmodel.s);
            override_with(cost_kmax, c.costmodel.k_max);
            override_with(cost_a, c.costmodel.norm_a);
            if (cost_output) {
                c.output = *cost_output;
                return report(c);
            }
            if (const auto problems = validate(c); !problems.empty()) {
                for (const auto& p : problems) std::cerr << "error: " << p << '\n';
                return 2;
            }
            const double s = c.costmodel.s > 0 ? c.costmodel.s : 1.0 / std::sqrt(c.workload.n_peers);
            const auto perc_report = c.costmodel.k_max > 0
                                         ? percolation_costs(c.workload, c.costmodel.k_max, c.costmodel.norm_a)
                                         : percolation_costs_sqrt_n(c.workload, c.costmodel.norm_a);
            const std::vector<CostReport> reports{supernode_costs(c.workload, s), perc_report,
                                                  prism_costs(c.workload)};
            if (cost_format != "text") std::cout << cost_tables_csv(reports);
            if (cost_format == "both") std::cout << '\n';
            if (cost_format != "csv") std::cout << cost_tables_text(reports);
            return 0;
        }

        if (*gen) {
            ExperimentConfig c;
            if (!gen_config.empty()) c = load_config(gen_config);
            auto& pc = c.percolation;
            override_with(gen_n, pc.n_nodes);
            override_with(gen_kmin, pc.k_min);
            override_with(gen_kmax, pc.k_max);
            PowerLawParams params = PowerLawParams::for_size(pc.n_nodes, pc.k_min);
            if (pc.k_max != 0) params.k_max = pc.k_max;
            params.validate();

            // Same seed derivation as the percolation experiment.
            Rng master(gen_seed);
            Rng graph_rng(master());
            const auto degree_seed = graph_rng();
            const auto wiring_seed = graph_rng();
            BuildReport build;
            const auto degrees = sample_degree_sequence(params, degree_seed);
            const auto net = build_configuration_graph(degrees, wiring_seed, &build);
            save_edge_list(net, gen_out);

            const auto stats = degree_stats(net);
            json j = {{"nodes", net.size()},
                      {"edges", net.edge_count()},
                      {"k_min", params.k_min},
                      {"k_max", params.k_max},
                      {"mean_k", stats.mean_k},
                      {"mean_k2", stats.mean_k2},
                      {"observed_k_max", stats.observed_k_max},
                      {"swaps", build.swaps},
                      {"dropped_edges", build.dropped_edges},
                      {"seed", gen_seed},
                      {"rng", kRngName}};
            if (stats.mean_k2 > stats.mean_k) j["q_c"] = percolation_threshold(stats);
            std::cout << j.dump(2) << '\n';
            return 0;
        }

        if (*perc) {
            auto c = perc_run.load(ExperimentKind::percolation);
            auto& p = c.percolation;
            override_with(p_n, p.n_nodes);
            override_with(p_kmin, p.k_min);
            override_with(p_kmax, p.k_max);
            override_with(p_q, p.q);
            override_with(p_ttl, p.ttl);
            override_with(p_content, p.n_content);
            override_with(p_queries, p.n_queries);
            return report(c);
        }

        if (*sup) {
            auto c = sup_run.load(ExperimentKind::supernode);
            override_with(s_s, c.supernode.s);
            override_with(s_queries, c.supernode.n_queries);
            return report(c);
        }

        if (*pr) {
            auto c = pr_run.load(ExperimentKind::prism);
            auto& p = c.prism;
            override_with(x_items, p.n_items);
            override_with(x_clusters, p.n_clusters);
            override_with(x_spread, p.spread);
            override_with(x_refs, p.n_refs);
            override_with(x_peers, p.n_peers);
            override_with(x_queries, p.n_queries);
            override_with(x_k, p.k);
            if (x_metric) p.metric = parse_metric(*x_metric);
            override_with(x_curve, p.curve_output);
            return report(c);
        }

        if (*ext) {
            std::ofstream file;
            if (!ext_out.empty()) {
                file.open(ext_out);
                if (!file) throw Error("cannot write " + ext_out);
            }
            std::ostream& out = ext_out.empty() ? std::cout : file;
            for (std::size_t i = 0; i < ext_inputs.size(); ++i) {
                const auto h = extract_histogram(read_ppm(ext_inputs[i]));
                json j = {{"id", i}, {"path", ext_inputs[i]}, {"histogram", json::parse(histogram_to_json(h))}};
                out << j.dump() << '\n';
            }
            return 0;
        }

        if (*knn) {
            const auto metric = parse_metric(knn_metric);
            const auto query = load_query(knn_query);
            const auto coll = load_collection(knn_coll);
            NeighborList result;
            json extra = json::object();
            if (knn_pairs == 0) {
                result = knn_full_scan(query, coll, knn_k, metric);
            } else {
                Rng master(knn_seed);
                const auto ref_seed = master();
                const auto ring_seed = master();
                PrismIndex index(Ring::random(knn_peers, ring_seed),
                                 choose_references(coll, std::min(knn_refs, coll.size()), ref_seed),
                                 PairScheme::standard(), metric);
                index.insert(coll);
                const auto r = index.query(query, knn_pairs, knn_k);
                result = r.neighbors;
                extra = {{"peers_contacted", r.cost.peers.size()},
                         {"messages", r.cost.messages},
                         {"candidates", r.candidates.size()}};
            }
            std::cout << "rank,id,distance\n";
            for (std::size_t i = 0; i < result.size(); ++i)
                std::cout << fmt::format("{},{},{:.12g}\n", i + 1, result[i].id, result[i].distance);
            if (!extra.empty()) std::cerr << extra.dump() << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
