#pragma once

// Experiment configuration, validation and seeded execution with CSV and
// JSON summary output.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "p2pcbir/cbir.hpp"
#include "p2pcbir/workload.hpp"

namespace p2pcbir {

enum class ExperimentKind { supernode, percolation, prism, costmodel };

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(const std::string& name);

struct PercolationConfig {
    std::uint32_t n_nodes = 524288;
    std::uint32_t k_min = 2;
    std::uint32_t k_max = 0;  // 0: floor(sqrt(n_nodes))
    double q = 0.01;
    std::uint32_t ttl = 0;  // 0: ceil(log2 n_nodes) + 1
    std::uint32_t n_content = 1000;
    std::uint32_t n_queries = 1000;
};

struct SupernodeConfig {
    double s = 0;  // 0: 1/sqrt(N)
    std::uint32_t n_queries = 10000;
};

struct PrismConfig {
    std::uint32_t n_items = 100000;
    std::uint32_t n_clusters = 4;
    double spread = 2.0;
    std::uint32_t n_refs = 32;
    std::uint32_t n_peers = 0;  // 0: workload N
    std::uint32_t n_queries = 1000;
    std::uint32_t k = 20;
    Metric metric = Metric::euclidean;
    std::string curve_output;  // optional recall-curve CSV
};

struct CostmodelConfig {
    double s = 0;      // 0: 1/sqrt(N)
    double k_max = 0;  // 0: sqrt(N), printed closed forms
    double norm_a = 0.625;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::costmodel;
    WorkloadParams workload;
    PercolationConfig percolation;
    SupernodeConfig supernode;
    PrismConfig prism;
    CostmodelConfig costmodel;
    std::vector<std::uint64_t> seeds{1};
    std::string output;  // prefix: <output>.csv and <output>.summary.json
    unsigned jobs = 1;
    bool record_wall_time = false;
};

/// Throws Error on malformed JSON or mistyped fields. Unknown keys are
/// rejected so typos do not silently fall back to defaults.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

/// Every violated constraint; empty means runnable.
std::vector<std::string> validate(const ExperimentConfig& config);

struct RunOutput {
    std::string csv;
    std::string summary_json;
    std::string curve_csv;  // prism only
};

/// Executes the experiment for every seed (rows ordered by seed position
/// in the config) and returns CSV and summary text. Throws Error when
/// validate() is non-empty.
RunOutput execute(const ExperimentConfig& config);

/// execute() plus writing files when config.output is set. Returns a
/// process exit status; diagnostics go to err.
int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

/// RFC 4180 field quoting.
std::string csv_field(const std::string& value);

}  // namespace p2pcbir
