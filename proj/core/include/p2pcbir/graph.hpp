#pragma once

// Power-law random networks: degree sampling, configuration-model wiring,
// degree moments and random walks.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "p2pcbir/rng.hpp"

namespace p2pcbir {

using NodeId = std::uint32_t;

struct PowerLawParams {
    double tau = 2.0;
    std::uint32_t k_min = 2;
    std::uint32_t k_max = 724;
    std::uint32_t n_nodes = 524288;

    /// k_max = floor(sqrt(n)).
    static PowerLawParams for_size(std::uint32_t n_nodes, std::uint32_t k_min = 2);
    void validate() const;
};

/// Normalization constant A of p_k = A k^-tau over [k_min, k_max].
double power_law_norm(double tau, std::uint32_t k_min, std::uint32_t k_max);

/// Simple undirected graph in compressed adjacency form. Immutable once built.
class Network {
public:
    Network() = default;
    /// Builds from an edge list. Throws Error on self-loops, duplicate
    /// edges or out-of-range endpoints.
    Network(std::uint32_t n_nodes, std::span<const std::pair<NodeId, NodeId>> edges);

    std::uint32_t size() const { return static_cast<std::uint32_t>(offsets_.size() - 1); }
    std::uint64_t edge_count() const { return targets_.size() / 2; }
    std::uint32_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
    std::span<const NodeId> neighbors(NodeId v) const {
        return {targets_.data() + offsets_[v], degree(v)};
    }

    /// Each undirected edge once, as (u, v) with u < v, sorted.
    std::vector<std::pair<NodeId, NodeId>> edges() const;

private:
    std::vector<std::uint32_t> offsets_{0};
    std::vector<NodeId> targets_;
};

struct DegreeStats {
    double mean_k = 0;
    double mean_k2 = 0;
    std::uint32_t observed_k_max = 0;
    double norm_A = 0;
};

/// N i.i.d. degrees from p_k ~ k^-tau on [k_min, k_max] by inverse CDF, with
/// one node bumped if the sum is odd.
std::vector<std::uint32_t> sample_degree_sequence(const PowerLawParams& params, std::uint64_t seed);

struct BuildReport {
    std::uint64_t swaps = 0;
    std::uint64_t dropped_edges = 0;
};

/// Configuration model: uniform stub matching, then self-loops and
/// multi-edges repaired by degree-preserving edge swaps; edges that cannot
/// be repaired within the retry budget are dropped.
Network build_configuration_graph(std::span<const std::uint32_t> degrees, std::uint64_t seed,
                                  BuildReport* report = nullptr);

/// Convenience: sample + build.
Network generate_power_law_network(const PowerLawParams& params, std::uint64_t seed);

/// Empirical moments. norm_A is the analytic normalization for tau=2 over
/// [min observed degree, observed k_max].
DegreeStats degree_stats(const Network& net);

/// q_c = <k> / (<k^2> - <k>). Throws Error("subcritical graph") when
/// <k^2> <= <k>.
double percolation_threshold(const DegreeStats& stats);

/// Visited sequence including start, length+1 entries.
std::vector<NodeId> random_walk(const Network& net, NodeId start, std::uint32_t length, Rng& rng);
std::vector<NodeId> random_walk(const Network& net, NodeId start, std::uint32_t length,
                                std::uint64_t seed);

/// Edge list file: two little-endian uint32 per edge.
void save_edge_list(const Network& net, const std::string& path);
/// n_nodes = 0 infers the node count from the largest index.
Network load_edge_list(const std::string& path, std::uint32_t n_nodes = 0);

}  // namespace p2pcbir
