#pragma once

// Percolation search over a power-law network: content indices are
// replicated along a random walk, queries are implanted along a random walk
// and then spread by bond percolation.

#include <cstdint>
#include <vector>

#include "p2pcbir/graph.hpp"
#include "p2pcbir/workload.hpp"

namespace p2pcbir {

struct PercolationParams {
    double q = 0.01;             // per-edge forwarding probability
    std::uint32_t walk_len = 20; // implantation walk length ("ttl")
    std::uint32_t n_content = 1000;
    std::uint32_t n_queries = 1000;

    /// walk_len = ceil(log2 n) + 1.
    static std::uint32_t default_walk_len(std::uint32_t n_nodes);
    std::vector<std::string> violations() const;
};

struct PercMetrics {
    double hit_rate = 0;
    double copies_per_query = 0;
    double max_cost_per_object = 0;
    std::vector<std::uint32_t> replica_counts;  // per node
    std::vector<std::uint64_t> message_counts;  // per node, received
    std::uint32_t n_content = 0;

    bool operator==(const PercMetrics&) const = default;
};

/// Distinct nodes of a walk of walk_len steps from start, in first-visit order.
std::vector<NodeId> implant_content(const Network& net, NodeId start, std::uint32_t walk_len,
                                    std::uint64_t seed);

struct QueryTrace {
    std::vector<NodeId> visited;       // first-activation order
    std::uint64_t transmissions = 0;   // percolation forwards, duplicates included
    std::uint32_t walk_hops = 0;
};

/// Reusable scratch space for percolate_query on one network.
class PercolationWorkspace {
public:
    explicit PercolationWorkspace(const Network& net);

    /// Implants along a walk and cascades. If received is non-empty it is
    /// incremented per transmission target.
    QueryTrace run(NodeId start, std::uint32_t walk_len, double q, Rng& rng,
                   std::vector<std::uint64_t>* received = nullptr);

    bool active(NodeId v) const { return mark_[v] == epoch_; }

private:
    const Network* net_;
    std::vector<std::uint32_t> mark_;
    std::uint32_t epoch_ = 0;
};

QueryTrace percolate_query(const Network& net, NodeId start, std::uint32_t walk_len, double q,
                           std::uint64_t seed);

PercMetrics run_experiment(const Network& net, const PercolationParams& params, std::uint64_t seed);

struct PercolationScaled {
    double b_ave = 0;  // bytes/s
    double d_max = 0;  // bytes
    double p_max = 0;  // FlOp/s
};

/// Scales a desk-size measurement to the workload: B_ave = BW/N * Q,
/// D_max = C * 664 * N * MaxC/O, P_max = C * N * (Q/z) * f * MaxC/O.
PercolationScaled scale_metrics(double copies_per_query, double max_cost_per_object,
                                const WorkloadParams& w);
PercolationScaled scale_metrics(const PercMetrics& m, const WorkloadParams& w);

/// Bytes of one float[166] histogram.
inline constexpr double kHistogramBytes = 166 * 4;

}  // namespace p2pcbir
