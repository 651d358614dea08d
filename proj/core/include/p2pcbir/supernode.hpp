#pragma once

// Two-level super-node overlay: leaves cache their items on one super-node,
// queries are broadcast over a degree-3 tree spanning the super-nodes.

#include <cstdint>
#include <vector>

#include "p2pcbir/graph.hpp"
#include "p2pcbir/workload.hpp"

namespace p2pcbir {

class SupernodeTopology {
public:
    SupernodeTopology() = default;

    std::uint32_t size() const { return static_cast<std::uint32_t>(home_.size()); }
    double fraction() const { return fraction_; }
    std::uint32_t supernode_count() const { return static_cast<std::uint32_t>(supernodes_.size()); }

    /// Node id of the i-th super-node (tree position i).
    NodeId supernode(std::uint32_t i) const { return supernodes_[i]; }
    bool is_supernode(NodeId v) const { return supernodes_[home_[v]] == v; }
    /// Tree position of the super-node serving v (itself for super-nodes).
    std::uint32_t home(NodeId v) const { return home_[v]; }
    std::uint32_t leaf_count(std::uint32_t sn) const { return leaf_counts_[sn]; }

    /// Tree neighbours of position i in the balanced binary broadcast tree.
    std::vector<std::uint32_t> tree_neighbors(std::uint32_t i) const;
    std::uint32_t tree_degree(std::uint32_t i) const;

    friend SupernodeTopology build_topology(std::uint32_t n, double s, std::uint64_t seed);

private:
    double fraction_ = 0;
    std::vector<NodeId> supernodes_;        // tree position -> node
    std::vector<std::uint32_t> home_;       // node -> tree position
    std::vector<std::uint32_t> leaf_counts_;
};

/// round(s*n) super-nodes chosen uniformly; leaves assigned round-robin.
/// Throws Error unless 0 < s <= 1 and round(s*n) >= 1.
SupernodeTopology build_topology(std::uint32_t n, double s, std::uint64_t seed);

struct RouteResult {
    std::uint64_t messages = 0;
    std::uint32_t supernodes_reached = 0;
};

/// Sends one query from origin to its super-node and floods it over every
/// tree edge. Adds per-node sent+received counts into counts (size n).
RouteResult route_query(const SupernodeTopology& topo, NodeId origin, std::vector<std::uint64_t>& counts);
std::vector<std::uint64_t> route_query(const SupernodeTopology& topo, NodeId origin);

struct SupernodeMetrics {
    std::vector<double> bytes_per_s;   // query traffic per node
    std::vector<double> stored_items;  // per node
    std::vector<double> flop_per_s;    // per node
    double hit_rate = 0;
    std::uint32_t n_queries = 0;

    double max_bytes_per_s() const;
    double mean_bytes_per_s() const;
    double max_stored_items() const;
    double max_flop_per_s() const;
};

/// Simulates n_queries uniform-origin queries against the cached content and
/// scales per-node counters to the full load of R*N queries/s.
SupernodeMetrics run_experiment(const SupernodeTopology& topo, const WorkloadParams& w, std::uint32_t n_queries,
                                std::uint64_t seed);

}  // namespace p2pcbir
