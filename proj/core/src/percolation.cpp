#include "p2pcbir/percolation.hpp"

#include <algorithm>
#include <cmath>

#include "p2pcbir/error.hpp"

namespace p2pcbir {

std::uint32_t PercolationParams::default_walk_len(std::uint32_t n_nodes) {
    if (n_nodes <= 1) return 1;
    return static_cast<std::uint32_t>(std::ceil(std::log2(static_cast<double>(n_nodes)))) + 1;
}

std::vector<std::string> PercolationParams::violations() const {
    std::vector<std::string> out;
    if (!(q >= 0.0 && q <= 1.0)) out.emplace_back("probability out of range");
    if (walk_len < 1) out.emplace_back("walk length must be at least 1");
    if (n_content < 1) out.emplace_back("n_content must be at least 1");
    if (n_queries < 1) out.emplace_back("n_queries must be at least 1");
    return out;
}

namespace {

std::vector<NodeId> distinct_in_order(const std::vector<NodeId>& path) {
    std::vector<NodeId> out;
    out.reserve(path.size());
    for (NodeId v : path)
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    return out;
}

NodeId pick_connected_node(const Network& net, Rng& rng) {
    for (;;) {
        const auto v = static_cast<NodeId>(rng.below(net.size()));
        if (net.degree(v) > 0) return v;
    }
}

}  // namespace

std::vector<NodeId> implant_content(const Network& net, NodeId start, std::uint32_t walk_len,
                                    std::uint64_t seed) {
    return distinct_in_order(random_walk(net, start, walk_len, seed));
}

PercolationWorkspace::PercolationWorkspace(const Network& net) : net_(&net), mark_(net.size(), 0) {}

QueryTrace PercolationWorkspace::run(NodeId start, std::uint32_t walk_len, double q, Rng& rng,
                                     std::vector<std::uint64_t>* received) {
    if (++epoch_ == 0) {
        std::fill(mark_.begin(), mark_.end(), 0);
        epoch_ = 1;
    }
    QueryTrace trace;
    const auto walk = random_walk(*net_, start, walk_len, rng);
    trace.walk_hops = walk_len;
    for (std::size_t i = 0; i < walk.size(); ++i) {
        const NodeId v = walk[i];
        if (received && i > 0) ++(*received)[v];
        if (mark_[v] != epoch_) {
            mark_[v] = epoch_;
            trace.visited.push_back(v);
        }
    }

    // Breadth-first cascade; visited doubles as the queue.
    for (std::size_t head = 0; head < trace.visited.size(); ++head) {
        const NodeId u = trace.visited[head];
        for (NodeId nb : net_->neighbors(u)) {
            if (!rng.bernoulli(q)) continue;
            ++trace.transmissions;
            if (received) ++(*received)[nb];
            if (mark_[nb] != epoch_) {
                mark_[nb] = epoch_;
                trace.visited.push_back(nb);
            }
        }
    }
    return trace;
}

QueryTrace percolate_query(const Network& net, NodeId start, std::uint32_t walk_len, double q,
                           std::uint64_t seed) {
    PercolationWorkspace ws(net);
    Rng rng(seed);
    return ws.run(start, walk_len, q, rng);
}

PercMetrics run_experiment(const Network& net, const PercolationParams& params, std::uint64_t seed) {
    if (const auto problems = params.violations(); !problems.empty())
        throw Error("percolation: " + problems.front());
    if (net.edge_count() == 0) throw Error("percolation: network has no edges");

    Rng rng(seed);
    PercMetrics m;
    m.n_content = params.n_content;
    m.replica_counts.assign(net.size(), 0);
    m.message_counts.assign(net.size(), 0);

    std::vector<std::vector<NodeId>> replicas(params.n_content);
    for (auto& set : replicas) {
        const NodeId origin = pick_connected_node(net, rng);
        set = distinct_in_order(random_walk(net, origin, params.walk_len, rng));
        for (NodeId v : set) ++m.replica_counts[v];
    }

    PercolationWorkspace ws(net);
    std::uint64_t hits = 0;
    double copies = 0;
    double max_cost_sum = 0;
    for (std::uint32_t i = 0; i < params.n_queries; ++i) {
        const auto target = rng.below(params.n_content);
        const NodeId origin = pick_connected_node(net, rng);
        const auto trace = ws.run(origin, params.walk_len, params.q, rng, &m.message_counts);

        const auto& target_set = replicas[target];
        if (std::any_of(target_set.begin(), target_set.end(), [&](NodeId v) { return ws.active(v); }))
            ++hits;
        copies += static_cast<double>(trace.transmissions + trace.walk_hops);

        std::uint32_t max_cost = 0;
        for (NodeId v : trace.visited) max_cost = std::max(max_cost, m.replica_counts[v]);
        max_cost_sum += max_cost;
    }
    const double nq = params.n_queries;
    m.hit_rate = static_cast<double>(hits) / nq;
    m.copies_per_query = copies / nq;
    m.max_cost_per_object = max_cost_sum / nq / params.n_content;
    return m;
}

PercolationScaled scale_metrics(double copies_per_query, double max_cost_per_object, const WorkloadParams& w) {
    const auto rates = derive_rates(w);
    PercolationScaled s;
    s.b_ave = copies_per_query / w.n_peers * rates.query_byte_rate;
    s.d_max = w.items_per_peer * kHistogramBytes * w.n_peers * max_cost_per_object;
    s.p_max = w.items_per_peer * w.n_peers * (rates.query_byte_rate / w.message_bytes) *
              w.flop_per_compare * max_cost_per_object;
    return s;
}

PercolationScaled scale_metrics(const PercMetrics& m, const WorkloadParams& w) {
    return scale_metrics(m.copies_per_query, m.max_cost_per_object, w);
}

}  // namespace p2pcbir
