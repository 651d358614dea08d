#include "p2pcbir/supernode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "p2pcbir/error.hpp"

namespace p2pcbir {

std::vector<std::uint32_t> SupernodeTopology::tree_neighbors(std::uint32_t i) const {
    std::vector<std::uint32_t> out;
    const auto count = supernode_count();
    if (i > 0) out.push_back((i - 1) / 2);
    for (std::uint32_t c : {2 * i + 1, 2 * i + 2})
        if (c < count) out.push_back(c);
    return out;
}

std::uint32_t SupernodeTopology::tree_degree(std::uint32_t i) const {
    const auto count = supernode_count();
    return (i > 0 ? 1u : 0u) + (2 * i + 1 < count ? 1u : 0u) + (2 * i + 2 < count ? 1u : 0u);
}

SupernodeTopology build_topology(std::uint32_t n, double s, std::uint64_t seed) {
    if (!(s > 0.0 && s <= 1.0)) throw Error("supernode fraction must be in (0, 1]");
    const auto count = static_cast<std::uint32_t>(std::llround(s * n));
    if (count == 0) throw Error("supernode fraction selects no super-nodes");

    Rng rng(seed);
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);

    SupernodeTopology t;
    t.fraction_ = s;
    t.supernodes_.assign(order.begin(), order.begin() + count);
    t.home_.assign(n, 0);
    t.leaf_counts_.assign(count, 0);
    for (std::uint32_t i = 0; i < count; ++i) t.home_[order[i]] = i;
    for (std::uint32_t j = count; j < n; ++j) {
        const auto sn = (j - count) % count;
        t.home_[order[j]] = sn;
        ++t.leaf_counts_[sn];
    }
    return t;
}

namespace {

constexpr std::uint32_t kNoParent = 0xffffffffu;

// Floods from the origin's super-node; each tree edge carries the query once,
// away from the entry point. visit(pos) is called once per super-node reached.
template <typename Visit>
RouteResult flood(const SupernodeTopology& topo, NodeId origin, std::vector<std::uint64_t>& counts, Visit&& visit) {
    if (origin >= topo.size()) throw Error("origin out of range");
    RouteResult r;
    const auto entry = topo.home(origin);
    if (!topo.is_supernode(origin)) {
        ++counts[origin];
        ++counts[topo.supernode(entry)];
        ++r.messages;
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> stack{{entry, kNoParent}};
    while (!stack.empty()) {
        const auto [at, from] = stack.back();
        stack.pop_back();
        ++r.supernodes_reached;
        visit(at);
        for (auto nb : topo.tree_neighbors(at)) {
            if (nb == from) continue;
            ++counts[topo.supernode(at)];
            ++counts[topo.supernode(nb)];
            ++r.messages;
            stack.emplace_back(nb, at);
        }
    }
    return r;
}

}  // namespace

RouteResult route_query(const SupernodeTopology& topo, NodeId origin, std::vector<std::uint64_t>& counts) {
    return flood(topo, origin, counts, [](std::uint32_t) {});
}

std::vector<std::uint64_t> route_query(const SupernodeTopology& topo, NodeId origin) {
    std::vector<std::uint64_t> counts(topo.size(), 0);
    route_query(topo, origin, counts);
    return counts;
}

double SupernodeMetrics::max_bytes_per_s() const {
    return bytes_per_s.empty() ? 0.0 : *std::max_element(bytes_per_s.begin(), bytes_per_s.end());
}

double SupernodeMetrics::mean_bytes_per_s() const {
    if (bytes_per_s.empty()) return 0.0;
    return std::accumulate(bytes_per_s.begin(), bytes_per_s.end(), 0.0) / static_cast<double>(bytes_per_s.size());
}

double SupernodeMetrics::max_stored_items() const {
    return stored_items.empty() ? 0.0 : *std::max_element(stored_items.begin(), stored_items.end());
}

double SupernodeMetrics::max_flop_per_s() const {
    return flop_per_s.empty() ? 0.0 : *std::max_element(flop_per_s.begin(), flop_per_s.end());
}

SupernodeMetrics run_experiment(const SupernodeTopology& topo, const WorkloadParams& w, std::uint32_t n_queries,
                                std::uint64_t seed) {
    w.validate();
    if (n_queries == 0) throw Error("n_queries must be at least 1");
    const auto n = topo.size();
    Rng rng(seed);

    SupernodeMetrics m;
    m.n_queries = n_queries;
    m.stored_items.assign(n, 0.0);
    for (std::uint32_t sn = 0; sn < topo.supernode_count(); ++sn)
        m.stored_items[topo.supernode(sn)] = w.items_per_peer * (1.0 + topo.leaf_count(sn));

    std::vector<std::uint64_t> messages(n, 0);
    std::vector<std::uint64_t> evaluations(n, 0);  // queries evaluated per node
    std::vector<std::uint32_t> reached(topo.supernode_count(), 0);
    std::uint64_t hits = 0;
    for (std::uint32_t i = 1; i <= n_queries; ++i) {
        const auto origin = static_cast<NodeId>(rng.below(n));
        const auto owner = static_cast<NodeId>(rng.below(n));  // owner of the sought item
        flood(topo, origin, messages, [&](std::uint32_t pos) {
            reached[pos] = i;
            ++evaluations[topo.supernode(pos)];
        });
        if (reached[topo.home(owner)] == i) ++hits;
    }

    const double scale = w.n_peers * w.query_rate / n_queries;
    m.bytes_per_s.resize(n);
    m.flop_per_s.resize(n);
    for (std::uint32_t v = 0; v < n; ++v) {
        m.bytes_per_s[v] = static_cast<double>(messages[v]) * w.message_bytes * scale;
        m.flop_per_s[v] = static_cast<double>(evaluations[v]) * m.stored_items[v] * w.flop_per_compare * scale;
    }
    m.hit_rate = static_cast<double>(hits) / n_queries;
    return m;
}

}  // namespace p2pcbir
