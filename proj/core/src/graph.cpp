#include "p2pcbir/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "p2pcbir/error.hpp"

namespace p2pcbir {

namespace {

std::uint64_t edge_key(NodeId a, NodeId b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

// Number of random partners tried per defective edge before it is dropped.
constexpr int kSwapRetries = 200;

}  // namespace

PowerLawParams PowerLawParams::for_size(std::uint32_t n_nodes, std::uint32_t k_min) {
    PowerLawParams p;
    p.n_nodes = n_nodes;
    p.k_min = k_min;
    p.k_max = static_cast<std::uint32_t>(std::floor(std::sqrt(static_cast<double>(n_nodes))));
    return p;
}

void PowerLawParams::validate() const {
    if (!(tau > 0)) throw Error("power law: tau must be positive");
    if (k_min < 1) throw Error("power law: k_min must be at least 1");
    if (k_min > k_max) throw Error("power law: k_min exceeds k_max");
    if (n_nodes == 0 || k_max > n_nodes - 1) throw Error("power law: k_max must be below n_nodes");
}

double power_law_norm(double tau, std::uint32_t k_min, std::uint32_t k_max) {
    double sum = 0;
    // Small terms first for accuracy.
    for (std::uint32_t k = k_max; k >= k_min && k > 0; --k) sum += std::pow(static_cast<double>(k), -tau);
    return 1.0 / sum;
}

Network::Network(std::uint32_t n_nodes, std::span<const std::pair<NodeId, NodeId>> edges) {
    std::vector<std::uint32_t> deg(n_nodes, 0);
    for (auto [u, v] : edges) {
        if (u >= n_nodes || v >= n_nodes) throw Error("edge endpoint out of range");
        if (u == v) throw Error("self-loop in edge list");
        ++deg[u];
        ++deg[v];
    }
    offsets_.assign(n_nodes + 1, 0);
    for (std::uint32_t v = 0; v < n_nodes; ++v) offsets_[v + 1] = offsets_[v] + deg[v];
    targets_.resize(offsets_.back());
    std::vector<std::uint32_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (auto [u, v] : edges) {
        targets_[cursor[u]++] = v;
        targets_[cursor[v]++] = u;
    }
    for (std::uint32_t v = 0; v < n_nodes; ++v) {
        auto first = targets_.begin() + offsets_[v];
        auto last = targets_.begin() + offsets_[v + 1];
        std::sort(first, last);
        if (std::adjacent_find(first, last) != last) throw Error("duplicate edge in edge list");
    }
}

std::vector<std::pair<NodeId, NodeId>> Network::edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(edge_count());
    for (NodeId u = 0; u < size(); ++u)
        for (NodeId v : neighbors(u))
            if (u < v) out.emplace_back(u, v);
    return out;
}

std::vector<std::uint32_t> sample_degree_sequence(const PowerLawParams& params, std::uint64_t seed) {
    params.validate();
    Rng rng(seed);

    // Cumulative distribution over k_min..k_max.
    const std::uint32_t span = params.k_max - params.k_min + 1;
    std::vector<double> cdf(span);
    double acc = 0;
    for (std::uint32_t i = 0; i < span; ++i) {
        acc += std::pow(static_cast<double>(params.k_min + i), -params.tau);
        cdf[i] = acc;
    }
    for (auto& c : cdf) c /= acc;
    cdf.back() = 1.0;

    std::vector<std::uint32_t> degrees(params.n_nodes);
    std::uint64_t total = 0;
    for (auto& d : degrees) {
        const double u = rng.uniform();
        const auto idx = static_cast<std::uint32_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        d = params.k_min + std::min(idx, span - 1);
        total += d;
    }
    if (total % 2 == 1) {
        // Bump a uniformly chosen node that still has headroom.
        for (;;) {
            auto& d = degrees[rng.below(degrees.size())];
            if (d < params.k_max) {
                ++d;
                break;
            }
            if (params.k_min == params.k_max) {
                // Every node is pinned at k_max; trim one instead.
                --d;
                break;
            }
        }
    }
    return degrees;
}

Network build_configuration_graph(std::span<const std::uint32_t> degrees, std::uint64_t seed,
                                  BuildReport* report) {
    const std::uint64_t stub_total = std::accumulate(degrees.begin(), degrees.end(), std::uint64_t{0});
    if (stub_total % 2 != 0) throw Error("degree sum is odd");
    const auto n = static_cast<std::uint32_t>(degrees.size());
    Rng rng(seed);

    std::vector<NodeId> stubs;
    stubs.reserve(stub_total);
    for (NodeId v = 0; v < n; ++v) stubs.insert(stubs.end(), degrees[v], v);
    shuffle(stubs, rng);

    const std::size_t m = stub_total / 2;
    std::vector<std::pair<NodeId, NodeId>> edges(m);
    std::unordered_map<std::uint64_t, std::uint32_t> multiplicity;
    multiplicity.reserve(m * 2);
    std::vector<std::size_t> defective;
    for (std::size_t i = 0; i < m; ++i) {
        edges[i] = {stubs[2 * i], stubs[2 * i + 1]};
        const auto [u, v] = edges[i];
        if (++multiplicity[edge_key(u, v)] > 1 || u == v) defective.push_back(i);
    }
    stubs = {};

    auto count_of = [&](std::uint64_t key) {
        auto it = multiplicity.find(key);
        return it == multiplicity.end() ? 0u : it->second;
    };
    auto release = [&](std::uint64_t key) {
        auto it = multiplicity.find(key);
        if (--it->second == 0) multiplicity.erase(it);
    };

    std::vector<char> removed(m, 0);
    BuildReport stats;
    for (std::size_t i : defective) {
        {
            const auto [a, b] = edges[i];
            if (a != b && count_of(edge_key(a, b)) == 1) continue;
        }
        bool fixed = false;
        for (int attempt = 0; attempt < kSwapRetries && !fixed; ++attempt) {
            const std::size_t j = rng.below(m);
            if (j == i || removed[j]) continue;
            auto [a, b] = edges[i];
            auto [c, d] = edges[j];
            if (c == d || count_of(edge_key(c, d)) > 1) continue;  // partner must be sound
            if (rng.below(2) == 1) std::swap(c, d);
            if (a == c || b == d) continue;
            const auto k1 = edge_key(a, c);
            const auto k2 = edge_key(b, d);
            if (k1 == k2 || count_of(k1) != 0 || count_of(k2) != 0) continue;
            release(edge_key(a, b));
            release(edge_key(c, d));
            ++multiplicity[k1];
            ++multiplicity[k2];
            edges[i] = {a, c};
            edges[j] = {b, d};
            ++stats.swaps;
            fixed = true;
        }
        if (!fixed) {
            // An earlier swap may have left the edge alone among its copies.
            const auto [a, b] = edges[i];
            if (a != b && count_of(edge_key(a, b)) == 1) continue;
            release(edge_key(a, b));
            removed[i] = 1;
            ++stats.dropped_edges;
        }
    }

    std::vector<std::pair<NodeId, NodeId>> kept;
    kept.reserve(m - stats.dropped_edges);
    for (std::size_t i = 0; i < m; ++i)
        if (!removed[i]) kept.push_back(edges[i]);
    if (report) *report = stats;
    return Network(n, kept);
}

Network generate_power_law_network(const PowerLawParams& params, std::uint64_t seed) {
    Rng master(seed);
    const auto degree_seed = master();
    const auto wiring_seed = master();
    const auto degrees = sample_degree_sequence(params, degree_seed);
    return build_configuration_graph(degrees, wiring_seed);
}

DegreeStats degree_stats(const Network& net) {
    DegreeStats s;
    const auto n = net.size();
    if (n == 0) return s;
    double sum = 0, sum2 = 0;
    std::uint32_t kmin = std::numeric_limits<std::uint32_t>::max();
    for (NodeId v = 0; v < n; ++v) {
        const double k = net.degree(v);
        sum += k;
        sum2 += k * k;
        s.observed_k_max = std::max(s.observed_k_max, net.degree(v));
        kmin = std::min(kmin, net.degree(v));
    }
    s.mean_k = sum / n;
    s.mean_k2 = sum2 / n;
    s.norm_A = s.observed_k_max == 0 ? 0.0 : power_law_norm(2.0, std::max(kmin, 1u), s.observed_k_max);
    return s;
}

double percolation_threshold(const DegreeStats& stats) {
    const double denom = stats.mean_k2 - stats.mean_k;
    if (!(denom > 0)) throw Error("subcritical graph");
    return stats.mean_k / denom;
}

std::vector<NodeId> random_walk(const Network& net, NodeId start, std::uint32_t length, Rng& rng) {
    if (start >= net.size()) throw Error("walk start out of range");
    std::vector<NodeId> path;
    path.reserve(length + 1);
    path.push_back(start);
    if (length > 0 && net.degree(start) == 0) throw Error("walk start is isolated");
    NodeId at = start;
    for (std::uint32_t step = 0; step < length; ++step) {
        const auto nb = net.neighbors(at);
        at = nb[rng.below(nb.size())];
        path.push_back(at);
    }
    return path;
}

std::vector<NodeId> random_walk(const Network& net, NodeId start, std::uint32_t length, std::uint64_t seed) {
    Rng rng(seed);
    return random_walk(net, start, length, rng);
}

void save_edge_list(const Network& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    for (auto [u, v] : net.edges()) {
        unsigned char buf[8];
        for (int i = 0; i < 4; ++i) {
            buf[i] = static_cast<unsigned char>(u >> (8 * i));
            buf[4 + i] = static_cast<unsigned char>(v >> (8 * i));
        }
        out.write(reinterpret_cast<const char*>(buf), sizeof buf);
    }
    if (!out) throw Error("write failed: " + path);
}

Network load_edge_list(const std::string& path, std::uint32_t n_nodes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::uint32_t highest = 0;
    unsigned char buf[8];
    while (in.read(reinterpret_cast<char*>(buf), sizeof buf)) {
        NodeId u = 0, v = 0;
        for (int i = 0; i < 4; ++i) {
            u |= static_cast<NodeId>(buf[i]) << (8 * i);
            v |= static_cast<NodeId>(buf[4 + i]) << (8 * i);
        }
        highest = std::max({highest, u, v});
        edges.emplace_back(u, v);
    }
    if (in.gcount() != 0) throw Error("truncated edge list: " + path);
    if (n_nodes == 0) n_nodes = edges.empty() ? 0 : highest + 1;
    return Network(n_nodes, edges);
}

}  // namespace p2pcbir
