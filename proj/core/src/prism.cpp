#include "p2pcbir/prism.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "p2pcbir/error.hpp"
#include "p2pcbir/rng.hpp"

namespace p2pcbir {

void RefSet::validate() const {
    if (vectors.size() < 5) throw Error("at least 5 reference vectors are required");
    for (std::size_t i = 0; i < vectors.size(); ++i)
        for (std::size_t j = i + 1; j < vectors.size(); ++j)
            if (vectors[i] == vectors[j]) throw Error("reference vectors must be distinct");
}

RefSet choose_references(const Collection& coll, std::size_t n_refs, std::uint64_t seed) {
    if (n_refs > coll.size()) throw Error("not enough items to draw references from");
    std::vector<std::size_t> idx(coll.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < n_refs; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    RefSet refs;
    for (std::size_t i = 0; i < n_refs; ++i) refs.vectors.push_back(coll[idx[i]].vector);
    return refs;
}

std::uint32_t PairScheme::max_rank() const {
    std::uint32_t m = 0;
    for (const auto& t : templates) m = std::max(m, t.hi);
    return m;
}

PairScheme PairScheme::standard() {
    return PairScheme{{{1, 1}, {1, 2}, {2, 3}, {1, 3}, {1, 4}, {2, 5}, {2, 4}, {3, 4}, {1, 5}, {4, 5}, {3, 5}}};
}

std::vector<std::uint32_t> rank_references(const Histogram& x, const RefSet& refs, Metric metric) {
    std::vector<std::pair<double, std::uint32_t>> scored;
    scored.reserve(refs.size());
    for (std::uint32_t i = 0; i < refs.size(); ++i) scored.emplace_back(distance(x, refs.vectors[i], metric), i);
    std::sort(scored.begin(), scored.end());
    std::vector<std::uint32_t> ranking;
    ranking.reserve(scored.size());
    for (const auto& s : scored) ranking.push_back(s.second);
    return ranking;
}

std::vector<RefPair> pairs_for_vector(const std::vector<std::uint32_t>& ranking, const PairScheme& scheme) {
    if (ranking.size() < std::max<std::uint32_t>(scheme.max_rank(), 5))
        throw Error("rank list too short for pair scheme");
    std::vector<RefPair> out;
    out.reserve(scheme.size());
    for (const auto& t : scheme.templates) {
        if (t.lo == 0) throw Error("pair templates use 1-based ranks");
        const RefPair p(ranking[t.lo - 1], ranking[t.hi - 1]);
        if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
    return out;
}

std::uint64_t pair_key(RefPair pair) {
    constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
    constexpr std::uint64_t kPrime = 0x100000001b3ULL;
    std::uint64_t h = kOffset;
    for (std::uint64_t word : {std::uint64_t{pair.lo}, std::uint64_t{pair.hi}}) {
        for (int shift = 56; shift >= 0; shift -= 8) {
            h ^= (word >> shift) & 0xff;
            h *= kPrime;
        }
    }
    return h;
}

Ring::Ring(std::vector<std::uint64_t> peer_ids) : ids_(std::move(peer_ids)) {
    if (ids_.empty()) throw Error("ring needs at least one peer");
    std::sort(ids_.begin(), ids_.end());
    if (std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end()) throw Error("duplicate peer id");
}

Ring Ring::random(std::size_t n_peers, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::uint64_t> ids;
    ids.reserve(n_peers);
    while (ids.size() < n_peers) {
        for (std::size_t i = ids.size(); i < n_peers; ++i) ids.push_back(rng());
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    }
    return Ring(std::move(ids));
}

std::size_t Ring::owner(std::uint64_t key) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), key);
    if (it == ids_.end()) return 0;
    return static_cast<std::size_t>(it - ids_.begin());
}

PrismIndex::PrismIndex(Ring ring, RefSet refs, PairScheme scheme, Metric metric)
    : ring_(std::move(ring)), refs_(std::move(refs)), scheme_(std::move(scheme)), metric_(metric) {
    refs_.validate();
    if (scheme_.templates.empty()) throw Error("pair scheme is empty");
    if (scheme_.max_rank() > refs_.size()) throw Error("pair scheme references more ranks than there are references");
    if (ring_.size() == 0) throw Error("ring needs at least one peer");
}

PlacementReport PrismIndex::insert(ItemId id, const Histogram& x) {
    if (slot_.contains(id)) throw Error("item already indexed: " + std::to_string(id));
    slot_.emplace(id, vectors_.size());
    vectors_.emplace_back(id, x);

    PlacementReport report;
    for (const auto& pair : pairs_for_vector(rank_references(x, refs_, metric_), scheme_)) {
        const auto key = pair_key(pair);
        buckets_[key].push_back(id);
        ++stored_entries_;
        report.keys.push_back(key);
        report.peers.push_back(ring_.owner(key));
    }
    return report;
}

void PrismIndex::insert(const Collection& coll) {
    for (const auto& item : coll) insert(item.id, item.vector);
}

QueryResult PrismIndex::probe(const Histogram& q, std::size_t n_pairs) const {
    if (n_pairs < 1 || n_pairs > scheme_.size()) throw Error("n_pairs out of range");

    auto pairs = pairs_for_vector(rank_references(q, refs_, metric_), scheme_);
    if (pairs.size() > n_pairs) pairs.resize(n_pairs);

    QueryResult result;
    for (const auto& pair : pairs) {
        const auto key = pair_key(pair);
        const auto peer = ring_.owner(key);
        if (std::find(result.cost.peers.begin(), result.cost.peers.end(), peer) == result.cost.peers.end())
            result.cost.peers.push_back(peer);
        if (auto it = buckets_.find(key); it != buckets_.end()) {
            result.cost.candidates_scanned += it->second.size();
            result.candidates.insert(result.candidates.end(), it->second.begin(), it->second.end());
        }
    }
    result.cost.messages = 2 * result.cost.peers.size();
    std::sort(result.candidates.begin(), result.candidates.end());
    result.candidates.erase(std::unique(result.candidates.begin(), result.candidates.end()), result.candidates.end());
    return result;
}

QueryResult PrismIndex::query(const Histogram& q, std::size_t n_pairs, std::size_t k) const {
    if (k < 1) throw Error("k must be at least 1");
    auto result = probe(q, n_pairs);
    result.neighbors.reserve(result.candidates.size());
    for (ItemId id : result.candidates)
        result.neighbors.push_back({id, distance(q, vectors_[slot_.at(id)].second, metric_)});
    const std::size_t keep = std::min(k, result.neighbors.size());
    std::partial_sort(result.neighbors.begin(), result.neighbors.begin() + static_cast<std::ptrdiff_t>(keep),
                      result.neighbors.end(), neighbor_less);
    result.neighbors.resize(keep);
    return result;
}

std::vector<std::uint64_t> PrismIndex::peer_loads() const {
    std::vector<std::uint64_t> loads(ring_.size(), 0);
    for (const auto& [key, ids] : buckets_) loads[ring_.owner(key)] += ids.size();
    return loads;
}

double PairTraffic::top_share(std::size_t n) const {
    if (total == 0) return 0.0;
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < std::min(n, counts.size()); ++i) acc += counts[i].second;
    return static_cast<double>(acc) / static_cast<double>(total);
}

PairTraffic traffic_skew(const PrismIndex& index, const std::vector<Histogram>& queries, std::size_t n_pairs) {
    if (n_pairs < 1 || n_pairs > index.scheme().size()) throw Error("n_pairs out of range");
    std::unordered_map<std::uint64_t, std::pair<RefPair, std::uint64_t>> by_key;
    PairTraffic traffic;
    for (const auto& q : queries) {
        auto pairs = pairs_for_vector(rank_references(q, index.refs(), index.metric()), index.scheme());
        if (pairs.size() > n_pairs) pairs.resize(n_pairs);
        for (const auto& pair : pairs) {
            auto& slot = by_key[pair_key(pair)];
            slot.first = pair;
            ++slot.second;
            ++traffic.total;
        }
    }
    for (const auto& [key, entry] : by_key) traffic.counts.push_back(entry);
    std::sort(traffic.counts.begin(), traffic.counts.end(), [](const auto& a, const auto& b) {
        return a.second > b.second || (a.second == b.second && a.first < b.first);
    });
    return traffic;
}

std::vector<RecallPoint> recall_curve(const PrismIndex& index, const Collection& coll,
                                      const std::vector<Histogram>& queries, std::size_t k) {
    if (k < 1) throw Error("k must be at least 1");
    std::vector<RecallPoint> curve;
    if (queries.empty() || coll.empty()) return curve;

    std::vector<std::vector<ItemId>> truth;
    truth.reserve(queries.size());
    for (const auto& q : queries) {
        std::vector<ItemId> ids;
        for (const auto& nb : knn_full_scan(q, coll, k, index.metric())) ids.push_back(nb.id);
        std::sort(ids.begin(), ids.end());
        truth.push_back(std::move(ids));
    }

    // Pairs are walked incrementally, so each bucket is scanned once per
    // query rather than once per prefix length.
    const std::size_t max_pairs = index.scheme().size();
    std::vector<double> recall_sum(max_pairs, 0.0), scanned_sum(max_pairs, 0.0);
    std::vector<std::vector<std::uint64_t>> contacts(max_pairs, std::vector<std::uint64_t>(index.ring().size(), 0));
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto pairs = pairs_for_vector(rank_references(queries[i], index.refs(), index.metric()), index.scheme());
        std::vector<char> hit(truth[i].size(), 0);
        std::vector<std::size_t> peers;
        std::size_t found = 0;
        double scanned = 0;
        for (std::size_t n = 0; n < max_pairs; ++n) {
            if (n < pairs.size()) {
                const auto key = pair_key(pairs[n]);
                const auto peer = index.ring().owner(key);
                if (std::find(peers.begin(), peers.end(), peer) == peers.end()) peers.push_back(peer);
                if (auto it = index.buckets().find(key); it != index.buckets().end()) {
                    scanned += static_cast<double>(it->second.size());
                    for (ItemId id : it->second) {
                        const auto pos = std::lower_bound(truth[i].begin(), truth[i].end(), id);
                        if (pos == truth[i].end() || *pos != id) continue;
                        auto& h = hit[static_cast<std::size_t>(pos - truth[i].begin())];
                        if (!h) {
                            h = 1;
                            ++found;
                        }
                    }
                }
            }
            recall_sum[n] += static_cast<double>(found) / static_cast<double>(k);
            scanned_sum[n] += scanned;
            for (auto peer : peers) ++contacts[n][peer];
        }
    }
    const double nq = static_cast<double>(queries.size());
    for (std::size_t n = 0; n < max_pairs; ++n) {
        RecallPoint point;
        point.n_pairs = n + 1;
        point.recall = recall_sum[n] / nq;
        point.visited_fraction = scanned_sum[n] / nq / static_cast<double>(coll.size());
        point.busiest_peer_share =
            static_cast<double>(*std::max_element(contacts[n].begin(), contacts[n].end())) / nq;
        curve.push_back(point);
    }
    return curve;
}

LoadSummary storage_skew(const PrismIndex& index) {
    LoadSummary s;
    const auto loads = index.peer_loads();
    s.mean_share = 1.0 / static_cast<double>(loads.size());
    const auto total = index.stored_entries();
    if (total == 0) return s;
    const auto it = std::max_element(loads.begin(), loads.end());
    s.hottest_peer = static_cast<std::size_t>(it - loads.begin());
    s.hottest_share = static_cast<double>(*it) / static_cast<double>(total);
    return s;
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8)) throw Error("item store truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

static_assert(sizeof(double) == 8);

void put_f64(std::ostream& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

double get_f64(std::istream& in) {
    const auto bits = get_u64(in);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

}  // namespace

void save_index(const PrismIndex& index, const std::string& manifest_path, const std::string& items_path) {
    nlohmann::json manifest;
    manifest["format"] = "p2pcbir-prism-1";
    manifest["metric"] = to_string(index.metric());
    auto& scheme = manifest["scheme"] = nlohmann::json::array();
    for (const auto& t : index.scheme().templates) scheme.push_back({t.lo, t.hi});
    auto& refs = manifest["refs"] = nlohmann::json::array();
    for (const auto& r : index.refs().vectors) refs.push_back(std::vector<double>(r.bins().begin(), r.bins().end()));
    manifest["peer_ids"] = index.ring().peer_ids();

    std::ofstream m(manifest_path);
    if (!m) throw Error("cannot write " + manifest_path);
    m << manifest.dump() << '\n';

    std::ofstream out(items_path, std::ios::binary);
    if (!out) throw Error("cannot write " + items_path);
    out.write("P2PI", 4);
    put_u64(out, index.items().size());
    for (const auto& [id, vec] : index.items()) {
        put_u64(out, id);
        for (double b : vec.bins()) put_f64(out, b);
    }
    if (!out || !m) throw Error("write failed");
}

PrismIndex load_index(const std::string& manifest_path, const std::string& items_path) {
    std::ifstream m(manifest_path);
    if (!m) throw Error("cannot open " + manifest_path);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(m);
        if (manifest.value("format", "") != "p2pcbir-prism-1") throw Error("unknown index manifest format");
        RefSet refs;
        for (const auto& r : manifest.at("refs")) refs.vectors.emplace_back(r.get<std::vector<double>>());
        PairScheme scheme;
        for (const auto& t : manifest.at("scheme"))
            scheme.templates.emplace_back(t.at(0).get<std::uint32_t>(), t.at(1).get<std::uint32_t>());
        PrismIndex index(Ring(manifest.at("peer_ids").get<std::vector<std::uint64_t>>()), std::move(refs),
                         std::move(scheme), parse_metric(manifest.at("metric").get<std::string>()));

        std::ifstream in(items_path, std::ios::binary);
        if (!in) throw Error("cannot open " + items_path);
        char magic[4];
        if (!in.read(magic, 4) || std::string(magic, 4) != "P2PI") throw Error("not an item store: " + items_path);
        const auto count = get_u64(in);
        for (std::uint64_t i = 0; i < count; ++i) {
            const auto id = get_u64(in);
            HistogramBins bins;
            for (auto& b : bins) b = get_f64(in);
            index.insert(id, Histogram(bins));
        }
        return index;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("index manifest: ") + e.what());
    }
}

}  // namespace p2pcbir
