#pragma once

// Reference-pair indexing on a consistent-hashing key ring.
//
// A vector is ranked against a fixed set of reference vectors; pairs of its
// closest references (chosen by a template scheme) are hashed to ring keys,
// and the vector is stored at the successor peer of every key. A query
// computes its own pairs and contacts the owners of a prefix of them.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "p2pcbir/cbir.hpp"

namespace p2pcbir {

struct RefSet {
    std::vector<Histogram> vectors;

    std::size_t size() const { return vectors.size(); }
    /// Throws Error unless there are at least 5 distinct vectors.
    void validate() const;
};

/// n_refs references drawn uniformly without replacement from coll.
RefSet choose_references(const Collection& coll, std::size_t n_refs, std::uint64_t seed);

/// Unordered pair of reference indices, stored with lo <= hi.
struct RefPair {
    std::uint32_t lo = 0;
    std::uint32_t hi = 0;

    RefPair() = default;
    RefPair(std::uint32_t a, std::uint32_t b) : lo(a < b ? a : b), hi(a < b ? b : a) {}
    bool operator==(const RefPair&) const = default;
    auto operator<=>(const RefPair&) const = default;
};

/// Templates over 1-based rank positions, e.g. {1,2} = closest and second closest.
struct PairScheme {
    std::vector<RefPair> templates;

    std::size_t size() const { return templates.size(); }
    std::uint32_t max_rank() const;

    /// {1,1},{1,2},{2,3},{1,3},{1,4},{2,5},{2,4},{3,4},{1,5},{4,5},{3,5}
    static PairScheme standard();
};

/// Reference indices (0-based) by ascending distance to x; ties by index.
std::vector<std::uint32_t> rank_references(const Histogram& x, const RefSet& refs, Metric metric);

/// Substitutes the rank list into the templates, dropping repeats and
/// keeping template order. Throws Error if the rank list is too short.
std::vector<RefPair> pairs_for_vector(const std::vector<std::uint32_t>& ranking, const PairScheme& scheme);

/// 64-bit FNV-1a of the 16-byte big-endian encoding (lo, hi).
std::uint64_t pair_key(RefPair pair);

/// Peers on a 64-bit identifier circle; a key belongs to its clockwise successor.
class Ring {
public:
    Ring() = default;
    /// Throws Error on an empty or duplicate id list.
    explicit Ring(std::vector<std::uint64_t> peer_ids);
    /// n_peers uniformly random ids.
    static Ring random(std::size_t n_peers, std::uint64_t seed);

    std::size_t size() const { return ids_.size(); }
    const std::vector<std::uint64_t>& peer_ids() const { return ids_; }
    /// Index (into peer_ids) of the successor of key.
    std::size_t owner(std::uint64_t key) const;

private:
    std::vector<std::uint64_t> ids_;  // sorted
};

struct PlacementReport {
    std::vector<std::uint64_t> keys;
    std::vector<std::size_t> peers;  // owner of each key
};

struct QueryCost {
    std::uint64_t messages = 0;            // request + response per contacted peer
    std::uint64_t candidates_scanned = 0;  // stored entries examined, repeats included
    std::vector<std::size_t> peers;        // contacted peers
};

struct QueryResult {
    NeighborList neighbors;
    std::vector<ItemId> candidates;  // distinct, ascending
    QueryCost cost;
};

class PrismIndex {
public:
    PrismIndex(Ring ring, RefSet refs, PairScheme scheme = PairScheme::standard(), Metric metric = Metric::euclidean);

    const Ring& ring() const { return ring_; }
    const RefSet& refs() const { return refs_; }
    const PairScheme& scheme() const { return scheme_; }
    Metric metric() const { return metric_; }

    PlacementReport insert(ItemId id, const Histogram& x);
    void insert(const Collection& coll);

    /// Uses the first n_pairs query pairs. Throws Error unless
    /// 1 <= n_pairs <= scheme size and k >= 1.
    QueryResult query(const Histogram& q, std::size_t n_pairs, std::size_t k) const;
    /// Candidates and cost of query() without ranking; neighbors stays empty.
    QueryResult probe(const Histogram& q, std::size_t n_pairs) const;

    std::size_t item_count() const { return vectors_.size(); }
    std::uint64_t stored_entries() const { return stored_entries_; }
    /// Entries stored per peer (index into ring().peer_ids()).
    std::vector<std::uint64_t> peer_loads() const;
    const std::unordered_map<std::uint64_t, std::vector<ItemId>>& buckets() const { return buckets_; }
    const std::vector<std::pair<ItemId, Histogram>>& items() const { return vectors_; }

private:
    Ring ring_;
    RefSet refs_;
    PairScheme scheme_;
    Metric metric_;
    std::unordered_map<std::uint64_t, std::vector<ItemId>> buckets_;  // key -> ids
    std::vector<std::pair<ItemId, Histogram>> vectors_;
    std::unordered_map<ItemId, std::size_t> slot_;
    std::uint64_t stored_entries_ = 0;
};

struct PairTraffic {
    std::vector<std::pair<RefPair, std::uint64_t>> counts;  // descending, ties by pair
    std::uint64_t total = 0;

    /// Fraction of traffic carried by the n most used pairs.
    double top_share(std::size_t n) const;
};

/// Counts how often each pair identity is routed to by the query log.
PairTraffic traffic_skew(const PrismIndex& index, const std::vector<Histogram>& queries, std::size_t n_pairs);

struct RecallPoint {
    std::size_t n_pairs = 0;
    double visited_fraction = 0;  // mean candidates scanned / collection size
    double recall = 0;            // mean |candidates ∩ exact top-k| / k
    double busiest_peer_share = 0;  // fraction of queries that contact the most-contacted peer
};

/// Recall against exact full-scan k-NN over coll for n_pairs = 1..scheme size.
std::vector<RecallPoint> recall_curve(const PrismIndex& index, const Collection& coll,
                                      const std::vector<Histogram>& queries, std::size_t k = 20);

struct LoadSummary {
    double hottest_share = 0;  // stored entries on the busiest peer / total
    double mean_share = 0;     // 1 / peers
    std::size_t hottest_peer = 0;
};

LoadSummary storage_skew(const PrismIndex& index);

/// Manifest (metric, scheme, references, peer ids) as JSON plus a binary
/// item file: "P2PI", u64 count, then per item u64 id and 166 f64, all
/// little-endian. Loading re-inserts the items, which reproduces placement.
void save_index(const PrismIndex& index, const std::string& manifest_path, const std::string& items_path);
PrismIndex load_index(const std::string& manifest_path, const std::string& items_path);

}  // namespace p2pcbir
