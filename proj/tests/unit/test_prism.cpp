#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>

#include "p2pcbir/error.hpp"
#include "p2pcbir/prism.hpp"
#include "p2pcbir/rng.hpp"

using namespace p2pcbir;

namespace {

std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

struct Fixture {
    Collection coll = synth_collection(3000, 6, 2.0, 41);
    PrismIndex index{Ring::random(256, 42), choose_references(coll, 16, 43)};
    Fixture() { index.insert(coll); }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

std::vector<Histogram> held_out_queries(std::size_t n) {
    const auto extra = synth_collection(3000 + n, 6, 2.0, 41);
    std::vector<Histogram> q;
    for (std::size_t i = 3000; i < extra.size(); ++i) q.push_back(extra[i].vector);
    return q;
}

}  // namespace

TEST(PairKey, FnvReferenceVector) {
    EXPECT_EQ(fnv1a({'a'}), 0xaf63dc4c8601ec8cULL);
    // (lo, hi) = (1, 2) encodes as two big-endian u64 words.
    std::vector<std::uint8_t> bytes(16, 0);
    bytes[7] = 1;
    bytes[15] = 2;
    EXPECT_EQ(pair_key(RefPair(1, 2)), fnv1a(bytes));
    EXPECT_EQ(pair_key(RefPair(2, 1)), pair_key(RefPair(1, 2)));
}

TEST(PairKey, ExhaustiveUniquenessOver32References) {
    std::set<std::uint64_t> keys;
    for (std::uint32_t a = 0; a < 32; ++a)
        for (std::uint32_t b = 0; b < 32; ++b) keys.insert(pair_key(RefPair(a, b)));
    EXPECT_EQ(keys.size(), 32u * 33 / 2);
}

TEST(PairScheme, StandardTemplates) {
    const auto s = PairScheme::standard();
    EXPECT_EQ(s.size(), 11u);
    EXPECT_EQ(s.max_rank(), 5u);
    EXPECT_EQ(s.templates[0], RefPair(1, 1));
    EXPECT_EQ(s.templates[10], RefPair(3, 5));
    EXPECT_EQ(std::set<RefPair>(s.templates.begin(), s.templates.end()).size(), 11u);
}

TEST(PairsForVector, SubstitutesRanks) {
    const std::vector<std::uint32_t> ranking{7, 3, 9, 1, 4, 0};
    const auto pairs = pairs_for_vector(ranking, PairScheme::standard());
    const std::vector<RefPair> expected{{7, 7}, {7, 3}, {3, 9}, {7, 9}, {7, 1}, {3, 4},
                                        {3, 1}, {9, 1}, {7, 4}, {1, 4}, {9, 4}};
    EXPECT_EQ(pairs, expected);
}

TEST(PairsForVector, DropsRepeatsAndRejectsShortRanking) {
    PairScheme s{{{1, 2}, {2, 1}, {1, 3}}};
    EXPECT_EQ(pairs_for_vector({5, 6, 7, 8, 9}, s).size(), 2u);
    EXPECT_THROW(pairs_for_vector({1, 2, 3}, PairScheme::standard()), Error);
}

TEST(RankReferences, MatchesBruteForceOracle) {
    const auto& f = fixture();
    for (std::size_t i = 0; i < 40; ++i) {
        const auto& x = f.coll[i * 7].vector;
        for (auto metric : {Metric::euclidean, Metric::histogram_intersection}) {
            std::vector<std::uint32_t> oracle(f.index.refs().size());
            std::iota(oracle.begin(), oracle.end(), 0);
            std::stable_sort(oracle.begin(), oracle.end(), [&](std::uint32_t a, std::uint32_t b) {
                return distance(x, f.index.refs().vectors[a], metric) < distance(x, f.index.refs().vectors[b], metric);
            });
            EXPECT_EQ(rank_references(x, f.index.refs(), metric), oracle);
        }
    }
}

TEST(RankReferences, TiesResolvedByIndex) {
    RefSet refs;
    for (std::size_t b : {3, 3, 4, 5, 6}) refs.vectors.push_back(Histogram::one_hot(b));
    // Duplicate reference 0/1 tie at distance 0.
    EXPECT_EQ(rank_references(Histogram::one_hot(3), refs, Metric::euclidean)[0], 0u);
    EXPECT_EQ(rank_references(Histogram::one_hot(3), refs, Metric::euclidean)[1], 1u);
}

TEST(Ring, OwnerIsClockwiseSuccessor) {
    const Ring ring({100, 20, 300, 4000});
    EXPECT_EQ(ring.peer_ids(), (std::vector<std::uint64_t>{20, 100, 300, 4000}));
    EXPECT_EQ(ring.owner(0), 0u);
    EXPECT_EQ(ring.owner(20), 0u);
    EXPECT_EQ(ring.owner(21), 1u);
    EXPECT_EQ(ring.owner(4000), 3u);
    EXPECT_EQ(ring.owner(4001), 0u);  // wraps
    EXPECT_EQ(ring.owner(~0ULL), 0u);
}

TEST(Ring, RandomMatchesLinearScanOracle) {
    const auto ring = Ring::random(50, 5);
    EXPECT_EQ(ring.size(), 50u);
    Rng rng(6);
    for (int i = 0; i < 500; ++i) {
        const auto key = rng();
        std::size_t expected = 0;
        for (std::size_t p = 0; p < ring.size(); ++p)
            if (ring.peer_ids()[p] >= key) {
                expected = p;
                break;
            }
        EXPECT_EQ(ring.owner(key), expected);
    }
}

TEST(Ring, Errors) {
    EXPECT_THROW(Ring(std::vector<std::uint64_t>{}), Error);
    EXPECT_THROW(Ring({1, 2, 1}), Error);
}

TEST(PrismIndex, PlacementUsesAtMostElevenKeys) {
    const auto& f = fixture();
    EXPECT_LE(f.index.stored_entries(), 11u * f.coll.size());
    EXPECT_EQ(f.index.item_count(), f.coll.size());
    std::map<ItemId, int> per_item;
    for (const auto& [key, ids] : f.index.buckets())
        for (auto id : ids) ++per_item[id];
    for (const auto& [id, n] : per_item) EXPECT_LE(n, 11);
    const auto loads = f.index.peer_loads();
    EXPECT_EQ(std::accumulate(loads.begin(), loads.end(), std::uint64_t{0}), f.index.stored_entries());
}

TEST(PrismIndex, InsertedVectorRetrievedAtRankOne) {
    const auto& f = fixture();
    for (std::size_t i = 0; i < f.coll.size(); i += 37) {
        const auto r = f.index.query(f.coll[i].vector, 11, 5);
        ASSERT_FALSE(r.neighbors.empty());
        EXPECT_EQ(r.neighbors[0].distance, 0.0);
        // Synthetic data has no exact duplicates, so the id is unique.
        EXPECT_EQ(r.neighbors[0].id, f.coll[i].id);
    }
}

TEST(PrismIndex, QueryResultShape) {
    const auto& f = fixture();
    const auto r = f.index.query(f.coll[3].vector, 4, 10);
    EXPECT_TRUE(std::is_sorted(r.candidates.begin(), r.candidates.end()));
    EXPECT_EQ(std::adjacent_find(r.candidates.begin(), r.candidates.end()), r.candidates.end());
    EXPECT_EQ(r.cost.messages, 2 * r.cost.peers.size());
    EXPECT_LE(r.cost.peers.size(), 4u);
    EXPECT_GE(r.cost.candidates_scanned, r.candidates.size());
    EXPECT_TRUE(std::is_sorted(r.neighbors.begin(), r.neighbors.end(), neighbor_less));
    const auto p = f.index.probe(f.coll[3].vector, 4);
    EXPECT_EQ(p.candidates, r.candidates);
    EXPECT_TRUE(p.neighbors.empty());
}

TEST(PrismIndex, CandidatesGrowWithPairs) {
    const auto& f = fixture();
    for (const auto& q : held_out_queries(20)) {
        std::vector<ItemId> prev;
        for (std::size_t n = 1; n <= 11; ++n) {
            const auto c = f.index.probe(q, n).candidates;
            EXPECT_TRUE(std::includes(c.begin(), c.end(), prev.begin(), prev.end()));
            prev = c;
        }
    }
}

TEST(PrismIndex, Errors) {
    const auto& f = fixture();
    EXPECT_THROW(f.index.query(f.coll[0].vector, 0, 5), Error);
    EXPECT_THROW(f.index.query(f.coll[0].vector, 12, 5), Error);
    EXPECT_THROW(f.index.query(f.coll[0].vector, 3, 0), Error);
    PrismIndex copy = f.index;
    EXPECT_THROW(copy.insert(f.coll[0].id, f.coll[0].vector), Error);

    RefSet four;
    for (std::size_t b = 0; b < 4; ++b) four.vectors.push_back(Histogram::one_hot(b));
    EXPECT_THROW(PrismIndex(Ring::random(4, 1), four), Error);
    four.vectors.push_back(Histogram::one_hot(0));
    EXPECT_THROW(PrismIndex(Ring::random(4, 1), four), Error);
    EXPECT_THROW(choose_references(f.coll, 5000, 1), Error);
}

TEST(RecallCurve, MatchesProbeOracleAndIsMonotone) {
    const auto& f = fixture();
    const auto queries = held_out_queries(30);
    const auto curve = recall_curve(f.index, f.coll, queries, 20);
    ASSERT_EQ(curve.size(), 11u);
    for (std::size_t n = 1; n <= 11; ++n) {
        double recall = 0, scanned = 0;
        for (const auto& q : queries) {
            std::set<ItemId> truth;
            for (const auto& nb : knn_full_scan(q, f.coll, 20, Metric::euclidean)) truth.insert(nb.id);
            const auto r = f.index.probe(q, n);
            for (auto id : r.candidates) recall += truth.count(id);
            scanned += r.cost.candidates_scanned;
        }
        EXPECT_EQ(curve[n - 1].n_pairs, n);
        EXPECT_NEAR(curve[n - 1].recall, recall / 20 / queries.size(), 1e-12);
        EXPECT_NEAR(curve[n - 1].visited_fraction, scanned / queries.size() / f.coll.size(), 1e-12);
        if (n > 1) {
            EXPECT_GE(curve[n - 1].recall, curve[n - 2].recall);
            EXPECT_GE(curve[n - 1].visited_fraction, curve[n - 2].visited_fraction);
        }
    }
}

TEST(TrafficSkew, SharesAreCumulative) {
    const auto& f = fixture();
    const auto t = traffic_skew(f.index, held_out_queries(100), 11);
    EXPECT_EQ(t.total, 1100u);
    EXPECT_TRUE(std::is_sorted(t.counts.begin(), t.counts.end(),
                               [](const auto& a, const auto& b) { return a.second > b.second; }));
    EXPECT_LE(t.top_share(5), t.top_share(15));
    EXPECT_DOUBLE_EQ(t.top_share(t.counts.size()), 1.0);
}

TEST(StorageSkew, HottestShare) {
    const auto& f = fixture();
    const auto s = storage_skew(f.index);
    EXPECT_DOUBLE_EQ(s.mean_share, 1.0 / 256);
    EXPECT_DOUBLE_EQ(s.hottest_share,
                     static_cast<double>(f.index.peer_loads()[s.hottest_peer]) / f.index.stored_entries());
    EXPECT_GT(s.hottest_share, s.mean_share);
}

TEST(IndexFiles, RoundTripReproducesPlacement) {
    const auto dir = std::filesystem::temp_directory_path();
    const auto manifest = (dir / "p2pcbir_index.json").string();
    const auto items = (dir / "p2pcbir_index.bin").string();
    const auto& f = fixture();
    save_index(f.index, manifest, items);
    const auto back = load_index(manifest, items);
    EXPECT_EQ(back.stored_entries(), f.index.stored_entries());
    EXPECT_EQ(back.peer_loads(), f.index.peer_loads());
    const auto q = held_out_queries(1).front();
    EXPECT_EQ(back.query(q, 11, 10).neighbors, f.index.query(q, 11, 10).neighbors);
    std::remove(items.c_str());
    EXPECT_THROW(load_index(manifest, items), Error);
    std::remove(manifest.c_str());
}
