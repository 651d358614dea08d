#pragma once

// Color-histogram features and exact nearest-neighbour search.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace p2pcbir {

inline constexpr std::size_t kHueBins = 18;
inline constexpr std::size_t kSatBins = 3;
inline constexpr std::size_t kValBins = 3;
inline constexpr std::size_t kGreyBins = 4;
inline constexpr std::size_t kHistogramBins = kHueBins * kSatBins * kValBins + kGreyBins;  // 166

// Achromatic classification thresholds on saturation and value in [0, 1].
inline constexpr double kGreySaturation = 0.05;
inline constexpr double kGreyValue = 0.08;

using HistogramBins = std::array<double, kHistogramBins>;

/// 166-bin HSV color histogram. Bins are non-negative; extracted histograms
/// sum to one.
class Histogram {
public:
    Histogram() { bins_.fill(0.0); }
    /// Throws Error unless values has 166 non-negative finite entries.
    explicit Histogram(std::span<const double> values);

    static Histogram one_hot(std::size_t bin);

    const HistogramBins& bins() const { return bins_; }
    double operator[](std::size_t i) const { return bins_[i]; }
    std::span<const double> view() const { return bins_; }
    double sum() const;

    bool operator==(const Histogram&) const = default;

private:
    HistogramBins bins_;
};

struct RgbImage {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major RGB triples

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

/// Bin index of one 8-bit RGB pixel. Chromatic bins are laid out
/// hue-major: ((h * 3) + s) * 3 + v; grey bins follow at 162..165.
std::size_t color_bin(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Throws Error("empty input") for images without pixels.
Histogram extract_histogram(const RgbImage& image);

/// Binary PPM (P6, maxval 255).
RgbImage read_ppm(const std::string& path);
RgbImage parse_ppm(std::span<const std::uint8_t> bytes);
void write_ppm(const RgbImage& image, const std::string& path);

/// Sum of bin-wise minima. Throws Error on length mismatch.
double histogram_intersection(std::span<const double> x, std::span<const double> y);
double histogram_intersection(const Histogram& x, const Histogram& y);

/// Euclidean distance. Throws Error on length mismatch.
double euclidean_distance(std::span<const double> x, std::span<const double> y);
double euclidean_distance(const Histogram& x, const Histogram& y);
double squared_euclidean(const Histogram& x, const Histogram& y);

enum class Metric { euclidean, histogram_intersection };

Metric parse_metric(const std::string& name);
std::string to_string(Metric metric);

/// Distance under metric; histogram intersection is reported as 1 - sigma.
double distance(const Histogram& x, const Histogram& y, Metric metric);

using ItemId = std::uint64_t;

struct Item {
    ItemId id = 0;
    Histogram vector;
};

/// Items with unique ids, immutable once built.
class Collection {
public:
    Collection() = default;
    /// Throws Error on duplicate ids.
    explicit Collection(std::vector<Item> items);

    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    const Item& operator[](std::size_t i) const { return items_[i]; }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

private:
    std::vector<Item> items_;
};

struct Neighbor {
    ItemId id = 0;
    double distance = 0;

    bool operator==(const Neighbor&) const = default;
};

using NeighborList = std::vector<Neighbor>;

/// Orders by distance, then id.
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
}

/// Exact k nearest neighbours by full scan. Throws Error when k == 0.
NeighborList knn_full_scan(const Histogram& query, const Collection& coll, std::size_t k, Metric metric);

/// n vectors around n_clusters centers drawn uniformly on the simplex. Each
/// item picks a center uniformly and adds per-bin noise uniform in
/// [-spread, spread] times the mean bin mass (1/166), clamped at zero and
/// renormalized. Ids are 0..n-1.
Collection synth_collection(std::size_t n, std::size_t n_clusters, double spread, std::uint64_t seed);

std::string histogram_to_json(const Histogram& h);
Histogram histogram_from_json(const std::string& text);

}  // namespace p2pcbir
