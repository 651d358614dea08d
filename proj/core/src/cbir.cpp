#include "p2pcbir/cbir.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "p2pcbir/error.hpp"
#include "p2pcbir/rng.hpp"

namespace p2pcbir {

Histogram::Histogram(std::span<const double> values) {
    if (values.size() != kHistogramBins)
        throw Error("histogram must have " + std::to_string(kHistogramBins) + " bins, got " +
                    std::to_string(values.size()));
    for (std::size_t i = 0; i < kHistogramBins; ++i) {
        if (!(values[i] >= 0.0) || !std::isfinite(values[i])) throw Error("histogram bins must be non-negative");
        bins_[i] = values[i];
    }
}

Histogram Histogram::one_hot(std::size_t bin) {
    if (bin >= kHistogramBins) throw Error("bin out of range");
    Histogram h;
    h.bins_[bin] = 1.0;
    return h;
}

double Histogram::sum() const {
    double s = 0;
    for (double b : bins_) s += b;
    return s;
}

std::size_t color_bin(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
    const double max = std::max({r, g, b});
    const double min = std::min({r, g, b});
    const double delta = max - min;
    const double value = max;
    const double saturation = max > 0 ? delta / max : 0.0;

    constexpr std::size_t kChromatic = kHueBins * kSatBins * kValBins;
    if (saturation < kGreySaturation || value < kGreyValue) {
        const auto level = std::min<std::size_t>(static_cast<std::size_t>(value * kGreyBins), kGreyBins - 1);
        return kChromatic + level;
    }

    double hue;  // degrees
    if (max == r)
        hue = 60.0 * std::fmod((g - b) / delta, 6.0);
    else if (max == g)
        hue = 60.0 * ((b - r) / delta + 2.0);
    else
        hue = 60.0 * ((r - g) / delta + 4.0);
    if (hue < 0) hue += 360.0;

    auto h = static_cast<std::size_t>(hue / (360.0 / kHueBins));
    if (h >= kHueBins) h = 0;  // 360 wraps
    const auto s = std::min<std::size_t>(static_cast<std::size_t>(saturation * kSatBins), kSatBins - 1);
    const auto v = std::min<std::size_t>(static_cast<std::size_t>(value * kValBins), kValBins - 1);
    return (h * kSatBins + s) * kValBins + v;
}

Histogram extract_histogram(const RgbImage& image) {
    const std::size_t n = image.pixel_count();
    if (n == 0) throw Error("empty input");
    if (image.pixels.size() != 3 * n) throw Error("pixel buffer does not match image size");
    std::array<std::uint64_t, kHistogramBins> counts{};
    for (std::size_t i = 0; i < n; ++i)
        ++counts[color_bin(image.pixels[3 * i], image.pixels[3 * i + 1], image.pixels[3 * i + 2])];
    HistogramBins bins;
    for (std::size_t i = 0; i < kHistogramBins; ++i) bins[i] = static_cast<double>(counts[i]) / n;
    return Histogram(bins);
}

namespace {

class PpmReader {
public:
    explicit PpmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::uint32_t number() {
        skip_space_and_comments();
        std::uint64_t value = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_++] - '0');
            if (++digits > 9) throw Error("ppm: header value too large");
        }
        if (digits == 0) throw Error("ppm: malformed header");
        return static_cast<std::uint32_t>(value);
    }

    std::size_t pos_ = 0;
    std::span<const std::uint8_t> bytes_;
};

}  // namespace

RgbImage parse_ppm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw Error("ppm: not a binary P6 file");
    PpmReader rd(bytes);
    rd.pos_ = 2;
    RgbImage img;
    img.width = rd.number();
    img.height = rd.number();
    const auto maxval = rd.number();
    if (maxval != 255) throw Error("ppm: only 8-bit (maxval 255) supported");
    if (rd.pos_ >= bytes.size() || !std::isspace(bytes[rd.pos_])) throw Error("ppm: malformed header");
    ++rd.pos_;
    const std::size_t need = img.pixel_count() * 3;
    if (bytes.size() - rd.pos_ < need) throw Error("ppm: truncated pixel data");
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(rd.pos_),
                      bytes.begin() + static_cast<std::ptrdiff_t>(rd.pos_ + need));
    return img;
}

RgbImage read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_ppm(bytes);
}

void write_ppm(const RgbImage& image, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
    if (!out) throw Error("write failed: " + path);
}

double histogram_intersection(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error("histogram length mismatch");
    double sigma = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sigma += std::min(x[i], y[i]);
    return sigma;
}

double histogram_intersection(const Histogram& x, const Histogram& y) {
    return histogram_intersection(x.view(), y.view());
}

double euclidean_distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error("histogram length mismatch");
    double acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        acc += d * d;  // 2 flops per component: 332 for 166 bins
    }
    return std::sqrt(acc);
}

double euclidean_distance(const Histogram& x, const Histogram& y) { return euclidean_distance(x.view(), y.view()); }

double squared_euclidean(const Histogram& x, const Histogram& y) {
    double acc = 0;
    for (std::size_t i = 0; i < kHistogramBins; ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

Metric parse_metric(const std::string& name) {
    if (name == "euclidean") return Metric::euclidean;
    if (name == "histogram-intersection" || name == "hi") return Metric::histogram_intersection;
    throw Error("unknown metric: " + name);
}

std::string to_string(Metric metric) {
    return metric == Metric::euclidean ? "euclidean" : "histogram-intersection";
}

double distance(const Histogram& x, const Histogram& y, Metric metric) {
    switch (metric) {
    case Metric::euclidean:
        return euclidean_distance(x, y);
    case Metric::histogram_intersection:
        return 1.0 - histogram_intersection(x, y);
    }
    return 0;
}

Collection::Collection(std::vector<Item> items) : items_(std::move(items)) {
    std::unordered_set<ItemId> seen;
    seen.reserve(items_.size());
    for (const auto& item : items_)
        if (!seen.insert(item.id).second) throw Error("duplicate item id " + std::to_string(item.id));
}

NeighborList knn_full_scan(const Histogram& query, const Collection& coll, std::size_t k, Metric metric) {
    if (k == 0) throw Error("k must be at least 1");
    NeighborList all;
    all.reserve(coll.size());
    for (const auto& item : coll) all.push_back({item.id, distance(query, item.vector, metric)});
    const std::size_t keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), neighbor_less);
    all.resize(keep);
    return all;
}

Collection synth_collection(std::size_t n, std::size_t n_clusters, double spread, std::uint64_t seed) {
    if (n_clusters == 0) throw Error("n_clusters must be at least 1");
    if (!(spread >= 0)) throw Error("spread must be non-negative");
    Rng rng(seed);

    std::vector<HistogramBins> centers(n_clusters);
    for (auto& c : centers) {
        double total = 0;
        for (auto& b : c) {
            b = -std::log1p(-rng.uniform());  // Exp(1): normalized gives Dirichlet(1,...,1)
            total += b;
        }
        for (auto& b : c) b /= total;
    }

    constexpr double kMeanBin = 1.0 / kHistogramBins;
    std::vector<Item> items;
    items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = centers[rng.below(n_clusters)];
        HistogramBins v;
        double total = 0;
        for (std::size_t b = 0; b < kHistogramBins; ++b) {
            const double noise = spread * kMeanBin * (2.0 * rng.uniform() - 1.0);
            v[b] = std::max(0.0, c[b] + noise);
            total += v[b];
        }
        if (total > 0)
            for (auto& b : v) b /= total;
        items.push_back({static_cast<ItemId>(i), Histogram(v)});
    }
    return Collection(std::move(items));
}

std::string histogram_to_json(const Histogram& h) {
    return nlohmann::json(std::vector<double>(h.bins().begin(), h.bins().end())).dump();
}

Histogram histogram_from_json(const std::string& text) {
    std::vector<double> values;
    try {
        const auto j = nlohmann::json::parse(text);
        if (!j.is_array()) throw Error("histogram json must be an array");
        values = j.get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("histogram json: ") + e.what());
    }
    return Histogram(values);
}

}  // namespace p2pcbir
