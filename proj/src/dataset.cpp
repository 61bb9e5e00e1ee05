#include "smc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace smc::data {

namespace {

constexpr std::size_t kGrid = 8;
constexpr std::size_t kClasses = 10;

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

void assign_split(Dataset& ds, double heldout_fraction, Rng& rng) {
    if (heldout_fraction < 0.0 || heldout_fraction > 1.0)
        throw ConfigError("heldout fraction must be in [0, 1]");
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.index(i)]);
    const auto heldout = static_cast<std::size_t>(
        std::floor(heldout_fraction * static_cast<double>(order.size())));
    ds.heldout_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(heldout));
    ds.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(heldout), order.end());
    std::sort(ds.heldout_indices.begin(), ds.heldout_indices.end());
    std::sort(ds.train_indices.begin(), ds.train_indices.end());
}

std::vector<double> make_bar_sample(std::size_t cls, Rng& rng) {
    // Classes 0-4: horizontal bar at a fixed row. Classes 5-9: vertical bar
    // at a fixed column. Rows/columns chosen so no two classes share pixels.
    static constexpr std::size_t kLines[5] = {0, 2, 4, 5, 7};
    std::vector<double> px(kGrid * kGrid, 0.0);
    const double amplitude = rng.uniform(0.75, 1.0);
    if (cls < 5) {
        const std::size_t row = kLines[cls];
        for (std::size_t c = 0; c < kGrid; ++c) px[row * kGrid + c] = amplitude;
    } else {
        const std::size_t col = kLines[cls - 5];
        for (std::size_t r = 0; r < kGrid; ++r) px[r * kGrid + col] = amplitude;
    }
    for (double& v : px) v = clamp01(v + rng.gaussian(0.0, 0.05));
    return px;
}

std::vector<double> make_blob_sample(std::size_t cls, Rng& rng) {
    // Classes 0-8: narrow bump on a 3x3 center grid. Class 9: wide central
    // bump distinguished by width rather than position.
    static constexpr double kCenters[3] = {1.5, 4.0, 6.5};
    double cx, cy, sigma;
    if (cls < 9) {
        cx = kCenters[cls % 3];
        cy = kCenters[cls / 3];
        sigma = 0.9;
    } else {
        cx = 4.0;
        cy = 4.0;
        sigma = 2.2;
    }
    cx += rng.uniform(-0.4, 0.4);
    cy += rng.uniform(-0.4, 0.4);
    const double amplitude = rng.uniform(0.7, 1.0);
    std::vector<double> px(kGrid * kGrid, 0.0);
    for (std::size_t r = 0; r < kGrid; ++r) {
        for (std::size_t c = 0; c < kGrid; ++c) {
            const double dx = static_cast<double>(c) - cx;
            const double dy = static_cast<double>(r) - cy;
            const double v = amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            px[r * kGrid + c] = clamp01(v + rng.gaussian(0.0, 0.02));
        }
    }
    return px;
}

std::uint32_t read_be_u32(std::span<const std::uint8_t> bytes, std::size_t offset,
                          const char* field) {
    if (offset + 4 > bytes.size())
        throw SmcParseError(std::string("idx: truncated ") + field);
    return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
           (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[offset + 3]);
}

}  // namespace

void Dataset::validate() const {
    if (samples.size() != labels.size())
        throw DimensionError("dataset: sample/label count mismatch");
    for (const auto& s : samples)
        if (s.size() != dim()) throw DimensionError("dataset: sample dimensions not uniform");
    for (std::size_t label : labels)
        if (label >= n_classes) throw DimensionError("dataset: label out of class range");
    std::vector<bool> seen(size(), false);
    for (std::size_t i : train_indices) {
        if (i >= size() || seen[i]) throw DimensionError("dataset: bad train split");
        seen[i] = true;
    }
    for (std::size_t i : heldout_indices) {
        if (i >= size() || seen[i]) throw DimensionError("dataset: splits overlap");
        seen[i] = true;
    }
    for (std::size_t i = 0; i < size(); ++i)
        if (!seen[i]) throw DimensionError("dataset: splits not exhaustive");
}

const char* corpus_name(Corpus corpus) { return corpus == Corpus::bars ? "bars" : "blobs"; }

Dataset make_synthetic(Corpus corpus, std::size_t n_per_class, std::uint64_t seed,
                       double heldout_fraction) {
    if (n_per_class == 0) throw ConfigError("make_synthetic: n_per_class must be >= 1");
    Rng rng(seed);
    Dataset ds;
    ds.n_classes = kClasses;
    ds.samples.reserve(kClasses * n_per_class);
    ds.labels.reserve(kClasses * n_per_class);
    for (std::size_t cls = 0; cls < kClasses; ++cls) {
        for (std::size_t i = 0; i < n_per_class; ++i) {
            ds.samples.push_back(corpus == Corpus::bars ? make_bar_sample(cls, rng)
                                                        : make_blob_sample(cls, rng));
            ds.labels.push_back(cls);
        }
    }
    Rng split_rng = rng.fork(0x73706c69);
    assign_split(ds, heldout_fraction, split_rng);
    ds.validate();
    return ds;
}

Dataset parse_idx(std::span<const std::uint8_t> image_bytes,
                  std::span<const std::uint8_t> label_bytes, double heldout_fraction,
                  std::uint64_t split_seed) {
    const std::uint32_t image_magic = read_be_u32(image_bytes, 0, "image magic");
    if (image_magic != 0x00000803)
        throw SmcParseError("idx: bad image magic");
    const std::uint32_t n_images = read_be_u32(image_bytes, 4, "image count");
    const std::uint32_t rows = read_be_u32(image_bytes, 8, "image rows");
    const std::uint32_t cols = read_be_u32(image_bytes, 12, "image cols");
    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    if (image_bytes.size() != 16 + static_cast<std::size_t>(n_images) * pixels)
        throw SmcParseError("idx: image data truncated or oversized");

    const std::uint32_t label_magic = read_be_u32(label_bytes, 0, "label magic");
    if (label_magic != 0x00000801)
        throw SmcParseError("idx: bad label magic");
    const std::uint32_t n_labels = read_be_u32(label_bytes, 4, "label count");
    if (label_bytes.size() != 8 + static_cast<std::size_t>(n_labels))
        throw SmcParseError("idx: label data truncated or oversized");
    if (n_images != n_labels)
        throw SmcParseError("idx: image/label count mismatch");

    Dataset ds;
    ds.samples.reserve(n_images);
    ds.labels.reserve(n_images);
    std::size_t max_label = 0;
    for (std::size_t i = 0; i < n_images; ++i) {
        std::vector<double> px(pixels);
        for (std::size_t p = 0; p < pixels; ++p)
            px[p] = static_cast<double>(image_bytes[16 + i * pixels + p]) / 255.0;
        ds.samples.push_back(std::move(px));
        const std::size_t label = label_bytes[8 + i];
        max_label = std::max(max_label, label);
        ds.labels.push_back(label);
    }
    ds.n_classes = ds.samples.empty() ? 0 : max_label + 1;
    Rng split_rng(split_seed);
    assign_split(ds, heldout_fraction, split_rng);
    ds.validate();
    return ds;
}

std::size_t LinearProbe::predict(std::span<const double> features) const {
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < weights.size(); ++c) {
        if (features.size() != weights[c].size())
            throw DimensionError("probe: feature dimension mismatch");
        double score = bias[c];
        for (std::size_t j = 0; j < features.size(); ++j) score += weights[c][j] * features[j];
        if (score > best_score) {
            best_score = score;
            best = c;
        }
    }
    return best;
}

LinearProbe train_linear_probe(const std::vector<std::vector<double>>& features,
                               const std::vector<std::size_t>& labels, std::size_t n_classes,
                               std::size_t iterations, double lr) {
    if (features.size() != labels.size())
        throw DimensionError("probe: feature/label count mismatch");
    if (n_classes == 0) throw ConfigError("probe: n_classes must be >= 1");
    const std::size_t dim = features.empty() ? 0 : features.front().size();
    LinearProbe probe;
    probe.weights.assign(n_classes, std::vector<double>(dim, 0.0));
    probe.bias.assign(n_classes, 0.0);
    if (features.empty()) return probe;

    const double inv_n = 1.0 / static_cast<double>(features.size());
    std::vector<double> logits(n_classes);
    std::vector<std::vector<double>> gw(n_classes, std::vector<double>(dim));
    std::vector<double> gb(n_classes);
    for (std::size_t iter = 0; iter < iterations; ++iter) {
        for (auto& row : gw) std::fill(row.begin(), row.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        for (std::size_t i = 0; i < features.size(); ++i) {
            const auto& x = features[i];
            if (x.size() != dim) throw DimensionError("probe: feature dimensions not uniform");
            double max_logit = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < n_classes; ++c) {
                logits[c] = probe.bias[c];
                for (std::size_t j = 0; j < dim; ++j) logits[c] += probe.weights[c][j] * x[j];
                max_logit = std::max(max_logit, logits[c]);
            }
            double z = 0.0;
            for (std::size_t c = 0; c < n_classes; ++c) {
                logits[c] = std::exp(logits[c] - max_logit);
                z += logits[c];
            }
            for (std::size_t c = 0; c < n_classes; ++c) {
                const double delta = (logits[c] / z - (labels[i] == c ? 1.0 : 0.0)) * inv_n;
                gb[c] += delta;
                for (std::size_t j = 0; j < dim; ++j) gw[c][j] += delta * x[j];
            }
        }
        for (std::size_t c = 0; c < n_classes; ++c) {
            probe.bias[c] -= lr * gb[c];
            for (std::size_t j = 0; j < dim; ++j) probe.weights[c][j] -= lr * gw[c][j];
        }
    }
    return probe;
}

double probe_accuracy(const LinearProbe& probe, const std::vector<std::vector<double>>& features,
                      const std::vector<std::size_t>& labels) {
    if (features.size() != labels.size())
        throw DimensionError("probe: feature/label count mismatch");
    if (features.empty()) throw ConfigError("probe: empty evaluation set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < features.size(); ++i)
        if (probe.predict(features[i]) == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(features.size());
}

}  // namespace smc::data
