#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "smc/errors.hpp"
#include "smc/rng.hpp"

namespace smc::data {

// Train/heldout indices are disjoint and together cover every sample.
struct Dataset {
    std::vector<std::vector<double>> samples;
    std::vector<std::size_t> labels;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> heldout_indices;
    std::size_t n_classes = 0;

    std::size_t size() const { return samples.size(); }
    std::size_t dim() const { return samples.empty() ? 0 : samples.front().size(); }
    void validate() const;
};

enum class Corpus { bars, blobs };

const char* corpus_name(Corpus corpus);

// 10-class, class-balanced 8x8 corpora. Bars: oriented line segments whose
// class pixels are disjoint, so raw pixels are linearly separable. Blobs:
// Gaussian bumps varying in center and width.
Dataset make_synthetic(Corpus corpus, std::size_t n_per_class, std::uint64_t seed,
                       double heldout_fraction = 0.25);

// IDX (big-endian) image + label files; pixels scaled to [0, 1] as value/255.
Dataset parse_idx(std::span<const std::uint8_t> image_bytes,
                  std::span<const std::uint8_t> label_bytes, double heldout_fraction = 0.25,
                  std::uint64_t split_seed = 0);

struct LinearProbe {
    std::vector<std::vector<double>> weights;  // [class][feature]
    std::vector<double> bias;                  // [class]

    std::size_t n_classes() const { return weights.size(); }
    std::size_t predict(std::span<const double> features) const;
};

// Multinomial logistic regression: zero init, full-batch gradient descent,
// fixed iteration count. Fully deterministic for fixed inputs.
LinearProbe train_linear_probe(const std::vector<std::vector<double>>& features,
                               const std::vector<std::size_t>& labels, std::size_t n_classes,
                               std::size_t iterations = 300, double lr = 0.5);

double probe_accuracy(const LinearProbe& probe, const std::vector<std::vector<double>>& features,
                      const std::vector<std::size_t>& labels);

}  // namespace smc::data
