#pragma once

#include <cstddef>
#include <vector>

#include "smc/errors.hpp"
#include "smc/rng.hpp"

namespace smc::channel {

// Discrete memoryless channel over a finite alphabet. Entry [i][j] is the
// probability that symbol i is received as j; rows must sum to 1 within 1e-12.
class DiscreteChannel {
public:
    explicit DiscreteChannel(std::vector<std::vector<double>> confusion_matrix);

    static DiscreteChannel identity(std::size_t alphabet);
    // Symmetric channel: correct with probability 1-p, the remaining mass
    // spread uniformly over the other symbols. bsc(p) == symmetric(2, p).
    static DiscreteChannel symmetric(std::size_t alphabet, double p);
    static DiscreteChannel uniform(std::size_t alphabet);

    std::size_t alphabet_size() const { return matrix_.size(); }
    const std::vector<std::vector<double>>& matrix() const { return matrix_; }
    double probability(std::size_t sent, std::size_t received) const {
        return matrix_[sent][received];
    }
    bool is_identity() const;

    std::size_t transmit(std::size_t symbol, Rng& rng) const;

private:
    std::vector<std::vector<double>> matrix_;
};

enum class VectorChannelKind {
    clean,
    additive_gaussian,
    quantize_then_dmc,
};

// Channel for real-valued SR vectors. quantize_then_dmc clips each
// coordinate to [-1, 1], maps it to one of `levels` uniform cells, sends the
// cell index through the per-symbol discrete channel, and returns the
// received cell's midpoint.
class VectorChannel {
public:
    static VectorChannel clean();
    static VectorChannel additive_gaussian(double sigma);
    static VectorChannel quantize_then_dmc(std::size_t levels, DiscreteChannel per_symbol);

    VectorChannelKind kind() const { return kind_; }
    double sigma() const { return sigma_; }
    std::size_t levels() const { return levels_; }
    const DiscreteChannel& per_symbol() const;
    bool is_clean() const { return kind_ == VectorChannelKind::clean; }

    std::vector<double> transmit(std::span<const double> v, Rng& rng) const;

private:
    VectorChannel() = default;

    VectorChannelKind kind_ = VectorChannelKind::clean;
    double sigma_ = 0.0;
    std::size_t levels_ = 0;
    std::vector<DiscreteChannel> per_symbol_;  // empty or one element
};

// Uniform quantizer over the clipped range [-1, 1].
std::size_t quantize_level(double value, std::size_t levels);
double level_midpoint(std::size_t level, std::size_t levels);

}  // namespace smc::channel
