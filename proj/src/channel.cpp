#include "smc/channel.hpp"

#include <cmath>
#include <string>

namespace smc::channel {

namespace {
constexpr double kRowSumTol = 1e-12;
}

DiscreteChannel::DiscreteChannel(std::vector<std::vector<double>> confusion_matrix)
    : matrix_(std::move(confusion_matrix)) {
    const std::size_t n = matrix_.size();
    if (n == 0) throw ConfigError("DiscreteChannel: empty confusion matrix");
    for (std::size_t i = 0; i < n; ++i) {
        if (matrix_[i].size() != n)
            throw ConfigError("DiscreteChannel: confusion matrix must be square");
        double row_sum = 0.0;
        for (double p : matrix_[i]) {
            if (!(p >= 0.0 && p <= 1.0))
                throw ConfigError("DiscreteChannel: entries must be in [0, 1]");
            row_sum += p;
        }
        if (std::abs(row_sum - 1.0) > kRowSumTol)
            throw ConfigError("DiscreteChannel: row " + std::to_string(i) +
                              " sums to " + std::to_string(row_sum));
    }
}

DiscreteChannel DiscreteChannel::identity(std::size_t alphabet) {
    std::vector<std::vector<double>> m(alphabet, std::vector<double>(alphabet, 0.0));
    for (std::size_t i = 0; i < alphabet; ++i) m[i][i] = 1.0;
    return DiscreteChannel(std::move(m));
}

DiscreteChannel DiscreteChannel::symmetric(std::size_t alphabet, double p) {
    if (alphabet < 2) throw ConfigError("DiscreteChannel::symmetric: need >= 2 symbols");
    if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError("DiscreteChannel::symmetric: p must be in [0, 1]");
    const double off = p / static_cast<double>(alphabet - 1);
    std::vector<std::vector<double>> m(alphabet, std::vector<double>(alphabet, off));
    for (std::size_t i = 0; i < alphabet; ++i) m[i][i] = 1.0 - p;
    return DiscreteChannel(std::move(m));
}

DiscreteChannel DiscreteChannel::uniform(std::size_t alphabet) {
    const double p = 1.0 / static_cast<double>(alphabet);
    return DiscreteChannel(
        std::vector<std::vector<double>>(alphabet, std::vector<double>(alphabet, p)));
}

bool DiscreteChannel::is_identity() const {
    for (std::size_t i = 0; i < matrix_.size(); ++i)
        for (std::size_t j = 0; j < matrix_.size(); ++j)
            if (matrix_[i][j] != (i == j ? 1.0 : 0.0)) return false;
    return true;
}

std::size_t DiscreteChannel::transmit(std::size_t symbol, Rng& rng) const {
    if (symbol >= alphabet_size())
        throw DimensionError("DiscreteChannel::transmit: symbol " + std::to_string(symbol) +
                             " out of range for alphabet " + std::to_string(alphabet_size()));
    return rng.categorical(matrix_[symbol]);
}

VectorChannel VectorChannel::clean() {
    return VectorChannel();
}

VectorChannel VectorChannel::additive_gaussian(double sigma) {
    if (!(sigma >= 0.0)) throw ConfigError("VectorChannel: sigma must be >= 0");
    VectorChannel ch;
    ch.kind_ = VectorChannelKind::additive_gaussian;
    ch.sigma_ = sigma;
    return ch;
}

VectorChannel VectorChannel::quantize_then_dmc(std::size_t levels, DiscreteChannel per_symbol) {
    if (levels < 2) throw ConfigError("VectorChannel: quantizer needs >= 2 levels");
    if (per_symbol.alphabet_size() != levels)
        throw ConfigError("VectorChannel: per-symbol channel alphabet must equal levels");
    VectorChannel ch;
    ch.kind_ = VectorChannelKind::quantize_then_dmc;
    ch.levels_ = levels;
    ch.per_symbol_.push_back(std::move(per_symbol));
    return ch;
}

const DiscreteChannel& VectorChannel::per_symbol() const {
    if (per_symbol_.empty())
        throw ConfigError("VectorChannel: no per-symbol channel on this kind");
    return per_symbol_.front();
}

std::size_t quantize_level(double value, std::size_t levels) {
    const double clipped = value < -1.0 ? -1.0 : (value > 1.0 ? 1.0 : value);
    const double width = 2.0 / static_cast<double>(levels);
    auto level = static_cast<std::size_t>((clipped + 1.0) / width);
    return level >= levels ? levels - 1 : level;
}

double level_midpoint(std::size_t level, std::size_t levels) {
    const double width = 2.0 / static_cast<double>(levels);
    return -1.0 + (static_cast<double>(level) + 0.5) * width;
}

std::vector<double> VectorChannel::transmit(std::span<const double> v, Rng& rng) const {
    for (double x : v)
        if (!std::isfinite(x))
            throw DimensionError("VectorChannel::transmit: non-finite input");
    std::vector<double> out(v.begin(), v.end());
    switch (kind_) {
        case VectorChannelKind::clean:
            break;
        case VectorChannelKind::additive_gaussian:
            for (double& x : out) x += rng.gaussian(0.0, sigma_);
            break;
        case VectorChannelKind::quantize_then_dmc: {
            const auto& dmc = per_symbol_.front();
            for (double& x : out) {
                const std::size_t sent = quantize_level(x, levels_);
                const std::size_t received = dmc.transmit(sent, rng);
                x = level_midpoint(received, levels_);
            }
            break;
        }
    }
    return out;
}

}  // namespace smc::channel
