#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "smc/channel.hpp"
#include "smc/rng.hpp"

using namespace smc;
using channel::DiscreteChannel;
using channel::VectorChannel;

namespace {

// Upper critical values of the chi-square distribution at significance 0.001.
double chi2_critical_001(std::size_t df) {
    switch (df) {
        case 1: return 10.828;
        case 2: return 13.816;
        case 3: return 16.266;
        case 9: return 27.877;
        case 12: return 32.909;
        default: REQUIRE(false); return 0.0;
    }
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("rows must be stochastic") {
    CHECK_THROWS_AS(DiscreteChannel({{0.5, 0.4}, {0.5, 0.5}}), ConfigError);
    CHECK_THROWS_AS(DiscreteChannel({{1.5, -0.5}, {0.5, 0.5}}), ConfigError);
    CHECK_THROWS_AS(DiscreteChannel({{1.0}, {0.5, 0.5}}), ConfigError);
    CHECK_NOTHROW(DiscreteChannel({{0.5 + 1e-13, 0.5}, {0.0, 1.0}}));
}

TEST_CASE("identity channel reproduces every symbol") {
    const auto ch = DiscreteChannel::identity(5);
    Rng rng(1);
    for (std::size_t s = 0; s < 5; ++s)
        for (int i = 0; i < 100; ++i) CHECK(ch.transmit(s, rng) == s);
    CHECK(ch.is_identity());
    CHECK_THROWS_AS((void)ch.transmit(5, rng), DimensionError);
}

TEST_CASE("bsc(0.1) flips within the 3-sigma band") {
    const auto ch = DiscreteChannel::symmetric(2, 0.1);
    Rng rng(42);
    int flips = 0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i)
        if (ch.transmit(i % 2, rng) != static_cast<std::size_t>(i % 2)) ++flips;
    const double rate = static_cast<double>(flips) / trials;
    CHECK(rate >= 0.094);
    CHECK(rate <= 0.106);
}

TEST_CASE("uniform 4x4 output stays within total variation 0.01 of uniform") {
    const auto ch = DiscreteChannel::uniform(4);
    Rng rng(7);
    std::vector<int> counts(4, 0);
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) ++counts[ch.transmit(i % 4, rng)];
    double tv = 0.0;
    for (int c : counts) tv += std::abs(static_cast<double>(c) / trials - 0.25);
    CHECK(tv / 2.0 < 0.01);
}

TEST_CASE("empirical confusion frequencies pass a chi-square test") {
    const auto ch = DiscreteChannel({{0.7, 0.2, 0.1, 0.0},
                                     {0.1, 0.6, 0.2, 0.1},
                                     {0.25, 0.25, 0.25, 0.25},
                                     {0.0, 0.0, 0.5, 0.5}});
    Rng rng(99);
    const int per_row = 100000;
    double statistic = 0.0;
    std::size_t df = 0;
    for (std::size_t row = 0; row < 4; ++row) {
        std::vector<int> counts(4, 0);
        for (int i = 0; i < per_row; ++i) ++counts[ch.transmit(row, rng)];
        for (std::size_t j = 0; j < 4; ++j) {
            const double expected = ch.probability(row, j) * per_row;
            if (expected == 0.0) {
                CHECK(counts[j] == 0);
                continue;
            }
            const double diff = counts[j] - expected;
            statistic += diff * diff / expected;
            ++df;
        }
        --df;  // one constraint per row: counts sum to per_row
    }
    CHECK(df == 9);  // 3 + 4 + 4 + 2 supported cells minus one constraint per row
    CHECK(statistic < chi2_critical_001(df));
}

TEST_CASE("clean and zero-noise channels are identity maps") {
    Rng rng(3);
    const std::vector<double> v{0.3, -0.8, 1.7, 0.0};
    CHECK(VectorChannel::clean().transmit(v, rng) == v);
    CHECK(VectorChannel::additive_gaussian(0.0).transmit(v, rng) == v);
}

TEST_CASE("additive gaussian noise has the configured scale") {
    const auto ch = VectorChannel::additive_gaussian(0.25);
    Rng rng(11);
    const std::vector<double> v(1, 0.0);
    double sum = 0.0, sq = 0.0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
        const double y = ch.transmit(v, rng)[0];
        sum += y;
        sq += y * y;
    }
    const double mean = sum / trials;
    const double sd = std::sqrt(sq / trials - mean * mean);
    CHECK(std::abs(mean) < 0.005);
    CHECK(sd == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("quantizer maps inputs to the documented level midpoints") {
    const auto ch = VectorChannel::quantize_then_dmc(4, DiscreteChannel::identity(4));
    Rng rng(5);
    const auto out = ch.transmit(std::vector<double>{-1.0, -0.2, 0.9}, rng);
    CHECK(out[0] == doctest::Approx(-0.75).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(out[2] == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("quantizer clips out-of-range inputs into the boundary levels") {
    const auto ch = VectorChannel::quantize_then_dmc(4, DiscreteChannel::identity(4));
    Rng rng(5);
    const auto out = ch.transmit(std::vector<double>{-3.0, 3.0}, rng);
    CHECK(out[0] == doctest::Approx(-0.75).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("quantize levels partition the clipped range uniformly") {
    for (std::size_t levels : {2, 4, 16}) {
        for (std::size_t level = 0; level < levels; ++level) {
            const double mid = channel::level_midpoint(level, levels);
            CHECK(channel::quantize_level(mid, levels) == level);
            CHECK(mid > -1.0);
            CHECK(mid < 1.0);
        }
        // Midpoints are evenly spaced by 2/levels.
        const double step = 2.0 / static_cast<double>(levels);
        for (std::size_t level = 0; level + 1 < levels; ++level)
            CHECK(channel::level_midpoint(level + 1, levels) -
                      channel::level_midpoint(level, levels) ==
                  doctest::Approx(step).epsilon(1e-12));
    }
}

TEST_CASE("non-finite vector entries are rejected") {
    Rng rng(5);
    const auto ch = VectorChannel::additive_gaussian(0.1);
    CHECK_THROWS_AS(
        (void)ch.transmit(std::vector<double>{0.0, std::numeric_limits<double>::infinity()},
                          rng),
        DimensionError);
}

TEST_CASE("noise is uncorrelated across coordinates") {
    const auto ch = VectorChannel::additive_gaussian(1.0);
    Rng rng(13);
    const std::vector<double> zero(3, 0.0);
    const int trials = 100000;
    std::vector<double> mean(3, 0.0);
    double c01 = 0.0, c02 = 0.0, c12 = 0.0, v0 = 0.0, v1 = 0.0, v2 = 0.0;
    std::vector<std::vector<double>> noise(trials);
    for (int i = 0; i < trials; ++i) {
        noise[i] = ch.transmit(zero, rng);
        for (int k = 0; k < 3; ++k) mean[k] += noise[i][k] / trials;
    }
    for (int i = 0; i < trials; ++i) {
        const double a = noise[i][0] - mean[0];
        const double b = noise[i][1] - mean[1];
        const double c = noise[i][2] - mean[2];
        c01 += a * b;
        c02 += a * c;
        c12 += b * c;
        v0 += a * a;
        v1 += b * b;
        v2 += c * c;
    }
    CHECK(std::abs(c01 / std::sqrt(v0 * v1)) < 0.02);
    CHECK(std::abs(c02 / std::sqrt(v0 * v2)) < 0.02);
    CHECK(std::abs(c12 / std::sqrt(v1 * v2)) < 0.02);
}

TEST_CASE("per-symbol dmc applies independently per coordinate") {
    // With a fully random per-symbol channel the joint distribution over two
    // coordinates factorizes; check product form on a 2-level quantizer.
    const auto ch = VectorChannel::quantize_then_dmc(2, DiscreteChannel::symmetric(2, 0.3));
    Rng rng(17);
    const std::vector<double> v{-0.5, -0.5};
    int hi0 = 0, hi1 = 0, hiboth = 0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
        const auto out = ch.transmit(v, rng);
        const bool b0 = out[0] > 0.0, b1 = out[1] > 0.0;
        hi0 += b0;
        hi1 += b1;
        hiboth += b0 && b1;
    }
    const double p0 = static_cast<double>(hi0) / trials;
    const double p1 = static_cast<double>(hi1) / trials;
    const double pb = static_cast<double>(hiboth) / trials;
    CHECK(p0 == doctest::Approx(0.3).epsilon(0.05));
    CHECK(pb == doctest::Approx(p0 * p1).epsilon(0.1));
}

}  // TEST_SUITE
