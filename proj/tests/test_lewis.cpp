#include <doctest.h>

#include <cmath>
#include <vector>

#include "smc/lewis.hpp"

using namespace smc;
using lewis::EquilibriumClass;
using lewis::PolicyPair;
using lewis::SignalingGame;

namespace {

// Brute-force oracle over every pure profile of a small game.
struct PureOracle {
    double max_payoff = 0.0;
    std::vector<std::size_t> best_sender;
    std::vector<std::size_t> best_receiver;
};

void enumerate_maps(std::size_t rows, std::size_t choices,
                    std::vector<std::vector<std::size_t>>& out) {
    std::vector<std::size_t> map(rows, 0);
    while (true) {
        out.push_back(map);
        std::size_t i = 0;
        while (i < rows && ++map[i] == choices) map[i++] = 0;
        if (i == rows) break;
    }
}

PureOracle brute_force(const SignalingGame& game) {
    std::vector<std::vector<std::size_t>> senders, receivers;
    enumerate_maps(game.n_types, game.n_signals, senders);
    enumerate_maps(game.n_signals, game.n_responses, receivers);
    PureOracle oracle;
    oracle.max_payoff = -1.0;
    for (const auto& s : senders) {
        for (const auto& r : receivers) {
            const double value = lewis::expected_payoff_pure(game, s, r);
            if (value > oracle.max_payoff) {
                oracle.max_payoff = value;
                oracle.best_sender = s;
                oracle.best_receiver = r;
            }
        }
    }
    return oracle;
}

// Independent Nash verdict: try every unilateral row change of a pure profile.
bool oracle_is_nash(const SignalingGame& game, const std::vector<std::size_t>& sender,
                    const std::vector<std::size_t>& receiver, double tol = 1e-9) {
    const double base = lewis::expected_payoff_pure(game, sender, receiver);
    for (std::size_t t = 0; t < game.n_types; ++t) {
        for (std::size_t s = 0; s < game.n_signals; ++s) {
            if (s == sender[t]) continue;
            auto changed = sender;
            changed[t] = s;
            if (lewis::expected_payoff_pure(game, changed, receiver) > base + tol) return false;
        }
    }
    for (std::size_t s = 0; s < game.n_signals; ++s) {
        for (std::size_t r = 0; r < game.n_responses; ++r) {
            if (r == receiver[s]) continue;
            auto changed = receiver;
            changed[s] = r;
            if (lewis::expected_payoff_pure(game, sender, changed) > base + tol) return false;
        }
    }
    return true;
}

}  // namespace

TEST_SUITE("lewis") {

TEST_CASE("separating policies earn payoff 1 every round on a clean channel") {
    const auto game = SignalingGame::standard_clean(2, 2, 2);
    const auto policies = PolicyPair::pure(game, {0, 1}, {0, 1});
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const auto t = lewis::play_round(game, policies, rng);
        CHECK(t.payoff == 1.0);
        CHECK(t.response == t.type);
        CHECK(t.received_signal == t.sent_signal);
    }
}

TEST_CASE("separating policies over bsc(0.1) average payoff 0.9") {
    const auto game =
        SignalingGame::standard(2, 2, 2, channel::DiscreteChannel::symmetric(2, 0.1));
    const auto policies = PolicyPair::pure(game, {0, 1}, {0, 1});
    CHECK(lewis::expected_payoff(game, policies) == doctest::Approx(0.9).epsilon(1e-12));
    Rng rng(2);
    double total = 0.0;
    const int rounds = 100000;
    for (int i = 0; i < rounds; ++i) total += lewis::play_round(game, policies, rng).payoff;
    CHECK(total / rounds == doctest::Approx(0.9).epsilon(0.012));
}

TEST_CASE("uniform policies on the 2x2x2 game earn 0.5") {
    const auto game = SignalingGame::standard_clean(2, 2, 2);
    const auto policies = PolicyPair::uniform(game);
    CHECK(lewis::expected_payoff(game, policies) == doctest::Approx(0.5).epsilon(1e-12));
    Rng rng(3);
    double total = 0.0;
    const int rounds = 100000;
    for (int i = 0; i < rounds; ++i) total += lewis::play_round(game, policies, rng).payoff;
    CHECK(total / rounds == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("reinforce_update changes exactly the chosen cells") {
    const auto game = SignalingGame::standard_clean(2, 2, 2);
    auto policies = PolicyPair::uniform(game);

    lewis::Transcript zero{0, 1, 1, 1, 0.0};
    const auto unchanged = lewis::reinforce_update(policies, zero, 1.0);
    CHECK(unchanged.sender == policies.sender);
    CHECK(unchanged.receiver == policies.receiver);

    lewis::Transcript hit{0, 1, 1, 0, 1.0};
    const auto updated = lewis::reinforce_update(policies, hit, 1.0);
    CHECK(updated.sender[0][1] == 2.0);
    CHECK(updated.receiver[1][0] == 2.0);
    CHECK(updated.sender[0][0] == 1.0);
    CHECK(updated.sender[1] == policies.sender[1]);
    CHECK(updated.receiver[0] == policies.receiver[0]);

    CHECK_THROWS_AS((void)lewis::reinforce_update(policies, hit, -1.0), ConfigError);
}

TEST_CASE("2x2x2 training reaches a separating equilibrium in at least 18 of 20 seeds") {
    const auto game = SignalingGame::standard_clean(2, 2, 2);
    lewis::TrainConfig config;
    int separating = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const auto [policies, report] = lewis::train_to_equilibrium(game, config, rng);
        if (report.converged && report.is_nash &&
            report.classification == EquilibriumClass::separating) {
            CHECK(report.greedy_expected_payoff == doctest::Approx(1.0).epsilon(1e-12));
            ++separating;
        }
    }
    CHECK(separating >= 18);
}

TEST_CASE("1-type games converge immediately and are separating") {
    const auto game = SignalingGame::standard_clean(1, 2, 2);
    lewis::TrainConfig config;
    config.max_rounds = 5000;
    config.window = 100;
    Rng rng(4);
    const auto [policies, report] = lewis::train_to_equilibrium(game, config, rng);
    CHECK(report.converged);
    CHECK(report.classification == EquilibriumClass::separating);
    CHECK(report.greedy_expected_payoff == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("3 types over 2 signals converge to partial pooling at exactly 2/3") {
    // Brute force confirms 2/3 is the pure-profile optimum of this game.
    const auto game = SignalingGame::standard_clean(3, 2, 3);
    CHECK(brute_force(game).max_payoff == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    lewis::TrainConfig config;
    int pooled = 0;
    int converged = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        const auto [policies, report] = lewis::train_to_equilibrium(game, config, rng);
        if (!report.converged) continue;
        ++converged;
        CHECK(report.greedy_expected_payoff == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        if (report.classification == EquilibriumClass::partial_pooling) ++pooled;
    }
    CHECK(converged >= 8);
    CHECK(pooled == converged);
}

TEST_CASE("expected payoff of pure profiles matches the enumeration oracle everywhere") {
    // All games with n_types, n_signals, n_responses <= 3, clean channel.
    for (std::size_t t = 1; t <= 3; ++t) {
        for (std::size_t s = 1; s <= 3; ++s) {
            for (std::size_t r = 1; r <= 3; ++r) {
                const auto game = SignalingGame::standard_clean(t, s, r);
                const auto oracle = brute_force(game);
                const double closed_form =
                    static_cast<double>(std::min({t, s, r})) / static_cast<double>(t);
                CHECK(oracle.max_payoff == doctest::Approx(closed_form).epsilon(1e-12));

                const auto policies =
                    PolicyPair::pure(game, oracle.best_sender, oracle.best_receiver);
                CHECK(lewis::expected_payoff(game, policies) ==
                      doctest::Approx(oracle.max_payoff).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("best_response_check verdicts agree with the deviation oracle") {
    Rng rng(5);
    for (std::size_t t = 1; t <= 3; ++t) {
        for (std::size_t s = 1; s <= 3; ++s) {
            for (std::size_t r = 1; r <= 3; ++r) {
                const auto game = SignalingGame::standard_clean(t, s, r);
                for (int trial = 0; trial < 20; ++trial) {
                    std::vector<std::size_t> sender(t), receiver(s);
                    for (auto& x : sender) x = rng.index(s);
                    for (auto& x : receiver) x = rng.index(r);
                    const auto policies = PolicyPair::pure(game, sender, receiver);
                    const auto report = lewis::best_response_check(game, policies);
                    CHECK(report.is_nash == oracle_is_nash(game, sender, receiver));
                    CHECK(report.is_nash == report.improving_deviations.empty());
                }
            }
        }
    }
}

TEST_CASE("a pooling sender with a free signal has an improving deviation") {
    const auto game = SignalingGame::standard_clean(2, 2, 2);
    // Both types send signal 0; receiver decodes 0 -> 0, 1 -> 1.
    const auto policies = PolicyPair::pure(game, {0, 0}, {0, 1});
    const auto report = lewis::best_response_check(game, policies);
    CHECK_FALSE(report.is_nash);
    bool found = false;
    for (const auto& d : report.improving_deviations)
        if (d.sender && d.row == 1 && d.to == 1 && d.gain > 0.0) found = true;
    CHECK(found);
}

TEST_CASE("1-signal games are trivially nash") {
    const auto game = SignalingGame::standard_clean(2, 1, 1);
    const auto report =
        lewis::best_response_check(game, PolicyPair::pure(game, {0, 0}, {0}));
    CHECK(report.is_nash);
}

TEST_CASE("oversized games refuse enumeration") {
    const auto game = SignalingGame::standard_clean(2000, 600, 2);
    CHECK_THROWS_AS((void)lewis::best_response_check(game, PolicyPair::uniform(game)),
                    EnumerationRefusedError);
}

TEST_CASE("classification covers separating, pooling, and partial pooling") {
    const auto g22 = SignalingGame::standard_clean(2, 2, 2);
    CHECK(lewis::classify_equilibrium(PolicyPair::pure(g22, {0, 1}, {0, 1})) ==
          EquilibriumClass::separating);
    CHECK(lewis::classify_equilibrium(PolicyPair::pure(g22, {0, 0}, {0, 1})) ==
          EquilibriumClass::pooling);

    const auto g32 = SignalingGame::standard_clean(3, 2, 3);
    CHECK(lewis::classify_equilibrium(PolicyPair::pure(g32, {0, 0, 1}, {0, 2})) ==
          EquilibriumClass::partial_pooling);
}

TEST_CASE("greedy argmax break ties toward the lowest index") {
    CHECK(lewis::greedy_rows({{1.0, 1.0}, {0.2, 0.7}}) ==
          std::vector<std::size_t>{0, 1});
}

TEST_CASE("scaling one propensity row leaves greedy analysis unchanged") {
    const auto game = SignalingGame::standard_clean(3, 3, 3);
    auto policies = PolicyPair::pure(game, {0, 1, 2}, {0, 1, 2});
    const auto before_class = lewis::classify_equilibrium(policies);
    const bool before_nash = lewis::best_response_check(game, policies).is_nash;
    for (double c : {0.01, 7.0, 1234.5}) {
        auto scaled = policies;
        for (auto& v : scaled.sender[1]) v *= c;
        CHECK(lewis::classify_equilibrium(scaled) == before_class);
        CHECK(lewis::best_response_check(game, scaled).is_nash == before_nash);
    }
}

TEST_CASE("monte carlo agrees with the exact expectation within 4 standard errors") {
    const auto game =
        SignalingGame::standard(3, 3, 3, channel::DiscreteChannel::symmetric(3, 0.12));
    auto policies = PolicyPair::uniform(game);
    policies.sender = {{3.0, 1.0, 1.0}, {1.0, 4.0, 1.0}, {1.0, 1.0, 2.0}};
    policies.receiver = {{2.0, 1.0, 1.0}, {1.0, 1.0, 1.0}, {1.0, 1.0, 5.0}};
    const double exact = lewis::expected_payoff(game, policies);
    Rng rng(6);
    const int rounds = 1000000;
    double total = 0.0, sq = 0.0;
    for (int i = 0; i < rounds; ++i) {
        const double p = lewis::play_round(game, policies, rng).payoff;
        total += p;
        sq += p * p;
    }
    const double mean = total / rounds;
    const double se = std::sqrt((sq / rounds - mean * mean) / rounds);
    CHECK(std::abs(mean - exact) < 4.0 * se);
}

TEST_CASE("payoff-1 nash profiles with enough signals are separating") {
    for (std::size_t t = 1; t <= 3; ++t) {
        for (std::size_t s = t; s <= 3; ++s) {
            const auto game = SignalingGame::standard_clean(t, s, t);
            std::vector<std::vector<std::size_t>> senders, receivers;
            enumerate_maps(t, s, senders);
            enumerate_maps(s, t, receivers);
            for (const auto& sm : senders) {
                for (const auto& rm : receivers) {
                    const auto policies = PolicyPair::pure(game, sm, rm);
                    const auto report = lewis::best_response_check(game, policies);
                    if (report.is_nash &&
                        lewis::expected_payoff(game, policies) > 1.0 - 1e-12)
                        CHECK(lewis::classify_equilibrium(policies) ==
                              EquilibriumClass::separating);
                }
            }
        }
    }
}

TEST_CASE("kb decode follows the posterior over types") {
    const auto game = SignalingGame::standard_clean(3, 2, 3);
    const std::vector<std::size_t> sender_map{0, 0, 1};  // types 0,1 pool on signal 0

    SUBCASE("degenerate context prior forces its type's response") {
        const lewis::KnowledgeBase kb({{0.0, 1.0, 0.0}});
        const auto result = lewis::kb_decode(0, 0, kb, game, sender_map);
        CHECK(result.response == 1);
        CHECK_FALSE(result.ambiguous);
    }
    SUBCASE("posterior arithmetic picks the heavier pooled type") {
        const lewis::KnowledgeBase kb({{0.9, 0.1, 0.0}});
        CHECK(lewis::kb_decode(0, 0, kb, game, sender_map).response == 0);
    }
    SUBCASE("uniform context prior reduces to the kb-free best response") {
        const lewis::KnowledgeBase kb({{1.0 / 3, 1.0 / 3, 1.0 / 3}});
        // Posterior over {0, 1} is uniform; lowest index wins the payoff tie.
        CHECK(lewis::kb_decode(0, 0, kb, game, sender_map).response == 0);
        CHECK(lewis::kb_decode(1, 0, kb, game, sender_map).response == 2);
    }
    SUBCASE("zero posterior mass flags ambiguity and falls back to the prior") {
        const lewis::KnowledgeBase kb({{0.0, 0.0, 1.0}});
        const auto result = lewis::kb_decode(0, 0, kb, game, sender_map);
        CHECK(result.ambiguous);
        CHECK(result.response == 2);
    }
}

TEST_CASE("degenerate contexts restore per-context payoff 1 under pooling") {
    // Pooled profile on 3 types / 2 signals; a kb that pins the type per
    // context decodes perfectly even though the signal is ambiguous.
    const auto game = SignalingGame::standard_clean(3, 2, 3);
    const std::vector<std::size_t> sender_map{0, 0, 1};
    const lewis::KnowledgeBase kb({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}});
    for (std::size_t type = 0; type < 3; ++type) {
        const auto result = lewis::kb_decode(sender_map[type], type, kb, game, sender_map);
        CHECK(result.response == type);
        CHECK(game.payoff[type][result.response] == 1.0);
    }
}

TEST_CASE("rsa literal listener is one-hot under an identity lexicon") {
    const std::vector<std::vector<bool>> lexicon{{true, false}, {false, true}};
    const auto result = lewis::rsa_infer(lexicon, {0.3, 0.7}, 0, 1.0);
    CHECK(result.literal_listener[0][0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(result.literal_listener[0][1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(result.literal_listener[1][1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(result.listener == result.literal_listener);
}

TEST_CASE("scalar implicature strengthens the pragmatic listener") {
    // Signal A true of {t0, t1}, signal B true of {t1} only.
    const std::vector<std::vector<bool>> lexicon{{true, true}, {false, true}};
    const auto result = lewis::rsa_infer(lexicon, {0.5, 0.5}, 1, 1.0);
    CHECK(result.literal_listener[0][0] == doctest::Approx(0.5).epsilon(1e-12));
    // S1: t0 must use A; t1 splits 1/3 A, 2/3 B; L1(A) = (0.75, 0.25).
    CHECK(result.speaker[0][0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(result.speaker[1][0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(result.pragmatic_listener[0][0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(result.pragmatic_listener[0][0] > result.literal_listener[0][0]);
    CHECK(result.listener == result.pragmatic_listener);
}

TEST_CASE("zero rationality makes the speaker uniform over true signals") {
    const std::vector<std::vector<bool>> lexicon{{true, true}, {false, true}};
    const auto result = lewis::rsa_infer(lexicon, {0.5, 0.5}, 1, 0.0);
    CHECK(result.speaker[1][0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(result.speaker[1][1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(result.speaker[0][0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rsa rejects lexicons with an all-false signal row") {
    const std::vector<std::vector<bool>> lexicon{{true, true}, {false, false}};
    CHECK_THROWS_AS((void)lewis::rsa_infer(lexicon, {0.5, 0.5}, 1, 1.0), DimensionError);
}

TEST_CASE("error decomposition separates channel, mapping, and kb error") {
    SUBCASE("perfect setting gives all-zero rates") {
        const auto game = SignalingGame::standard_clean(2, 2, 2);
        const auto policies = PolicyPair::pure(game, {0, 1}, {0, 1});
        Rng rng(8);
        std::vector<lewis::Transcript> transcripts;
        for (int i = 0; i < 2000; ++i)
            transcripts.push_back(lewis::play_round(game, policies, rng));
        const lewis::KnowledgeBase kb({{0.5, 0.5}});
        const auto d = lewis::error_decomposition(transcripts, game, policies, &kb, &kb);
        CHECK(d.level_a_rate == 0.0);
        CHECK(d.level_b_rate == 0.0);
        CHECK(d.level_c_rate == 0.0);
    }
    SUBCASE("bsc(0.1) shows up as level a") {
        const auto game =
            SignalingGame::standard(2, 2, 2, channel::DiscreteChannel::symmetric(2, 0.1));
        const auto policies = PolicyPair::pure(game, {0, 1}, {0, 1});
        Rng rng(9);
        std::vector<lewis::Transcript> transcripts;
        for (int i = 0; i < 100000; ++i)
            transcripts.push_back(lewis::play_round(game, policies, rng));
        const auto d = lewis::error_decomposition(transcripts, game, policies);
        CHECK(d.level_a_rate == doctest::Approx(0.1).epsilon(0.1));
        CHECK(d.level_a_rate >= 0.09);
        CHECK(d.level_a_rate <= 0.11);
    }
    SUBCASE("pooling over 3 types on 2 signals is exactly 1/3 level b") {
        const auto game = SignalingGame::standard_clean(3, 2, 3);
        const auto policies = PolicyPair::pure(game, {0, 0, 1}, {0, 2});
        const auto d = lewis::error_decomposition({}, game, policies);
        CHECK(d.level_b_rate == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("a mismatched kb costs level c") {
        const auto game = SignalingGame::standard_clean(3, 2, 3);
        const auto policies = PolicyPair::pure(game, {0, 0, 1}, {0, 2});
        // True contexts pin the type; the used kb swaps contexts 0 and 1.
        const lewis::KnowledgeBase truth(
            {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}});
        const lewis::KnowledgeBase swapped(
            {{0.0, 1.0, 0.0}, {1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}});
        const auto matched = lewis::error_decomposition({}, game, policies, &truth, &truth);
        CHECK(matched.level_c_rate == doctest::Approx(0.0).epsilon(1e-12));
        const auto mismatched =
            lewis::error_decomposition({}, game, policies, &truth, &swapped);
        CHECK(mismatched.level_c_rate > 0.0);
    }
}

}  // TEST_SUITE
