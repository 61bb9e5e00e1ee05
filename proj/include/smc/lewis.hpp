#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "smc/channel.hpp"
#include "smc/errors.hpp"
#include "smc/rng.hpp"

namespace smc::lewis {

// Two-player Lewis signaling game: a sender observes a type drawn from the
// prior and emits a signal; the signal crosses a discrete channel; the
// receiver picks a response; both earn payoff[type][response].
struct SignalingGame {
    std::size_t n_types = 0;
    std::size_t n_signals = 0;
    std::size_t n_responses = 0;
    std::vector<double> type_prior;                 // over types, sums to 1
    std::vector<std::vector<double>> payoff;        // [type][response]
    channel::DiscreteChannel channel;               // over the signal alphabet

    SignalingGame(std::size_t types, std::size_t signals, std::size_t responses,
                  std::vector<double> prior, std::vector<std::vector<double>> payoffs,
                  channel::DiscreteChannel signal_channel);

    // Uniform prior, identity payoff (1 iff response == type), given channel.
    static SignalingGame standard(std::size_t types, std::size_t signals,
                                  std::size_t responses, channel::DiscreteChannel signal_channel);
    static SignalingGame standard_clean(std::size_t types, std::size_t signals,
                                        std::size_t responses);
};

// Roth-Erev propensities; sampling probability is the row-normalized value.
struct PolicyPair {
    std::vector<std::vector<double>> sender;    // [type][signal]
    std::vector<std::vector<double>> receiver;  // [signal][response]

    // All propensities 1 (the classical initial condition).
    static PolicyPair uniform(const SignalingGame& game);
    // Deterministic one-hot propensities for a pure profile.
    static PolicyPair pure(const SignalingGame& game, const std::vector<std::size_t>& sender_map,
                           const std::vector<std::size_t>& receiver_map);
};

// Context-conditioned prior over types; the receiver-side knowledge base.
struct KnowledgeBase {
    std::vector<std::vector<double>> context_prior;  // [context][type], rows sum to 1

    explicit KnowledgeBase(std::vector<std::vector<double>> prior);
    std::size_t n_contexts() const { return context_prior.size(); }
};

// One played round.
struct Transcript {
    std::size_t type = 0;
    std::size_t sent_signal = 0;
    std::size_t received_signal = 0;
    std::size_t response = 0;
    double payoff = 0.0;
};

enum class EquilibriumClass {
    separating,
    partial_pooling,
    pooling,
};

const char* equilibrium_class_name(EquilibriumClass c);

struct Deviation {
    bool sender = false;   // otherwise receiver
    std::size_t row = 0;   // type (sender) or signal (receiver)
    std::size_t from = 0;
    std::size_t to = 0;
    double gain = 0.0;
};

struct BestResponseReport {
    bool is_nash = false;
    std::vector<Deviation> improving_deviations;
};

struct ConvergenceReport {
    bool converged = false;
    std::size_t rounds = 0;
    bool is_nash = false;
    EquilibriumClass classification = EquilibriumClass::pooling;
    double greedy_expected_payoff = 0.0;
    std::vector<double> payoff_trajectory;  // running mean, downsampled
    std::size_t trajectory_stride = 1;
};

struct TrainConfig {
    std::size_t max_rounds = 50000;
    std::size_t window = 1000;
    double stability_tol = 1e-9;  // improvement threshold in the NE check
    double reinforcement = 1.0;
};

struct ErrorDecomposition {
    double level_a_rate = 0.0;  // channel: received != sent
    double level_b_rate = 0.0;  // mapping: greedy loss on clean receptions (enumerated)
    double level_c_rate = 0.0;  // knowledge: extra loss from a mismatched KB (enumerated)
};

struct KbDecodeResult {
    std::size_t response = 0;
    bool ambiguous = false;  // zero posterior mass; fell back to the context prior
};

struct RsaResult {
    std::vector<std::vector<double>> literal_listener;    // L0 [signal][type]
    std::vector<std::vector<double>> speaker;             // S1 [type][signal]
    std::vector<std::vector<double>> pragmatic_listener;  // L1 [signal][type]
    std::vector<std::vector<double>> listener;            // depth 0 -> L0, depth 1 -> L1
};

Transcript play_round(const SignalingGame& game, const PolicyPair& policies, Rng& rng);

// Adds reinforcement * payoff to the two chosen cells.
PolicyPair reinforce_update(const PolicyPair& policies, const Transcript& transcript,
                            double reinforcement);

std::pair<PolicyPair, ConvergenceReport> train_to_equilibrium(const SignalingGame& game,
                                                              const TrainConfig& config, Rng& rng);

// Exact expectation over (type, signal, received, response); no sampling.
double expected_payoff(const SignalingGame& game, const PolicyPair& policies);

// Exact expectation of a pure profile.
double expected_payoff_pure(const SignalingGame& game, const std::vector<std::size_t>& sender_map,
                            const std::vector<std::size_t>& receiver_map);

// Row argmax with ties broken by lowest index; values within tol of the row
// maximum count as tied.
std::vector<std::size_t> greedy_rows(const std::vector<std::vector<double>>& propensities,
                                     double tol = 0.0);

BestResponseReport best_response_check(const SignalingGame& game, const PolicyPair& policies,
                                       double tol = 1e-9);

EquilibriumClass classify_equilibrium(const PolicyPair& policies, double tol = 0.0);

KbDecodeResult kb_decode(std::size_t signal, std::size_t context, const KnowledgeBase& kb,
                         const SignalingGame& game, const std::vector<std::size_t>& sender_greedy_map);

// lexicon[signal][type]: which types each signal is literally true of.
RsaResult rsa_infer(const std::vector<std::vector<bool>>& lexicon,
                    const std::vector<double>& prior, int depth, double rationality);

ErrorDecomposition error_decomposition(const std::vector<Transcript>& transcripts,
                                       const SignalingGame& game, const PolicyPair& policies,
                                       const KnowledgeBase* true_kb = nullptr,
                                       const KnowledgeBase* used_kb = nullptr);

}  // namespace smc::lewis
