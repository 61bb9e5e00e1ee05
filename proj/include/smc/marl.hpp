#pragma once

#include <cstdint>
#include <vector>

#include "smc/errors.hpp"
#include "smc/nn.hpp"
#include "smc/rng.hpp"

namespace smc::marl {

// One-step referential game: the speaker observes a one-hot target, the
// listener picks a target; reward 1 on a correct pick, else 0.
struct ReferentialEnv {
    std::size_t n_targets = 4;
};

struct Actors {
    nn::DenseNet speaker;   // one-hot observation -> tanh message
    nn::DenseNet listener;  // message -> action softmax
};

struct MarlConfig {
    std::size_t episodes = 20000;
    double lr = 0.05;
    double message_noise_sigma = 0.3;      // training only
    std::size_t execution_levels = 16;     // uniform quantizer cells at execution
    std::size_t message_dim = 2;
    std::size_t hidden = 16;
    std::size_t reward_window = 500;       // moving-average width
    bool ablate_messages = false;          // listener receives zeros
};

struct TrainOutcome {
    Actors actors;
    nn::DenseNet critic;  // training-only state-value baseline
    std::vector<double> reward_curve;  // moving average, one entry per episode
    double final_reward = 0.0;
};

// Centralized training: score-function gradient on the listener's action with
// a critic state-value baseline; the speaker learns through the pathwise
// gradient of the noisy real-valued message. Execution never uses the critic.
TrainOutcome ctde_train(const ReferentialEnv& env, const MarlConfig& config, Rng& rng);

struct ExecutionLogEntry {
    std::size_t state = 0;
    std::vector<std::size_t> message_cells;  // empty in real-valued pass-through mode
    std::size_t action = 0;
    double reward = 0.0;
};

struct ExecutionResult {
    double mean_reward = 0.0;
    std::vector<ExecutionLogEntry> log;
};

// Decentralized execution with greedy actions. quantization_levels >= 2
// discretizes each message coordinate to cell midpoints; 0 passes the
// real-valued message through unchanged.
ExecutionResult execute(const Actors& actors, const ReferentialEnv& env, std::size_t episodes,
                        std::size_t quantization_levels, Rng& rng);

// Deterministic single-state rollout shared by execute and extraction.
ExecutionLogEntry run_state(const Actors& actors, std::size_t state, std::size_t n_targets,
                            std::size_t quantization_levels);

struct SrReport {
    // message_counts[state] maps a quantized message tuple to its frequency.
    std::vector<std::vector<std::pair<std::vector<std::size_t>, std::size_t>>> message_counts;
    double mutual_information_bits = 0.0;
};

// Plug-in mutual information (bits) between state and quantized message from
// empirical log frequencies.
SrReport emergent_sr_report(const std::vector<ExecutionLogEntry>& log);

}  // namespace smc::marl
