#include "smc/marl.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "smc/channel.hpp"

namespace smc::marl {

namespace {

std::vector<double> one_hot(std::size_t index, std::size_t n) {
    std::vector<double> v(n, 0.0);
    v[index] = 1.0;
    return v;
}

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

void check_actors(const Actors& actors, std::size_t n_targets) {
    if (actors.speaker.input_size() != n_targets)
        throw DimensionError("marl: speaker input size != n_targets");
    if (actors.listener.output_size() != n_targets)
        throw DimensionError("marl: listener output size != n_targets");
    if (actors.speaker.output_size() != actors.listener.input_size())
        throw DimensionError("marl: message dimension mismatch between actors");
}

}  // namespace

TrainOutcome ctde_train(const ReferentialEnv& env, const MarlConfig& config, Rng& rng) {
    if (env.n_targets < 1) throw ConfigError("marl: n_targets must be >= 1");
    if (config.message_dim == 0) throw ConfigError("marl: message_dim must be >= 1");
    if (config.message_noise_sigma < 0.0) throw ConfigError("marl: sigma must be >= 0");
    if (config.execution_levels != 0 && config.execution_levels < 2)
        throw ConfigError("marl: execution_levels must be >= 2 (or 0 for pass-through)");

    const std::size_t n = env.n_targets;
    using nn::Activation;
    TrainOutcome out{
        Actors{
            nn::DenseNet::random({n, config.hidden, config.message_dim},
                                 {Activation::tanh, Activation::tanh}, rng),
            nn::DenseNet::random({config.message_dim, config.hidden, n},
                                 {Activation::tanh, Activation::softmax}, rng),
        },
        nn::DenseNet::random({n, config.hidden, 1}, {Activation::tanh, Activation::affine}, rng),
        {},
        0.0,
    };
    out.reward_curve.reserve(config.episodes);

    std::vector<double> window(std::max<std::size_t>(config.reward_window, 1), 0.0);
    double window_sum = 0.0;
    std::size_t window_filled = 0;

    for (std::size_t episode = 0; episode < config.episodes; ++episode) {
        const std::size_t target = rng.index(n);
        const auto obs = one_hot(target, n);

        const auto speaker_trace = out.actors.speaker.forward(obs);
        std::vector<double> message = speaker_trace.output();
        if (config.message_noise_sigma > 0.0)
            for (double& v : message) v += rng.gaussian(0.0, config.message_noise_sigma);
        if (config.ablate_messages) std::fill(message.begin(), message.end(), 0.0);

        const auto listener_trace = out.actors.listener.forward(message);
        const auto& probs = listener_trace.output();
        const std::size_t action = rng.categorical(probs);
        const double reward = action == target ? 1.0 : 0.0;

        const auto critic_trace = out.critic.forward(obs);
        const double value = critic_trace.output()[0];
        const double advantage = reward - value;

        // Listener: score-function gradient of -log pi(action) * advantage,
        // seeded at the softmax logits.
        std::vector<double> logit_grad(n);
        for (std::size_t i = 0; i < n; ++i)
            logit_grad[i] = (probs[i] - (i == action ? 1.0 : 0.0)) * advantage;
        std::vector<double> message_grad;
        const auto listener_grads = nn::backward_from_logits_with_input(
            out.actors.listener, listener_trace, logit_grad, message_grad);

        // Speaker: pathwise gradient through the real-valued message; additive
        // noise and ablation are identity on the backward pass.
        const auto speaker_grads =
            nn::backward_from_output(out.actors.speaker, speaker_trace, message_grad);

        const auto critic_result =
            nn::backward(out.critic, critic_trace, nn::Loss::mse, std::vector<double>{reward});

        out.actors.listener = nn::sgd_step(out.actors.listener, listener_grads, config.lr);
        if (!config.ablate_messages)
            out.actors.speaker = nn::sgd_step(out.actors.speaker, speaker_grads, config.lr);
        out.critic = nn::sgd_step(out.critic, critic_result.grads, config.lr);

        const std::size_t slot = episode % window.size();
        if (window_filled == window.size()) window_sum -= window[slot];
        window[slot] = reward;
        window_sum += reward;
        if (window_filled < window.size()) ++window_filled;
        out.reward_curve.push_back(window_sum / static_cast<double>(window_filled));
    }
    out.final_reward = out.reward_curve.empty() ? 0.0 : out.reward_curve.back();
    return out;
}

ExecutionLogEntry run_state(const Actors& actors, std::size_t state, std::size_t n_targets,
                            std::size_t quantization_levels) {
    const auto message = actors.speaker.evaluate(one_hot(state, n_targets));
    ExecutionLogEntry entry;
    entry.state = state;
    std::vector<double> received = message;
    if (quantization_levels >= 2) {
        entry.message_cells.resize(message.size());
        for (std::size_t i = 0; i < message.size(); ++i) {
            entry.message_cells[i] = channel::quantize_level(message[i], quantization_levels);
            received[i] = channel::level_midpoint(entry.message_cells[i], quantization_levels);
        }
    }
    entry.action = argmax(actors.listener.evaluate(received));
    return entry;
}

ExecutionResult execute(const Actors& actors, const ReferentialEnv& env, std::size_t episodes,
                        std::size_t quantization_levels, Rng& rng) {
    check_actors(actors, env.n_targets);
    if (quantization_levels == 1)
        throw ConfigError("marl: execution_levels must be >= 2 (or 0 for pass-through)");
    ExecutionResult result;
    result.log.reserve(episodes);
    double total = 0.0;
    for (std::size_t episode = 0; episode < episodes; ++episode) {
        const std::size_t target = rng.index(env.n_targets);
        auto entry = run_state(actors, target, env.n_targets, quantization_levels);
        entry.reward = entry.action == target ? 1.0 : 0.0;
        total += entry.reward;
        result.log.push_back(std::move(entry));
    }
    result.mean_reward = episodes == 0 ? 0.0 : total / static_cast<double>(episodes);
    return result;
}

SrReport emergent_sr_report(const std::vector<ExecutionLogEntry>& log) {
    if (log.empty()) throw ConfigError("emergent_sr_report: empty log");

    std::size_t n_states = 0;
    for (const auto& e : log) n_states = std::max(n_states, e.state + 1);

    std::map<std::vector<std::size_t>, std::size_t> message_ids;
    std::vector<std::map<std::vector<std::size_t>, std::size_t>> per_state(n_states);
    for (const auto& e : log) {
        message_ids.emplace(e.message_cells, message_ids.size());
        ++per_state[e.state][e.message_cells];
    }

    SrReport report;
    report.message_counts.resize(n_states);
    for (std::size_t s = 0; s < n_states; ++s)
        report.message_counts[s].assign(per_state[s].begin(), per_state[s].end());

    // Plug-in MI over the empirical joint distribution of (state, message).
    const double total = static_cast<double>(log.size());
    std::vector<double> p_state(n_states, 0.0);
    std::vector<double> p_message(message_ids.size(), 0.0);
    std::vector<std::vector<double>> joint(n_states,
                                           std::vector<double>(message_ids.size(), 0.0));
    for (std::size_t s = 0; s < n_states; ++s) {
        for (const auto& [cells, count] : per_state[s]) {
            const double p = static_cast<double>(count) / total;
            joint[s][message_ids[cells]] += p;
            p_state[s] += p;
        }
    }
    for (std::size_t m = 0; m < message_ids.size(); ++m)
        for (std::size_t s = 0; s < n_states; ++s) p_message[m] += joint[s][m];
    double mi = 0.0;
    for (std::size_t s = 0; s < n_states; ++s)
        for (std::size_t m = 0; m < message_ids.size(); ++m)
            if (joint[s][m] > 0.0)
                mi += joint[s][m] * std::log2(joint[s][m] / (p_state[s] * p_message[m]));
    report.mutual_information_bits = std::max(0.0, mi);
    return report;
}

}  // namespace smc::marl
