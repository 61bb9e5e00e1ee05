#include "smc/lewis.hpp"

#include <algorithm>
#include <cmath>

namespace smc::lewis {

namespace {

constexpr double kProbTol = 1e-12;

void check_distribution(const std::vector<double>& p, const char* what) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ConfigError(std::string(what) + ": entries must be finite and >= 0");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kProbTol)
        throw ConfigError(std::string(what) + ": must sum to 1 (got " + std::to_string(sum) + ")");
}

std::size_t argmax_row(const std::vector<double>& row, double tol) {
    double best = row[0];
    for (double v : row) best = std::max(best, v);
    for (std::size_t i = 0; i < row.size(); ++i)
        if (row[i] >= best - tol) return i;
    return 0;
}

double row_best(const std::vector<double>& row) {
    double best = row[0];
    for (double v : row) best = std::max(best, v);
    return best;
}

// Best response to a belief over types, ties broken by lowest index.
std::size_t best_response_to_belief(const SignalingGame& game, const std::vector<double>& belief) {
    std::size_t best_a = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < game.n_responses; ++a) {
        double v = 0.0;
        for (std::size_t t = 0; t < game.n_types; ++t) v += belief[t] * game.payoff[t][a];
        if (v > best_v + kProbTol) {
            best_v = v;
            best_a = a;
        }
    }
    return best_a;
}

// Greedy-receiver error mass under clean reception, enumerated over types.
double enumerate_mapping_error(const SignalingGame& game, const std::vector<std::size_t>& sender_map,
                               const std::vector<std::size_t>& receiver_map) {
    double err = 0.0;
    for (std::size_t t = 0; t < game.n_types; ++t) {
        const std::size_t response = receiver_map[sender_map[t]];
        if (game.payoff[t][response] + kProbTol < row_best(game.payoff[t]))
            err += game.type_prior[t];
    }
    return err;
}

double enumerate_kb_error(const SignalingGame& game, const std::vector<std::size_t>& sender_map,
                          const KnowledgeBase& truth, const KnowledgeBase& used) {
    const std::size_t contexts = truth.n_contexts();
    double err = 0.0;
    for (std::size_t c = 0; c < contexts; ++c) {
        for (std::size_t t = 0; t < game.n_types; ++t) {
            const double mass = truth.context_prior[c][t];
            if (mass == 0.0) continue;
            const auto decoded = kb_decode(sender_map[t], c, used, game, sender_map);
            if (game.payoff[t][decoded.response] + kProbTol < row_best(game.payoff[t]))
                err += mass / static_cast<double>(contexts);
        }
    }
    return err;
}

double pow_or_zero(double base, double exponent) {
    if (base <= 0.0) return 0.0;
    return std::pow(base, exponent);
}

}  // namespace

SignalingGame::SignalingGame(std::size_t types, std::size_t signals, std::size_t responses,
                             std::vector<double> prior, std::vector<std::vector<double>> payoffs,
                             channel::DiscreteChannel signal_channel)
    : n_types(types),
      n_signals(signals),
      n_responses(responses),
      type_prior(std::move(prior)),
      payoff(std::move(payoffs)),
      channel(std::move(signal_channel)) {
    if (n_types == 0 || n_signals == 0 || n_responses == 0)
        throw ConfigError("SignalingGame: all space sizes must be positive");
    if (type_prior.size() != n_types)
        throw ConfigError("SignalingGame: prior length != n_types");
    check_distribution(type_prior, "SignalingGame prior");
    if (payoff.size() != n_types)
        throw ConfigError("SignalingGame: payoff rows != n_types");
    for (const auto& row : payoff) {
        if (row.size() != n_responses)
            throw ConfigError("SignalingGame: payoff columns != n_responses");
        for (double v : row)
            if (!std::isfinite(v)) throw ConfigError("SignalingGame: payoff must be finite");
    }
    if (channel.alphabet_size() != n_signals)
        throw ConfigError("SignalingGame: channel alphabet != n_signals");
}

SignalingGame SignalingGame::standard(std::size_t types, std::size_t signals,
                                      std::size_t responses,
                                      channel::DiscreteChannel signal_channel) {
    std::vector<double> prior(types, 1.0 / static_cast<double>(types));
    std::vector<std::vector<double>> payoffs(types, std::vector<double>(responses, 0.0));
    for (std::size_t t = 0; t < types && t < responses; ++t) payoffs[t][t] = 1.0;
    return SignalingGame(types, signals, responses, std::move(prior), std::move(payoffs),
                         std::move(signal_channel));
}

SignalingGame SignalingGame::standard_clean(std::size_t types, std::size_t signals,
                                            std::size_t responses) {
    return standard(types, signals, responses, channel::DiscreteChannel::identity(signals));
}

PolicyPair PolicyPair::uniform(const SignalingGame& game) {
    PolicyPair p;
    p.sender.assign(game.n_types, std::vector<double>(game.n_signals, 1.0));
    p.receiver.assign(game.n_signals, std::vector<double>(game.n_responses, 1.0));
    return p;
}

PolicyPair PolicyPair::pure(const SignalingGame& game, const std::vector<std::size_t>& sender_map,
                            const std::vector<std::size_t>& receiver_map) {
    if (sender_map.size() != game.n_types || receiver_map.size() != game.n_signals)
        throw DimensionError("PolicyPair::pure: map lengths must match the game");
    PolicyPair p;
    p.sender.assign(game.n_types, std::vector<double>(game.n_signals, 0.0));
    p.receiver.assign(game.n_signals, std::vector<double>(game.n_responses, 0.0));
    for (std::size_t t = 0; t < game.n_types; ++t) p.sender[t][sender_map[t]] = 1.0;
    for (std::size_t s = 0; s < game.n_signals; ++s) p.receiver[s][receiver_map[s]] = 1.0;
    return p;
}

KnowledgeBase::KnowledgeBase(std::vector<std::vector<double>> prior)
    : context_prior(std::move(prior)) {
    if (context_prior.empty()) throw ConfigError("KnowledgeBase: empty context space");
    for (const auto& row : context_prior) check_distribution(row, "KnowledgeBase context prior");
}

const char* equilibrium_class_name(EquilibriumClass c) {
    switch (c) {
        case EquilibriumClass::separating: return "separating";
        case EquilibriumClass::partial_pooling: return "partial_pooling";
        case EquilibriumClass::pooling: return "pooling";
    }
    return "unknown";
}

Transcript play_round(const SignalingGame& game, const PolicyPair& policies, Rng& rng) {
    Transcript t;
    t.type = rng.categorical(game.type_prior);
    t.sent_signal = rng.categorical(policies.sender[t.type]);
    t.received_signal = game.channel.transmit(t.sent_signal, rng);
    t.response = rng.categorical(policies.receiver[t.received_signal]);
    t.payoff = game.payoff[t.type][t.response];
    return t;
}

PolicyPair reinforce_update(const PolicyPair& policies, const Transcript& transcript,
                            double reinforcement) {
    if (reinforcement < 0.0)
        throw ConfigError("reinforce_update: reinforcement must be >= 0");
    PolicyPair next = policies;
    const double delta = reinforcement * transcript.payoff;
    next.sender[transcript.type][transcript.sent_signal] += delta;
    next.receiver[transcript.received_signal][transcript.response] += delta;
    return next;
}

std::vector<std::size_t> greedy_rows(const std::vector<std::vector<double>>& propensities,
                                     double tol) {
    std::vector<std::size_t> map(propensities.size());
    for (std::size_t i = 0; i < propensities.size(); ++i)
        map[i] = argmax_row(propensities[i], tol);
    return map;
}

double expected_payoff(const SignalingGame& game, const PolicyPair& policies) {
    double total = 0.0;
    for (std::size_t t = 0; t < game.n_types; ++t) {
        double sender_sum = 0.0;
        for (double v : policies.sender[t]) sender_sum += v;
        if (sender_sum <= 0.0)
            throw DimensionError("expected_payoff: sender row " + std::to_string(t) +
                                 " has no positive mass");
        for (std::size_t s = 0; s < game.n_signals; ++s) {
            const double p_signal = policies.sender[t][s] / sender_sum;
            if (p_signal == 0.0) continue;
            for (std::size_t r = 0; r < game.n_signals; ++r) {
                const double p_recv = game.channel.probability(s, r);
                if (p_recv == 0.0) continue;
                double receiver_sum = 0.0;
                for (double v : policies.receiver[r]) receiver_sum += v;
                if (receiver_sum <= 0.0)
                    throw DimensionError("expected_payoff: receiver row " + std::to_string(r) +
                                         " has no positive mass");
                for (std::size_t a = 0; a < game.n_responses; ++a) {
                    const double p_resp = policies.receiver[r][a] / receiver_sum;
                    if (p_resp == 0.0) continue;
                    total += game.type_prior[t] * p_signal * p_recv * p_resp * game.payoff[t][a];
                }
            }
        }
    }
    return total;
}

double expected_payoff_pure(const SignalingGame& game, const std::vector<std::size_t>& sender_map,
                            const std::vector<std::size_t>& receiver_map) {
    double total = 0.0;
    for (std::size_t t = 0; t < game.n_types; ++t) {
        for (std::size_t r = 0; r < game.n_signals; ++r) {
            const double p_recv = game.channel.probability(sender_map[t], r);
            if (p_recv == 0.0) continue;
            total += game.type_prior[t] * p_recv * game.payoff[t][receiver_map[r]];
        }
    }
    return total;
}

BestResponseReport best_response_check(const SignalingGame& game, const PolicyPair& policies,
                                       double tol) {
    if (game.n_types * game.n_signals > 1000000 || game.n_signals * game.n_responses > 1000000)
        throw EnumerationRefusedError("best_response_check: policy cell count exceeds 10^6");
    auto sender_map = greedy_rows(policies.sender);
    auto receiver_map = greedy_rows(policies.receiver);
    const double base = expected_payoff_pure(game, sender_map, receiver_map);

    BestResponseReport report;
    for (std::size_t t = 0; t < game.n_types; ++t) {
        auto deviated = sender_map;
        for (std::size_t s = 0; s < game.n_signals; ++s) {
            if (s == sender_map[t]) continue;
            deviated[t] = s;
            const double gain = expected_payoff_pure(game, deviated, receiver_map) - base;
            if (gain > tol)
                report.improving_deviations.push_back({true, t, sender_map[t], s, gain});
        }
        deviated[t] = sender_map[t];
    }
    for (std::size_t r = 0; r < game.n_signals; ++r) {
        auto deviated = receiver_map;
        for (std::size_t a = 0; a < game.n_responses; ++a) {
            if (a == receiver_map[r]) continue;
            deviated[r] = a;
            const double gain = expected_payoff_pure(game, sender_map, deviated) - base;
            if (gain > tol)
                report.improving_deviations.push_back({false, r, receiver_map[r], a, gain});
        }
        deviated[r] = receiver_map[r];
    }
    report.is_nash = report.improving_deviations.empty();
    return report;
}

EquilibriumClass classify_equilibrium(const PolicyPair& policies, double tol) {
    const auto sender_map = greedy_rows(policies.sender, tol);
    bool injective = true;
    bool constant = true;
    for (std::size_t t = 0; t < sender_map.size(); ++t) {
        if (sender_map[t] != sender_map[0]) constant = false;
        for (std::size_t u = t + 1; u < sender_map.size(); ++u)
            if (sender_map[t] == sender_map[u]) injective = false;
    }
    if (injective) return EquilibriumClass::separating;
    if (constant) return EquilibriumClass::pooling;
    return EquilibriumClass::partial_pooling;
}

std::pair<PolicyPair, ConvergenceReport> train_to_equilibrium(const SignalingGame& game,
                                                              const TrainConfig& config,
                                                              Rng& rng) {
    if (config.window >= config.max_rounds)
        throw ConfigError("train_to_equilibrium: window must be < max_rounds");
    PolicyPair policies = PolicyPair::uniform(game);
    auto sender_map = greedy_rows(policies.sender);
    auto receiver_map = greedy_rows(policies.receiver);

    ConvergenceReport report;
    report.trajectory_stride = std::max<std::size_t>(1, config.max_rounds / 256);
    double payoff_sum = 0.0;
    std::size_t stable = 0;

    for (std::size_t round = 0; round < config.max_rounds; ++round) {
        const Transcript t = play_round(game, policies, rng);
        policies = reinforce_update(policies, t, config.reinforcement);
        payoff_sum += t.payoff;

        const std::size_t new_signal = argmax_row(policies.sender[t.type], 0.0);
        const std::size_t new_response = argmax_row(policies.receiver[t.received_signal], 0.0);
        const bool changed =
            new_signal != sender_map[t.type] || new_response != receiver_map[t.received_signal];
        sender_map[t.type] = new_signal;
        receiver_map[t.received_signal] = new_response;
        stable = changed ? 0 : stable + 1;

        if ((round + 1) % report.trajectory_stride == 0)
            report.payoff_trajectory.push_back(payoff_sum / static_cast<double>(round + 1));

        report.rounds = round + 1;
        if (stable >= config.window) {
            const auto nash = best_response_check(game, policies, config.stability_tol);
            if (nash.is_nash) {
                report.converged = true;
                break;
            }
            stable = 0;
        }
    }

    const auto nash = best_response_check(game, policies, config.stability_tol);
    report.is_nash = nash.is_nash;
    report.classification = classify_equilibrium(policies);
    report.greedy_expected_payoff =
        expected_payoff_pure(game, greedy_rows(policies.sender), greedy_rows(policies.receiver));
    return {std::move(policies), std::move(report)};
}

KbDecodeResult kb_decode(std::size_t signal, std::size_t context, const KnowledgeBase& kb,
                         const SignalingGame& game,
                         const std::vector<std::size_t>& sender_greedy_map) {
    if (context >= kb.n_contexts())
        throw DimensionError("kb_decode: context index out of range");
    if (kb.context_prior[context].size() != game.n_types)
        throw DimensionError("kb_decode: knowledge base type space mismatch");
    if (sender_greedy_map.size() != game.n_types)
        throw DimensionError("kb_decode: sender map length mismatch");

    std::vector<double> posterior(game.n_types, 0.0);
    double mass = 0.0;
    for (std::size_t t = 0; t < game.n_types; ++t) {
        if (sender_greedy_map[t] != signal) continue;
        posterior[t] = kb.context_prior[context][t];
        mass += posterior[t];
    }
    KbDecodeResult result;
    if (mass <= 0.0) {
        result.ambiguous = true;
        result.response = best_response_to_belief(game, kb.context_prior[context]);
        return result;
    }
    for (double& v : posterior) v /= mass;
    result.response = best_response_to_belief(game, posterior);
    return result;
}

RsaResult rsa_infer(const std::vector<std::vector<bool>>& lexicon,
                    const std::vector<double>& prior, int depth, double rationality) {
    if (depth != 0 && depth != 1) throw ConfigError("rsa_infer: depth must be 0 or 1");
    if (!(rationality >= 0.0)) throw ConfigError("rsa_infer: rationality must be >= 0");
    const std::size_t signals = lexicon.size();
    if (signals == 0) throw DimensionError("rsa_infer: empty lexicon");
    const std::size_t types = prior.size();
    check_distribution(prior, "rsa_infer prior");

    RsaResult r;
    r.literal_listener.assign(signals, std::vector<double>(types, 0.0));
    for (std::size_t s = 0; s < signals; ++s) {
        if (lexicon[s].size() != types)
            throw DimensionError("rsa_infer: lexicon row length != prior length");
        double sum = 0.0;
        for (std::size_t t = 0; t < types; ++t) {
            r.literal_listener[s][t] = lexicon[s][t] ? prior[t] : 0.0;
            sum += r.literal_listener[s][t];
        }
        if (sum <= 0.0)
            throw DimensionError("rsa_infer: signal " + std::to_string(s) +
                                 " is true of no type with positive prior");
        for (double& v : r.literal_listener[s]) v /= sum;
    }

    // S1(s | t) proportional to L0(t | s)^rationality over the true signals.
    r.speaker.assign(types, std::vector<double>(signals, 0.0));
    for (std::size_t t = 0; t < types; ++t) {
        double sum = 0.0;
        for (std::size_t s = 0; s < signals; ++s) {
            r.speaker[t][s] = pow_or_zero(r.literal_listener[s][t], rationality);
            sum += r.speaker[t][s];
        }
        // A type no signal is true of keeps an all-zero speaker row.
        if (sum > 0.0)
            for (double& v : r.speaker[t]) v /= sum;
    }

    r.pragmatic_listener.assign(signals, std::vector<double>(types, 0.0));
    for (std::size_t s = 0; s < signals; ++s) {
        double sum = 0.0;
        for (std::size_t t = 0; t < types; ++t) {
            r.pragmatic_listener[s][t] = r.speaker[t][s] * prior[t];
            sum += r.pragmatic_listener[s][t];
        }
        if (sum > 0.0)
            for (double& v : r.pragmatic_listener[s]) v /= sum;
    }

    r.listener = depth == 0 ? r.literal_listener : r.pragmatic_listener;
    return r;
}

ErrorDecomposition error_decomposition(const std::vector<Transcript>& transcripts,
                                       const SignalingGame& game, const PolicyPair& policies,
                                       const KnowledgeBase* true_kb, const KnowledgeBase* used_kb) {
    ErrorDecomposition d;
    if (!transcripts.empty()) {
        std::size_t distorted = 0;
        for (const auto& t : transcripts)
            if (t.received_signal != t.sent_signal) ++distorted;
        d.level_a_rate = static_cast<double>(distorted) / static_cast<double>(transcripts.size());
    }
    const auto sender_map = greedy_rows(policies.sender);
    const auto receiver_map = greedy_rows(policies.receiver);
    d.level_b_rate = enumerate_mapping_error(game, sender_map, receiver_map);
    if (true_kb != nullptr && used_kb != nullptr) {
        if (true_kb->n_contexts() != used_kb->n_contexts())
            throw DimensionError("error_decomposition: knowledge bases disagree on context space");
        d.level_c_rate = enumerate_kb_error(game, sender_map, *true_kb, *used_kb) -
                         enumerate_kb_error(game, sender_map, *true_kb, *true_kb);
    }
    return d;
}

}  // namespace smc::lewis
