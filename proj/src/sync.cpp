#include "smc/sync.hpp"

#include <algorithm>
#include <cmath>

namespace smc::sync {

namespace {

constexpr std::uint64_t kSplitStreamTag = 0x53504c54;   // distinct rng stream per phase
constexpr std::uint64_t kHybridStreamTag = 0x48594252;
constexpr std::uint64_t kEvalStreamTag = 0x4556414c;

void check_pipeline(const nn::DenseNet& encoder, const nn::DenseNet& generator,
                    std::size_t sample_dim) {
    if (encoder.input_size() != sample_dim)
        throw DimensionError("sync: encoder input size != sample dimension");
    if (encoder.output_size() != generator.input_size())
        throw DimensionError("sync: encoder output size != generator input size");
    if (generator.output_size() != sample_dim)
        throw DimensionError("sync: generator output size != sample dimension");
}

// One sample's reconstruction loss and gradient contributions. The channel
// output feeds the generator; the encoder receives the generator's input
// gradient unchanged (channel treated as identity on the backward pass).
double accumulate_sample(const nn::DenseNet& encoder, const nn::DenseNet& generator,
                         const channel::VectorChannel& chan, std::span<const double> x, Rng& rng,
                         nn::Gradients& enc_grads, nn::Gradients& gen_grads) {
    const auto enc_trace = encoder.forward(x);
    const auto sent = chan.transmit(enc_trace.output(), rng);
    const auto gen_trace = generator.forward(sent);
    const auto& y = gen_trace.output();

    const double inv_dim = 1.0 / static_cast<double>(y.size());
    double loss = 0.0;
    std::vector<double> output_grad(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - x[i];
        loss += d * d * inv_dim;
        output_grad[i] = 2.0 * d * inv_dim;
    }
    std::vector<double> sr_grad;
    nn::accumulate(gen_grads,
                   nn::backward_from_output_with_input(generator, gen_trace, output_grad, sr_grad));
    nn::accumulate(enc_grads, nn::backward_from_output(encoder, enc_trace, sr_grad));
    return loss;
}

double eval_epoch(const nn::DenseNet& encoder, const nn::DenseNet& generator,
                  const channel::VectorChannel& chan, const data::Dataset& ds,
                  const std::vector<std::size_t>& indices, Rng& rng) {
    double total = 0.0;
    for (std::size_t i : indices) {
        const auto sr = encoder.evaluate(ds.samples[i]);
        const auto sent = chan.transmit(sr, rng);
        total += nn::mse(generator.evaluate(sent), ds.samples[i]);
    }
    return total / static_cast<double>(indices.size());
}

// Shared epoch loop for train_pair, split_session and hybrid_sync. Batching
// drops the final short batch; ledger_per_batch adds entries when non-null.
struct EpochLoopResult {
    nn::DenseNet encoder;
    nn::DenseNet generator;
    std::vector<double> loss_curve;
    std::size_t batches_per_epoch = 0;
};

EpochLoopResult run_training(nn::DenseNet encoder, nn::DenseNet generator,
                             const EnvironmentPair& env, std::size_t epochs, Rng& rng,
                             CommLedger* ledger) {
    const auto& ds = env.dataset;
    std::vector<std::size_t> order = ds.train_indices;
    const std::size_t batches = order.size() / env.batch_size;
    if (batches == 0)
        throw ConfigError("sync: batch size exceeds the training split");

    EpochLoopResult result{std::move(encoder), std::move(generator), {}, batches};
    result.loss_curve.push_back(
        eval_epoch(result.encoder, result.generator, env.chan, ds, ds.train_indices, rng));

    const std::uint64_t sr_bytes =
        static_cast<std::uint64_t>(env.batch_size) * result.encoder.output_size() * 8;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.index(i)]);
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
            auto enc_grads = nn::zero_gradients(result.encoder);
            auto gen_grads = nn::zero_gradients(result.generator);
            double batch_loss = 0.0;
            for (std::size_t k = 0; k < env.batch_size; ++k) {
                const auto& x = ds.samples[order[b * env.batch_size + k]];
                batch_loss += accumulate_sample(result.encoder, result.generator, env.chan, x,
                                                rng, enc_grads, gen_grads);
            }
            const double inv_batch = 1.0 / static_cast<double>(env.batch_size);
            nn::scale(enc_grads, inv_batch);
            nn::scale(gen_grads, inv_batch);
            result.encoder = nn::sgd_step(result.encoder, enc_grads, env.lr);
            result.generator = nn::sgd_step(result.generator, gen_grads, env.lr);
            epoch_loss += batch_loss * inv_batch;
            if (ledger != nullptr) {
                ledger->add("split_activation", Direction::downlink, sr_bytes);
                ledger->add("split_gradient", Direction::uplink, sr_bytes);
            }
        }
        epoch_loss /= static_cast<double>(batches);
        if (!std::isfinite(epoch_loss))
            throw DivergenceError("sync: training diverged at epoch " + std::to_string(epoch));
        result.loss_curve.push_back(epoch_loss);
    }
    return result;
}

nn::DenseNet average_nets(const nn::DenseNet& a, const nn::DenseNet& b) {
    if (!a.same_spec(b))
        throw DimensionError("fedavg_round: incompatible architectures");
    nn::DenseNet avg = a;
    for (std::size_t l = 0; l < a.layer_count(); ++l) {
        auto& w = avg.mutable_weights(l);
        auto& bias = avg.mutable_biases(l);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 * (w[i] + b.weights(l)[i]);
        for (std::size_t i = 0; i < bias.size(); ++i) bias[i] = 0.5 * (bias[i] + b.biases(l)[i]);
    }
    return avg;
}

nn::DenseNet trailing_subnet(const nn::DenseNet& net, std::size_t layers) {
    const std::size_t first = net.layer_count() - layers;
    std::vector<std::size_t> sizes;
    std::vector<nn::Activation> acts;
    for (std::size_t l = first; l < net.layer_count(); ++l) {
        if (sizes.empty()) sizes.push_back(net.layer_in(l));
        sizes.push_back(net.layer_out(l));
        acts.push_back(net.activation(l));
    }
    nn::DenseNet sub(std::move(sizes), std::move(acts));
    for (std::size_t l = first; l < net.layer_count(); ++l) {
        sub.mutable_weights(l - first) = net.weights(l);
        sub.mutable_biases(l - first) = net.biases(l);
    }
    return sub;
}

StrategyOutcome make_outcome(std::string name, const CrossEvalResult& eval,
                             const CommLedger& ledger) {
    StrategyOutcome o;
    o.name = std::move(name);
    o.cross_mse = eval.mse;
    o.probe_accuracy = eval.probe_accuracy;
    o.downlink_bytes = ledger.total(Direction::downlink);
    o.uplink_bytes = ledger.total(Direction::uplink);
    return o;
}

}  // namespace

void EnvironmentPair::validate() const {
    dataset.validate();
    if (encoder_sizes.size() < 2 || generator_sizes.size() < 2)
        throw ConfigError("sync: encoder and generator need at least one layer");
    if (encoder_sizes.front() != dataset.dim())
        throw DimensionError("sync: dataset sample dimension != encoder input size");
    if (encoder_sizes.back() != generator_sizes.front())
        throw DimensionError("sync: encoder output size != generator input size");
    if (generator_sizes.back() != dataset.dim())
        throw DimensionError("sync: generator output size != sample dimension");
    if (encoder_acts.size() + 1 != encoder_sizes.size() ||
        generator_acts.size() + 1 != generator_sizes.size())
        throw ConfigError("sync: activation count must match layer count");
    if (batch_size == 0) throw ConfigError("sync: batch size must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("sync: learning rate must be > 0");
}

void CommLedger::add(std::string phase, Direction direction, std::uint64_t bytes) {
    entries.push_back({std::move(phase), direction, bytes});
}

std::uint64_t CommLedger::total() const {
    std::uint64_t sum = 0;
    for (const auto& e : entries) sum += e.bytes;
    return sum;
}

std::uint64_t CommLedger::total(Direction direction) const {
    std::uint64_t sum = 0;
    for (const auto& e : entries)
        if (e.direction == direction) sum += e.bytes;
    return sum;
}

TrainedPair train_pair(const EnvironmentPair& env) {
    env.validate();
    Rng rng(env.seed);
    auto encoder = nn::DenseNet::random(env.encoder_sizes, env.encoder_acts, rng);
    auto generator = nn::DenseNet::random(env.generator_sizes, env.generator_acts, rng);
    auto run = run_training(std::move(encoder), std::move(generator), env, env.epochs, rng,
                            nullptr);
    return {std::move(run.encoder), std::move(run.generator), std::move(run.loss_curve)};
}

data::LinearProbe make_recon_probe(const nn::DenseNet& encoder, const nn::DenseNet& generator,
                                   const data::Dataset& dataset) {
    check_pipeline(encoder, generator, dataset.dim());
    const auto& heldout = dataset.heldout_indices;
    if (heldout.size() < 2)
        throw ConfigError("cross_eval: held-out split too small");
    std::vector<std::vector<double>> features;
    std::vector<std::size_t> labels;
    for (std::size_t k = 0; k < heldout.size(); k += 2) {
        const auto& x = dataset.samples[heldout[k]];
        features.push_back(generator.evaluate(encoder.evaluate(x)));
        labels.push_back(dataset.labels[heldout[k]]);
    }
    return data::train_linear_probe(features, labels, dataset.n_classes);
}

CrossEvalResult cross_eval(const nn::DenseNet& encoder, const nn::DenseNet& generator,
                           const channel::VectorChannel& chan, const data::Dataset& dataset,
                           const data::LinearProbe& probe, Rng& rng) {
    check_pipeline(encoder, generator, dataset.dim());
    const auto& heldout = dataset.heldout_indices;
    if (heldout.size() < 2)
        throw ConfigError("cross_eval: held-out split too small");

    CrossEvalResult result;
    std::vector<std::vector<double>> eval_features;
    std::vector<std::size_t> eval_labels;
    for (std::size_t k = 0; k < heldout.size(); ++k) {
        const auto& x = dataset.samples[heldout[k]];
        const auto sent = chan.transmit(encoder.evaluate(x), rng);
        auto recon = generator.evaluate(sent);
        result.mse += nn::mse(recon, x);
        if (k % 2 == 1) {
            eval_features.push_back(std::move(recon));
            eval_labels.push_back(dataset.labels[heldout[k]]);
        }
    }
    result.mse /= static_cast<double>(heldout.size());
    result.probe_accuracy = data::probe_accuracy(probe, eval_features, eval_labels);
    return result;
}

FedavgResult fedavg_round(const TrainedPair& a, const TrainedPair& b, CommLedger& ledger) {
    FedavgResult avg{average_nets(a.encoder, b.encoder), average_nets(a.generator, b.generator)};
    ledger.add("fedavg_encoder", Direction::uplink, a.encoder.serialized_size());
    ledger.add("fedavg_generator", Direction::uplink, a.generator.serialized_size());
    ledger.add("fedavg_encoder", Direction::downlink, b.encoder.serialized_size());
    ledger.add("fedavg_generator", Direction::downlink, b.generator.serialized_size());
    return avg;
}

SplitSessionResult split_session(const nn::DenseNet& encoder, const nn::DenseNet& generator,
                                 const EnvironmentPair& env, std::size_t epochs) {
    env.validate();
    check_pipeline(encoder, generator, env.dataset.dim());
    Rng base(env.seed);
    Rng rng = base.fork(kSplitStreamTag);
    SplitSessionResult result{encoder, generator, {}, {}};
    auto run = run_training(encoder, generator, env, epochs, rng, &result.ledger);
    result.encoder = std::move(run.encoder);
    result.generator = std::move(run.generator);
    result.loss_curve = std::move(run.loss_curve);
    return result;
}

std::size_t fragment_layer_count(const nn::DenseNet& generator, double unfreeze_fraction) {
    if (unfreeze_fraction < 0.0 || unfreeze_fraction > 1.0)
        throw ConfigError("hybrid_sync: unfreeze fraction must be in [0, 1]");
    const double cells = unfreeze_fraction * static_cast<double>(generator.layer_count());
    return static_cast<std::size_t>(std::ceil(cells - 1e-9));
}

std::size_t fragment_bytes(const nn::DenseNet& generator, double unfreeze_fraction) {
    const std::size_t layers = fragment_layer_count(generator, unfreeze_fraction);
    if (layers == 0) return 0;
    return trailing_subnet(generator, layers).serialized_size();
}

HybridSyncResult hybrid_sync(const nn::DenseNet& encoder, const nn::DenseNet& foreign_generator,
                             const EnvironmentPair& env, double unfreeze_fraction,
                             std::size_t epochs) {
    env.validate();
    check_pipeline(encoder, foreign_generator, env.dataset.dim());
    const std::size_t unfrozen = fragment_layer_count(foreign_generator, unfreeze_fraction);

    CommLedger ledger;
    ledger.add("generator_download", Direction::downlink, foreign_generator.serialized_size());

    nn::DenseNet generator = foreign_generator;
    generator.set_all_frozen(true);
    for (std::size_t l = generator.layer_count() - unfrozen; l < generator.layer_count(); ++l)
        generator.set_layer_frozen(l, false);

    Rng base(env.seed);
    Rng rng = base.fork(kHybridStreamTag);
    auto run = run_training(encoder, std::move(generator), env, epochs, rng, nullptr);
    HybridSyncResult result{std::move(run.encoder), std::move(run.generator),
                            {},       unfrozen,     std::move(ledger),
                            std::move(run.loss_curve)};
    if (unfrozen > 0) {
        result.fragment = trailing_subnet(result.generator, unfrozen).serialize();
        result.ledger.add("fragment_upload", Direction::uplink, result.fragment.size());
    }
    return result;
}

StrategyComparison run_strategy_comparison(const EnvironmentPair& env_a,
                                           const EnvironmentPair& env_d,
                                           std::size_t sync_epochs, double partial_fraction) {
    auto pair_a = train_pair(env_a);
    auto pair_d = train_pair(env_d);
    // One consumer probe per pair, frozen before any sync so every strategy is
    // scored by the same classifier.
    const auto probe_a = make_recon_probe(pair_a.encoder, pair_a.generator, env_a.dataset);
    const auto probe_d = make_recon_probe(pair_d.encoder, pair_d.generator, env_d.dataset);

    Rng base(env_a.seed);
    Rng eval_base = base.fork(kEvalStreamTag);

    SyncReport report;
    {
        Rng r = eval_base.fork(0);
        report.within_pair_mse_a =
            cross_eval(pair_a.encoder, pair_a.generator, env_a.chan, env_a.dataset, probe_a, r)
                .mse;
    }
    {
        Rng r = eval_base.fork(1);
        report.within_pair_mse_d =
            cross_eval(pair_d.encoder, pair_d.generator, env_d.chan, env_d.dataset, probe_d, r)
                .mse;
    }
    {
        Rng r = eval_base.fork(2);
        const auto eval =
            cross_eval(pair_a.encoder, pair_d.generator, env_a.chan, env_a.dataset, probe_a, r);
        report.no_sync = make_outcome("no_sync", eval, CommLedger{});
    }
    auto sync_f0 = hybrid_sync(pair_a.encoder, pair_d.generator, env_a, 0.0, sync_epochs);
    {
        Rng r = eval_base.fork(3);
        const auto eval =
            cross_eval(sync_f0.encoder, pair_d.generator, env_a.chan, env_a.dataset, probe_a, r);
        report.download_only = make_outcome("download_only", eval, sync_f0.ledger);
    }
    auto sync_fp =
        hybrid_sync(pair_a.encoder, pair_d.generator, env_a, partial_fraction, sync_epochs);
    {
        Rng r = eval_base.fork(4);
        const auto eval =
            cross_eval(sync_fp.encoder, sync_fp.generator, env_a.chan, env_a.dataset, probe_a, r);
        report.download_upload = make_outcome("download_upload", eval, sync_fp.ledger);
    }
    return {std::move(pair_a), std::move(pair_d), std::move(sync_f0), std::move(sync_fp),
            std::move(report)};
}

SyncReport compare_strategies(const EnvironmentPair& env_a, const EnvironmentPair& env_d,
                              std::size_t sync_epochs, double partial_fraction) {
    return run_strategy_comparison(env_a, env_d, sync_epochs, partial_fraction).report;
}

}  // namespace smc::sync
