#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smc/channel.hpp"
#include "smc/dataset.hpp"
#include "smc/errors.hpp"
#include "smc/nn.hpp"
#include "smc/rng.hpp"

namespace smc::sync {

// One codec pair's data-channel environment and training hyperparameters.
struct EnvironmentPair {
    std::string dataset_id;
    data::Dataset dataset;
    channel::VectorChannel chan = channel::VectorChannel::clean();
    std::vector<std::size_t> encoder_sizes;
    std::vector<nn::Activation> encoder_acts;
    std::vector<std::size_t> generator_sizes;
    std::vector<nn::Activation> generator_acts;
    // Reconstruction loss averages over output dims, so its gradients scale
    // as 1/dim; the default learning rate compensates for dim ~ 64.
    double lr = 8.0;
    std::size_t epochs = 30;
    std::size_t batch_size = 16;
    std::uint64_t seed = 1;

    std::size_t sr_dim() const { return encoder_sizes.back(); }
    void validate() const;
};

enum class Direction { uplink, downlink };

struct LedgerEntry {
    std::string phase;
    Direction direction;
    std::uint64_t bytes = 0;
};

// Every byte count equals the serialized size of the object transferred.
struct CommLedger {
    std::vector<LedgerEntry> entries;

    void add(std::string phase, Direction direction, std::uint64_t bytes);
    std::uint64_t total() const;
    std::uint64_t total(Direction direction) const;
};

struct TrainedPair {
    nn::DenseNet encoder;
    nn::DenseNet generator;
    // loss_curve[0] is the pre-training evaluation mse; one entry per epoch after.
    std::vector<double> loss_curve;
};

// End-to-end reconstruction training through the channel. Noise is applied in
// the forward pass only; the backward pass treats the channel as identity.
TrainedPair train_pair(const EnvironmentPair& env);

struct CrossEvalResult {
    double mse = 0.0;
    double probe_accuracy = 0.0;
};

// Fixed task consumer for a codec pair: a deterministic linear classifier
// trained on the pair's own clean reconstructions of the even-position
// held-out samples. Kept fixed across sync strategies so pre/post probe
// accuracies are comparable.
data::LinearProbe make_recon_probe(const nn::DenseNet& encoder, const nn::DenseNet& generator,
                                   const data::Dataset& dataset);

// Pipeline encode -> channel -> generate over the held-out split; mse covers
// the full split. probe_accuracy scores the given consumer probe on channel
// reconstructions of the odd-position held-out samples (the even positions
// train the probe, and the sorted index list is class-ordered, so the
// interleave stratifies classes across both sides).
CrossEvalResult cross_eval(const nn::DenseNet& encoder, const nn::DenseNet& generator,
                           const channel::VectorChannel& chan, const data::Dataset& dataset,
                           const data::LinearProbe& probe, Rng& rng);

struct FedavgResult {
    nn::DenseNet encoder;
    nn::DenseNet generator;
};

// Elementwise parameter mean of two identically shaped pairs. The ledger
// grows by two full-model transfers in each direction.
FedavgResult fedavg_round(const TrainedPair& a, const TrainedPair& b, CommLedger& ledger);

struct SplitSessionResult {
    nn::DenseNet encoder;
    nn::DenseNet generator;
    CommLedger ledger;
    std::vector<double> loss_curve;
};

// Split training: encoder holder ships per-batch activations, generator
// holder returns per-batch gradients. Batching drops the final short batch,
// so ledger total = epochs * batches * 2 * batch_size * sr_dim * 8 bytes.
SplitSessionResult split_session(const nn::DenseNet& encoder, const nn::DenseNet& generator,
                                 const EnvironmentPair& env, std::size_t epochs);

struct HybridSyncResult {
    nn::DenseNet encoder;
    nn::DenseNet generator;
    // Retrained trailing layers shipped back; empty when unfreeze_fraction = 0.
    std::vector<std::uint8_t> fragment;
    std::size_t unfrozen_layers = 0;
    CommLedger ledger;
    std::vector<double> loss_curve;
};

// Four-step background sync: download the foreign generator, locally retrain
// the encoder plus the last ceil(f * L) generator layers through the emulated
// channel, then upload only the retrained generator fragment.
HybridSyncResult hybrid_sync(const nn::DenseNet& encoder, const nn::DenseNet& foreign_generator,
                             const EnvironmentPair& env, double unfreeze_fraction,
                             std::size_t epochs);

// Serialized trailing sub-network the fraction rule selects; the exact upload
// byte count for a given generator spec.
std::size_t fragment_layer_count(const nn::DenseNet& generator, double unfreeze_fraction);
std::size_t fragment_bytes(const nn::DenseNet& generator, double unfreeze_fraction);

struct StrategyOutcome {
    std::string name;
    double cross_mse = 0.0;
    double probe_accuracy = 0.0;
    std::uint64_t downlink_bytes = 0;
    std::uint64_t uplink_bytes = 0;
};

struct SyncReport {
    StrategyOutcome no_sync;
    StrategyOutcome download_only;    // f = 0
    StrategyOutcome download_upload;  // f = partial fraction
    double within_pair_mse_a = 0.0;
    double within_pair_mse_d = 0.0;
};

// Comparison plus every intermediate artifact (trained pairs, sync sessions),
// for callers that persist models and curves.
struct StrategyComparison {
    TrainedPair pair_a;
    TrainedPair pair_d;
    HybridSyncResult download_only_sync;
    HybridSyncResult download_upload_sync;
    SyncReport report;
};

StrategyComparison run_strategy_comparison(const EnvironmentPair& env_a,
                                           const EnvironmentPair& env_d,
                                           std::size_t sync_epochs, double partial_fraction);

// Trains both pairs independently, then compares the three background-sync
// strategies on pair A's held-out data against pair D's generator.
SyncReport compare_strategies(const EnvironmentPair& env_a, const EnvironmentPair& env_d,
                              std::size_t sync_epochs, double partial_fraction);

}  // namespace smc::sync
