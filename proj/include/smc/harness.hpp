#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smc/errors.hpp"

namespace smc::harness {

// Channel description compact enough for config files. quantize_then_dmc uses
// a symmetric per-symbol confusion with flip probability flip_p.
struct ChannelSpec {
    std::string kind = "clean";  // clean | additive_gaussian | quantize_then_dmc
    double sigma = 0.0;
    std::size_t levels = 16;
    double flip_p = 0.0;
};

struct LewisSweepParams {
    std::vector<std::size_t> types_list = {2, 3};
    std::vector<std::size_t> signals_list = {2, 3};
    std::size_t max_rounds = 50000;
    std::size_t window = 1000;
    double flip_p = 0.0;  // 0 = noiseless signal channel
};

struct IdxPaths {
    std::string images;
    std::string labels;
};

struct HeteroSyncParams {
    std::size_t n_per_class = 40;
    double heldout_fraction = 0.25;
    std::size_t sr_dim = 16;
    std::size_t epochs = 30;
    std::size_t sync_epochs = 20;
    std::size_t batch_size = 16;
    double lr = 8.0;  // reconstruction loss averages over ~64 dims
    double partial_fraction = 1.0 / 3.0;
    ChannelSpec channel{"additive_gaussian", 0.05, 16, 0.0};
    std::optional<IdxPaths> idx_a;  // replaces the bars corpus when set
    std::optional<IdxPaths> idx_b;  // replaces the blobs corpus when set
};

struct MarlExtractParams {
    std::size_t n_targets = 4;
    std::size_t episodes = 20000;
    double lr = 0.05;
    double sigma = 0.3;
    std::size_t message_dim = 2;
    std::size_t hidden = 16;
    std::size_t execution_levels = 16;
    std::size_t execution_episodes = 2000;
    std::size_t merge_radius = 0;
};

// Scenario kind, its parameters, seed list, output directory. Parsing rejects
// unknown keys at every level; a run is reproducible from config plus seed.
struct ExperimentConfig {
    std::string scenario;
    std::vector<std::uint64_t> seeds = {1};
    std::string output;

    LewisSweepParams lewis;
    HeteroSyncParams sync;
    MarlExtractParams marl;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::filesystem::path& path);
    nlohmann::ordered_json to_json() const;
};

// Name of the environment variable that re-roots relative output paths.
inline constexpr const char* kOutputRootEnv = "SMC_OUTPUT_ROOT";

std::filesystem::path resolve_output_dir(const std::string& output);

// Runs the configured scenario for every seed, writing metrics.json, CSV
// curves, models, scenario artifacts and a checksum manifest. Returns the
// output directory. Metrics doubles are printed at 12 significant digits, so
// a rerun with identical config and seeds is byte-identical.
std::filesystem::path run_scenario(const ExperimentConfig& config);

// Standalone extraction: reads speaker.smnn, listener.smnn and meta.json from
// actors_dir and writes the symbolic artifacts to out_dir.
void extract_actors(const std::filesystem::path& actors_dir,
                    const std::filesystem::path& out_dir);

// Human-readable summary of a finished run directory.
std::string summarize_run(const std::filesystem::path& run_dir);

}  // namespace smc::harness
