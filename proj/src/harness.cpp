#include "smc/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <initializer_list>
#include <set>

#include "smc/channel.hpp"
#include "smc/dataset.hpp"
#include "smc/lewis.hpp"
#include "smc/marl.hpp"
#include "smc/nn.hpp"
#include "smc/rng.hpp"
#include "smc/symbolic.hpp"
#include "smc/sync.hpp"
#include "smc/util.hpp"

namespace smc::harness {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
}

bool is_nonnegative_integer(const json& v) {
    if (v.is_number_unsigned()) return true;
    return v.is_number_integer() && v.get<std::int64_t>() >= 0;
}

std::size_t get_size(const json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!is_nonnegative_integer(j.at(key)))
        throw ConfigError(std::string("config: '") + key + "' must be a non-negative integer");
    return j.at(key).get<std::size_t>();
}

double get_double(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number())
        throw ConfigError(std::string("config: '") + key + "' must be a number");
    return j.at(key).get<double>();
}

std::string get_string(const json& j, const char* key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string())
        throw ConfigError(std::string("config: '") + key + "' must be a string");
    return j.at(key).get<std::string>();
}

std::vector<std::size_t> get_size_list(const json& j, const char* key,
                                       std::vector<std::size_t> fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_array() || j.at(key).empty())
        throw ConfigError(std::string("config: '") + key + "' must be a non-empty array");
    std::vector<std::size_t> out;
    for (const auto& v : j.at(key)) {
        if (!is_nonnegative_integer(v))
            throw ConfigError(std::string("config: '") + key +
                              "' entries must be non-negative integers");
        out.push_back(v.get<std::size_t>());
    }
    return out;
}

ChannelSpec channel_spec_from_json(const json& j, const std::string& where) {
    check_keys(j, where, {"kind", "sigma", "levels", "flip_p"});
    ChannelSpec spec;
    spec.kind = get_string(j, "kind", "clean");
    if (spec.kind != "clean" && spec.kind != "additive_gaussian" &&
        spec.kind != "quantize_then_dmc")
        throw ConfigError("config: unknown channel kind '" + spec.kind + "'");
    spec.sigma = get_double(j, "sigma", 0.0);
    spec.levels = get_size(j, "levels", 16);
    spec.flip_p = get_double(j, "flip_p", 0.0);
    return spec;
}

ordered_json channel_spec_to_json(const ChannelSpec& spec) {
    ordered_json j;
    j["kind"] = spec.kind;
    j["sigma"] = spec.sigma;
    j["levels"] = spec.levels;
    j["flip_p"] = spec.flip_p;
    return j;
}

channel::VectorChannel make_channel(const ChannelSpec& spec) {
    if (spec.kind == "clean") return channel::VectorChannel::clean();
    if (spec.kind == "additive_gaussian")
        return channel::VectorChannel::additive_gaussian(spec.sigma);
    return channel::VectorChannel::quantize_then_dmc(
        spec.levels, channel::DiscreteChannel::symmetric(spec.levels, spec.flip_p));
}

std::optional<IdxPaths> idx_paths_from_json(const json& j, const char* key,
                                            const std::string& where) {
    if (!j.contains(key)) return std::nullopt;
    check_keys(j.at(key), where, {"images", "labels"});
    IdxPaths paths;
    paths.images = get_string(j.at(key), "images", "");
    paths.labels = get_string(j.at(key), "labels", "");
    if (paths.images.empty() || paths.labels.empty())
        throw ConfigError("config: " + where + " needs both 'images' and 'labels'");
    return paths;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ConfigError("median of empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Records every file written under the run directory for the manifest.
class RunWriter {
public:
    explicit RunWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    const std::filesystem::path& dir() const { return dir_; }

    void write_text(const std::string& relative, const std::string& text) {
        util::write_file_text(dir_ / relative, text);
        record(relative, util::fnv1a_hex(text), text.size());
    }

    void write_bytes(const std::string& relative, std::span<const std::uint8_t> bytes) {
        util::write_file_bytes(dir_ / relative, bytes);
        record(relative, util::fnv1a_hex(bytes), bytes.size());
    }

    ordered_json file_manifest() const {
        ordered_json files = ordered_json::array();
        for (const auto& f : files_) {
            ordered_json entry;
            entry["path"] = f.path;
            entry["bytes"] = f.bytes;
            entry["checksum"] = f.checksum;
            files.push_back(entry);
        }
        return files;
    }

private:
    struct FileRecord {
        std::string path;
        std::string checksum;
        std::size_t bytes;
    };

    void record(const std::string& path, std::string checksum, std::size_t bytes) {
        files_.push_back({path, std::move(checksum), bytes});
        std::sort(files_.begin(), files_.end(),
                  [](const FileRecord& a, const FileRecord& b) { return a.path < b.path; });
    }

    std::filesystem::path dir_;
    std::vector<FileRecord> files_;
};

std::string curve_csv(const std::vector<double>& curve) {
    std::string out = "epoch,mse\n";
    for (std::size_t i = 0; i < curve.size(); ++i)
        out += std::to_string(i) + "," + util::format_double_12(curve[i]) + "\n";
    return out;
}

std::string reward_curve_csv(const std::vector<double>& curve, std::size_t stride) {
    std::string out = "episode,reward_moving_average\n";
    for (std::size_t i = 0; i < curve.size(); i += stride)
        out += std::to_string(i) + "," + util::format_double_12(curve[i]) + "\n";
    return out;
}

std::string message_log_csv(const std::vector<marl::ExecutionLogEntry>& log,
                            std::size_t message_dim) {
    std::string out = "state";
    for (std::size_t i = 0; i < message_dim; ++i) out += ",cell_" + std::to_string(i);
    out += ",action\n";
    for (const auto& e : log) {
        out += std::to_string(e.state);
        for (std::size_t i = 0; i < message_dim; ++i)
            out += "," + (i < e.message_cells.size() ? std::to_string(e.message_cells[i]) : "");
        out += "," + std::to_string(e.action) + "\n";
    }
    return out;
}

ordered_json outcome_to_json(const sync::StrategyOutcome& o) {
    ordered_json j;
    j["name"] = o.name;
    j["cross_mse"] = o.cross_mse;
    j["probe_accuracy"] = o.probe_accuracy;
    j["downlink_bytes"] = o.downlink_bytes;
    j["uplink_bytes"] = o.uplink_bytes;
    return j;
}

ordered_json sync_report_to_json(const sync::SyncReport& report) {
    ordered_json j;
    j["within_pair_mse_a"] = report.within_pair_mse_a;
    j["within_pair_mse_d"] = report.within_pair_mse_d;
    j["strategies"] = ordered_json::array();
    j["strategies"].push_back(outcome_to_json(report.no_sync));
    j["strategies"].push_back(outcome_to_json(report.download_only));
    j["strategies"].push_back(outcome_to_json(report.download_upload));
    return j;
}

sync::EnvironmentPair make_environment(const HeteroSyncParams& p, data::Corpus corpus,
                                       const std::optional<IdxPaths>& idx, std::uint64_t seed,
                                       std::uint64_t dataset_seed) {
    sync::EnvironmentPair env;
    if (idx.has_value()) {
        env.dataset_id = idx->images;
        env.dataset = data::parse_idx(util::read_file_bytes(idx->images),
                                      util::read_file_bytes(idx->labels), p.heldout_fraction,
                                      dataset_seed);
    } else {
        env.dataset_id = data::corpus_name(corpus);
        env.dataset = data::make_synthetic(corpus, p.n_per_class, dataset_seed,
                                           p.heldout_fraction);
    }
    env.chan = make_channel(p.channel);
    const std::size_t dim = env.dataset.dim();
    using nn::Activation;
    env.encoder_sizes = {dim, 2 * p.sr_dim, p.sr_dim};
    env.encoder_acts = {Activation::tanh, Activation::tanh};
    env.generator_sizes = {p.sr_dim, 4 * p.sr_dim, p.sr_dim, dim};
    env.generator_acts = {Activation::tanh, Activation::tanh, Activation::sigmoid};
    env.lr = p.lr;
    env.epochs = p.epochs;
    env.batch_size = p.batch_size;
    env.seed = seed;
    return env;
}

ordered_json run_lewis_sweep(const ExperimentConfig& config, RunWriter& writer) {
    const auto& p = config.lewis;
    ordered_json cells = ordered_json::array();
    for (std::size_t types : p.types_list) {
        for (std::size_t signals : p.signals_list) {
            const auto chan = p.flip_p > 0.0
                                  ? channel::DiscreteChannel::symmetric(signals, p.flip_p)
                                  : channel::DiscreteChannel::identity(signals);
            const auto game = lewis::SignalingGame::standard(types, signals, types, chan);
            ordered_json cell;
            cell["n_types"] = types;
            cell["n_signals"] = signals;
            cell["results"] = ordered_json::array();
            std::size_t separating = 0;
            for (std::uint64_t seed : config.seeds) {
                Rng base(seed);
                Rng rng = base.fork(types * 100 + signals);
                lewis::TrainConfig train;
                train.max_rounds = p.max_rounds;
                train.window = p.window;
                const auto [policies, report] = lewis::train_to_equilibrium(game, train, rng);
                ordered_json r;
                r["seed"] = seed;
                r["converged"] = report.converged;
                r["rounds"] = report.rounds;
                r["is_nash"] = report.is_nash;
                r["classification"] = lewis::equilibrium_class_name(report.classification);
                r["greedy_expected_payoff"] = report.greedy_expected_payoff;
                cell["results"].push_back(r);
                if (report.classification == lewis::EquilibriumClass::separating) ++separating;
            }
            cell["separating_count"] = separating;
            cells.push_back(cell);
        }
    }
    ordered_json metrics;
    metrics["cells"] = cells;
    (void)writer;
    return metrics;
}

ordered_json run_hetero_sync(const ExperimentConfig& config, RunWriter& writer) {
    const auto& p = config.sync;
    ordered_json per_seed = ordered_json::array();
    std::vector<double> mse_no_sync, mse_f0, mse_fp, probe_no_sync, probe_f0, probe_fp;
    for (std::uint64_t seed : config.seeds) {
        const auto env_a =
            make_environment(p, data::Corpus::bars, p.idx_a, seed, seed * 2 + 1);
        const auto env_d = make_environment(p, data::Corpus::blobs, p.idx_b,
                                            seed ^ 0x9e3779b97f4a7c15ULL, seed * 2 + 2);
        const auto comparison =
            sync::run_strategy_comparison(env_a, env_d, p.sync_epochs, p.partial_fraction);
        const auto& report = comparison.report;

        const std::string prefix = "seed_" + std::to_string(seed) + "/";
        writer.write_text(prefix + "sync_report.json",
                          util::dump_json_12(sync_report_to_json(report)));
        writer.write_text(prefix + "curve_pair_a.csv", curve_csv(comparison.pair_a.loss_curve));
        writer.write_text(prefix + "curve_pair_d.csv", curve_csv(comparison.pair_d.loss_curve));
        writer.write_text(prefix + "curve_download_only.csv",
                          curve_csv(comparison.download_only_sync.loss_curve));
        writer.write_text(prefix + "curve_download_upload.csv",
                          curve_csv(comparison.download_upload_sync.loss_curve));
        writer.write_bytes(prefix + "encoder_a.smnn", comparison.pair_a.encoder.serialize());
        writer.write_bytes(prefix + "generator_a.smnn", comparison.pair_a.generator.serialize());
        writer.write_bytes(prefix + "encoder_d.smnn", comparison.pair_d.encoder.serialize());
        writer.write_bytes(prefix + "generator_d.smnn", comparison.pair_d.generator.serialize());
        if (!comparison.download_upload_sync.fragment.empty())
            writer.write_bytes(prefix + "fragment_upload.smnn",
                               comparison.download_upload_sync.fragment);

        ordered_json entry;
        entry["seed"] = seed;
        entry["report"] = sync_report_to_json(report);
        per_seed.push_back(entry);
        mse_no_sync.push_back(report.no_sync.cross_mse);
        mse_f0.push_back(report.download_only.cross_mse);
        mse_fp.push_back(report.download_upload.cross_mse);
        probe_no_sync.push_back(report.no_sync.probe_accuracy);
        probe_f0.push_back(report.download_only.probe_accuracy);
        probe_fp.push_back(report.download_upload.probe_accuracy);
    }

    ordered_json metrics;
    metrics["per_seed"] = per_seed;
    ordered_json med;
    med["no_sync_mse"] = median(mse_no_sync);
    med["download_only_mse"] = median(mse_f0);
    med["download_upload_mse"] = median(mse_fp);
    med["no_sync_probe_accuracy"] = median(probe_no_sync);
    med["download_only_probe_accuracy"] = median(probe_f0);
    med["download_upload_probe_accuracy"] = median(probe_fp);
    metrics["median"] = med;
    metrics["ordering_holds"] =
        med["no_sync_mse"].get<double>() > med["download_only_mse"].get<double>() &&
        med["download_only_mse"].get<double>() > med["download_upload_mse"].get<double>();
    return metrics;
}

ordered_json run_marl_extract(const ExperimentConfig& config, RunWriter& writer) {
    const auto& p = config.marl;
    marl::ReferentialEnv env{p.n_targets};
    marl::MarlConfig train_config;
    train_config.episodes = p.episodes;
    train_config.lr = p.lr;
    train_config.message_noise_sigma = p.sigma;
    train_config.execution_levels = p.execution_levels;
    train_config.message_dim = p.message_dim;
    train_config.hidden = p.hidden;

    ordered_json per_seed = ordered_json::array();
    std::vector<double> final_rewards, execution_rewards, fidelities;
    for (std::uint64_t seed : config.seeds) {
        Rng rng(seed);
        const auto outcome = marl::ctde_train(env, train_config, rng);
        Rng exec_rng = rng.fork(0x65786563);
        const auto execution = marl::execute(outcome.actors, env, p.execution_episodes,
                                             p.execution_levels, exec_rng);
        const auto sr_report = marl::emergent_sr_report(execution.log);
        const auto table =
            symbolic::enumerate_mappings(outcome.actors, env, p.execution_levels);
        const auto clustered =
            symbolic::cluster_srs(table, symbolic::MergeRule{p.merge_radius});
        const auto graph = symbolic::build_graph(clustered);
        const double fid = symbolic::fidelity(graph, outcome.actors, env, p.execution_levels);

        const std::string prefix = "seed_" + std::to_string(seed) + "/";
        writer.write_bytes(prefix + "speaker.smnn", outcome.actors.speaker.serialize());
        writer.write_bytes(prefix + "listener.smnn", outcome.actors.listener.serialize());
        ordered_json meta;
        meta["n_targets"] = p.n_targets;
        meta["message_dim"] = p.message_dim;
        meta["execution_levels"] = p.execution_levels;
        meta["merge_radius"] = p.merge_radius;
        writer.write_text(prefix + "meta.json", util::dump_json_12(meta));
        writer.write_text(prefix + "reward_curve.csv",
                          reward_curve_csv(outcome.reward_curve,
                                           std::max<std::size_t>(1, p.episodes / 200)));
        writer.write_text(prefix + "message_log.csv",
                          message_log_csv(execution.log, p.message_dim));
        writer.write_text(prefix + "graph.json",
                          util::dump_json_12(symbolic::graph_to_json(graph)));
        writer.write_text(prefix + "graph.dot", symbolic::graph_to_dot(graph));
        writer.write_text(prefix + "program.pl", symbolic::emit_problog(graph));

        ordered_json entry;
        entry["seed"] = seed;
        entry["final_training_reward"] = outcome.final_reward;
        entry["execution_reward"] = execution.mean_reward;
        entry["mutual_information_bits"] = sr_report.mutual_information_bits;
        entry["graph_entropy_uniform"] =
            symbolic::graph_entropy(graph, symbolic::GraphWeighting::uniform);
        entry["graph_entropy_support"] =
            symbolic::graph_entropy(graph, symbolic::GraphWeighting::support);
        entry["fidelity"] = fid;
        entry["sr_nodes"] = graph.sr_nodes.size();
        per_seed.push_back(entry);
        final_rewards.push_back(outcome.final_reward);
        execution_rewards.push_back(execution.mean_reward);
        fidelities.push_back(fid);
    }

    ordered_json metrics;
    metrics["per_seed"] = per_seed;
    ordered_json med;
    med["final_training_reward"] = median(final_rewards);
    med["execution_reward"] = median(execution_rewards);
    med["fidelity"] = median(fidelities);
    metrics["median"] = med;
    return metrics;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    check_keys(j, "top level", {"scenario", "seeds", "output", "lewis_sweep", "hetero_sync",
                                "marl_extract"});
    ExperimentConfig config;
    config.scenario = get_string(j, "scenario", "");
    if (config.scenario != "lewis_sweep" && config.scenario != "hetero_sync" &&
        config.scenario != "marl_extract")
        throw ConfigError("config: scenario must be one of lewis_sweep, hetero_sync, "
                          "marl_extract (got '" + config.scenario + "')");
    for (const char* section : {"lewis_sweep", "hetero_sync", "marl_extract"})
        if (j.contains(section) && config.scenario != section)
            throw ConfigError("config: section '" + std::string(section) +
                              "' does not match scenario '" + config.scenario + "'");

    if (j.contains("seeds")) {
        if (!j.at("seeds").is_array() || j.at("seeds").empty())
            throw ConfigError("config: 'seeds' must be a non-empty array");
        config.seeds.clear();
        for (const auto& s : j.at("seeds")) {
            if (!is_nonnegative_integer(s))
                throw ConfigError("config: seeds must be non-negative integers");
            config.seeds.push_back(s.get<std::uint64_t>());
        }
    }
    config.output = get_string(j, "output", "runs/" + config.scenario);

    if (config.scenario == "lewis_sweep" && j.contains("lewis_sweep")) {
        const auto& s = j.at("lewis_sweep");
        check_keys(s, "lewis_sweep",
                   {"types_list", "signals_list", "max_rounds", "window", "flip_p"});
        config.lewis.types_list = get_size_list(s, "types_list", config.lewis.types_list);
        config.lewis.signals_list = get_size_list(s, "signals_list", config.lewis.signals_list);
        config.lewis.max_rounds = get_size(s, "max_rounds", config.lewis.max_rounds);
        config.lewis.window = get_size(s, "window", config.lewis.window);
        config.lewis.flip_p = get_double(s, "flip_p", config.lewis.flip_p);
    }
    if (config.scenario == "hetero_sync" && j.contains("hetero_sync")) {
        const auto& s = j.at("hetero_sync");
        check_keys(s, "hetero_sync",
                   {"n_per_class", "heldout_fraction", "sr_dim", "epochs", "sync_epochs",
                    "batch_size", "lr", "partial_fraction", "channel", "idx_a", "idx_b"});
        config.sync.n_per_class = get_size(s, "n_per_class", config.sync.n_per_class);
        config.sync.heldout_fraction =
            get_double(s, "heldout_fraction", config.sync.heldout_fraction);
        config.sync.sr_dim = get_size(s, "sr_dim", config.sync.sr_dim);
        config.sync.epochs = get_size(s, "epochs", config.sync.epochs);
        config.sync.sync_epochs = get_size(s, "sync_epochs", config.sync.sync_epochs);
        config.sync.batch_size = get_size(s, "batch_size", config.sync.batch_size);
        config.sync.lr = get_double(s, "lr", config.sync.lr);
        config.sync.partial_fraction =
            get_double(s, "partial_fraction", config.sync.partial_fraction);
        if (s.contains("channel"))
            config.sync.channel = channel_spec_from_json(s.at("channel"), "hetero_sync.channel");
        config.sync.idx_a = idx_paths_from_json(s, "idx_a", "hetero_sync.idx_a");
        config.sync.idx_b = idx_paths_from_json(s, "idx_b", "hetero_sync.idx_b");
    }
    if (config.scenario == "marl_extract" && j.contains("marl_extract")) {
        const auto& s = j.at("marl_extract");
        check_keys(s, "marl_extract",
                   {"n_targets", "episodes", "lr", "sigma", "message_dim", "hidden",
                    "execution_levels", "execution_episodes", "merge_radius"});
        config.marl.n_targets = get_size(s, "n_targets", config.marl.n_targets);
        config.marl.episodes = get_size(s, "episodes", config.marl.episodes);
        config.marl.lr = get_double(s, "lr", config.marl.lr);
        config.marl.sigma = get_double(s, "sigma", config.marl.sigma);
        config.marl.message_dim = get_size(s, "message_dim", config.marl.message_dim);
        config.marl.hidden = get_size(s, "hidden", config.marl.hidden);
        config.marl.execution_levels =
            get_size(s, "execution_levels", config.marl.execution_levels);
        config.marl.execution_episodes =
            get_size(s, "execution_episodes", config.marl.execution_episodes);
        config.marl.merge_radius = get_size(s, "merge_radius", config.marl.merge_radius);
    }
    return config;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(util::read_file_text(path));
    } catch (const json::exception& ex) {
        throw SmcParseError("config " + path.string() + ": " + ex.what());
    }
    return from_json(j);
}

ordered_json ExperimentConfig::to_json() const {
    ordered_json j;
    j["scenario"] = scenario;
    j["seeds"] = seeds;
    j["output"] = output;
    if (scenario == "lewis_sweep") {
        ordered_json s;
        s["types_list"] = lewis.types_list;
        s["signals_list"] = lewis.signals_list;
        s["max_rounds"] = lewis.max_rounds;
        s["window"] = lewis.window;
        s["flip_p"] = lewis.flip_p;
        j["lewis_sweep"] = s;
    } else if (scenario == "hetero_sync") {
        ordered_json s;
        s["n_per_class"] = sync.n_per_class;
        s["heldout_fraction"] = sync.heldout_fraction;
        s["sr_dim"] = sync.sr_dim;
        s["epochs"] = sync.epochs;
        s["sync_epochs"] = sync.sync_epochs;
        s["batch_size"] = sync.batch_size;
        s["lr"] = sync.lr;
        s["partial_fraction"] = sync.partial_fraction;
        s["channel"] = channel_spec_to_json(sync.channel);
        if (sync.idx_a.has_value()) {
            ordered_json idx;
            idx["images"] = sync.idx_a->images;
            idx["labels"] = sync.idx_a->labels;
            s["idx_a"] = idx;
        }
        if (sync.idx_b.has_value()) {
            ordered_json idx;
            idx["images"] = sync.idx_b->images;
            idx["labels"] = sync.idx_b->labels;
            s["idx_b"] = idx;
        }
        j["hetero_sync"] = s;
    } else if (scenario == "marl_extract") {
        ordered_json s;
        s["n_targets"] = marl.n_targets;
        s["episodes"] = marl.episodes;
        s["lr"] = marl.lr;
        s["sigma"] = marl.sigma;
        s["message_dim"] = marl.message_dim;
        s["hidden"] = marl.hidden;
        s["execution_levels"] = marl.execution_levels;
        s["execution_episodes"] = marl.execution_episodes;
        s["merge_radius"] = marl.merge_radius;
        j["marl_extract"] = s;
    }
    return j;
}

std::filesystem::path resolve_output_dir(const std::string& output) {
    if (output.empty()) throw ConfigError("config: empty output directory");
    std::filesystem::path path(output);
    const char* root = std::getenv(kOutputRootEnv);
    if (root != nullptr && *root != '\0' && path.is_relative())
        path = std::filesystem::path(root) / path;
    return path;
}

std::filesystem::path run_scenario(const ExperimentConfig& config) {
    RunWriter writer(resolve_output_dir(config.output));
    const std::string config_text = util::dump_json_12(config.to_json());
    writer.write_text("config.json", config_text);

    ordered_json metrics;
    metrics["scenario"] = config.scenario;
    metrics["seeds"] = config.seeds;
    if (config.scenario == "lewis_sweep")
        metrics["lewis_sweep"] = run_lewis_sweep(config, writer);
    else if (config.scenario == "hetero_sync")
        metrics["hetero_sync"] = run_hetero_sync(config, writer);
    else
        metrics["marl_extract"] = run_marl_extract(config, writer);
    writer.write_text("metrics.json", util::dump_json_12(metrics));

    ordered_json manifest;
    manifest["scenario"] = config.scenario;
    manifest["config_checksum"] = util::fnv1a_hex(config_text);
    manifest["seeds"] = config.seeds;
    manifest["files"] = writer.file_manifest();
    util::write_file_text(writer.dir() / "manifest.json", util::dump_json_12(manifest));
    return writer.dir();
}

void extract_actors(const std::filesystem::path& actors_dir,
                    const std::filesystem::path& out_dir) {
    const auto speaker =
        nn::DenseNet::deserialize(util::read_file_bytes(actors_dir / "speaker.smnn"));
    const auto listener =
        nn::DenseNet::deserialize(util::read_file_bytes(actors_dir / "listener.smnn"));

    std::size_t n_targets = speaker.input_size();
    std::size_t execution_levels = 16;
    std::size_t merge_radius = 0;
    const auto meta_path = actors_dir / "meta.json";
    if (std::filesystem::exists(meta_path)) {
        json meta;
        try {
            meta = json::parse(util::read_file_text(meta_path));
        } catch (const json::exception& ex) {
            throw SmcParseError("meta.json: " + std::string(ex.what()));
        }
        check_keys(meta, "meta.json",
                   {"n_targets", "message_dim", "execution_levels", "merge_radius"});
        n_targets = get_size(meta, "n_targets", n_targets);
        execution_levels = get_size(meta, "execution_levels", execution_levels);
        merge_radius = get_size(meta, "merge_radius", merge_radius);
    }

    const marl::Actors actors{speaker, listener};
    const marl::ReferentialEnv env{n_targets};
    const auto table = symbolic::enumerate_mappings(actors, env, execution_levels);
    const auto clustered = symbolic::cluster_srs(table, symbolic::MergeRule{merge_radius});
    const auto graph = symbolic::build_graph(clustered);

    RunWriter writer(out_dir);
    writer.write_text("graph.json", util::dump_json_12(symbolic::graph_to_json(graph)));
    writer.write_text("graph.dot", symbolic::graph_to_dot(graph));
    writer.write_text("program.pl", symbolic::emit_problog(graph));

    ordered_json report;
    report["n_targets"] = n_targets;
    report["execution_levels"] = execution_levels;
    report["merge_radius"] = merge_radius;
    report["sr_nodes"] = ordered_json::array();
    for (const auto& node : graph.sr_nodes) {
        ordered_json n;
        n["label"] = node.label;
        n["support"] = node.support;
        n["entropy_bits"] = symbolic::expression_entropy(node);
        report["sr_nodes"].push_back(n);
    }
    report["graph_entropy_uniform"] =
        symbolic::graph_entropy(graph, symbolic::GraphWeighting::uniform);
    report["graph_entropy_support"] =
        symbolic::graph_entropy(graph, symbolic::GraphWeighting::support);
    report["fidelity"] = symbolic::fidelity(graph, actors, env, execution_levels);
    writer.write_text("entropy_report.json", util::dump_json_12(report));

    ordered_json manifest;
    manifest["source"] = "extract";
    manifest["files"] = writer.file_manifest();
    util::write_file_text(writer.dir() / "manifest.json", util::dump_json_12(manifest));
}

std::string summarize_run(const std::filesystem::path& run_dir) {
    json manifest, metrics;
    try {
        manifest = json::parse(util::read_file_text(run_dir / "manifest.json"));
        metrics = json::parse(util::read_file_text(run_dir / "metrics.json"));
    } catch (const json::exception& ex) {
        throw SmcParseError("run dir " + run_dir.string() + ": " + ex.what());
    }

    std::string out;
    const std::string scenario = metrics.value("scenario", std::string("unknown"));
    out += "scenario: " + scenario + "\n";
    out += "seeds:";
    for (const auto& s : metrics.value("seeds", json::array()))
        out += " " + std::to_string(s.get<std::uint64_t>());
    out += "\n";
    out += "files: " + std::to_string(manifest.value("files", json::array()).size()) + "\n";

    if (scenario == "lewis_sweep" && metrics.contains("lewis_sweep")) {
        for (const auto& cell : metrics["lewis_sweep"]["cells"]) {
            out += "  " + std::to_string(cell["n_types"].get<std::size_t>()) + " types x " +
                   std::to_string(cell["n_signals"].get<std::size_t>()) + " signals: " +
                   std::to_string(cell["separating_count"].get<std::size_t>()) + "/" +
                   std::to_string(cell["results"].size()) + " separating\n";
        }
    } else if (scenario == "hetero_sync" && metrics.contains("hetero_sync")) {
        const auto& med = metrics["hetero_sync"]["median"];
        out += "  median cross mse: no_sync " +
               util::format_double_12(med["no_sync_mse"].get<double>()) + ", download_only " +
               util::format_double_12(med["download_only_mse"].get<double>()) +
               ", download_upload " +
               util::format_double_12(med["download_upload_mse"].get<double>()) + "\n";
        out += std::string("  strategy ordering holds: ") +
               (metrics["hetero_sync"]["ordering_holds"].get<bool>() ? "yes" : "no") + "\n";
    } else if (scenario == "marl_extract" && metrics.contains("marl_extract")) {
        const auto& med = metrics["marl_extract"]["median"];
        out += "  median final training reward: " +
               util::format_double_12(med["final_training_reward"].get<double>()) + "\n";
        out += "  median execution reward: " +
               util::format_double_12(med["execution_reward"].get<double>()) + "\n";
        out += "  median fidelity: " + util::format_double_12(med["fidelity"].get<double>()) +
               "\n";
    }
    return out;
}

}  // namespace smc::harness
