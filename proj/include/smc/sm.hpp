#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smc/channel.hpp"
#include "smc/errors.hpp"
#include "smc/nn.hpp"
#include "smc/rng.hpp"
#include "smc/symbolic.hpp"

namespace smc::sm {

enum class Modality : std::uint8_t { generic = 0, visual = 1, audio = 2, haptic = 3 };

const char* modality_name(Modality m);

struct SemanticRepresentation {
    std::vector<double> values;
    Modality modality = Modality::generic;
};

nlohmann::ordered_json channel_to_json(const channel::VectorChannel& chan);
channel::VectorChannel channel_from_json(const nlohmann::json& j);

// Serialized network knowledge keyed by agent id, channel models keyed by
// (from, to) agent pair, and optional symbolic-graph knowledge keyed by id.
class KnowledgeStore {
public:
    void put_network(const std::string& agent_id, const nn::DenseNet& net);
    void put_network_bytes(const std::string& agent_id, std::vector<std::uint8_t> bytes);
    bool has_network(const std::string& agent_id) const;
    nn::DenseNet network(const std::string& agent_id) const;
    const std::vector<std::uint8_t>& network_bytes(const std::string& agent_id) const;
    std::vector<std::string> network_ids() const;

    void put_channel(const std::string& from, const std::string& to,
                     channel::VectorChannel chan);
    bool has_channel(const std::string& from, const std::string& to) const;
    const channel::VectorChannel& channel_model(const std::string& from,
                                                const std::string& to) const;

    void put_graph(const std::string& id, symbolic::SymbolicGraph graph);
    bool has_graph(const std::string& id) const;
    const symbolic::SymbolicGraph& graph(const std::string& id) const;
    std::vector<std::string> graph_ids() const;

    // Directory layout: manifest.json plus one file per serialized network
    // ("<agent>.smnn") and per graph ("graph_<id>.json"); the manifest lists
    // ids, channel specs, byte counts and checksums.
    void save(const std::filesystem::path& dir) const;
    static KnowledgeStore load(const std::filesystem::path& dir);

private:
    std::map<std::string, std::vector<std::uint8_t>> networks_;
    std::map<std::pair<std::string, std::string>, channel::VectorChannel> channels_;
    std::map<std::string, symbolic::SymbolicGraph> graphs_;
};

// Agent-level composite. The encoder's output and the generator's input share
// the SR dimension, which must be positive.
struct SemanticMultiverse {
    std::string agent_id;
    nn::DenseNet encoder;
    nn::DenseNet generator;
    KnowledgeStore kb;

    SemanticMultiverse(std::string id, nn::DenseNet enc, nn::DenseNet gen,
                       KnowledgeStore store = {});

    std::size_t sr_dim() const { return encoder.output_size(); }
};

SemanticRepresentation encode(const SemanticMultiverse& sm, std::span<const double> observation,
                              Modality modality = Modality::generic);

std::vector<double> generate(const SemanticMultiverse& sm, const SemanticRepresentation& sr);

// Local emulation of foreground communication with a foreign agent: encode
// each probe, pass the SR through the stored pairwise channel model, decode
// with the stored foreign generator. Returns per-probe reconstruction mse.
std::vector<double> emulate_smc(const SemanticMultiverse& sm, const std::string& foreign_agent_id,
                                const std::vector<std::vector<double>>& probes, Rng& rng);

// Fraction of probes on which the two full pipelines (own encode -> own
// generate) differ by more than `tolerance` in sup norm. 0 means consistent.
double sm_consistency(const SemanticMultiverse& a, const SemanticMultiverse& b,
                      const std::vector<std::vector<double>>& probes, double tolerance);

}  // namespace smc::sm
