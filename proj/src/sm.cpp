#include "smc/sm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "smc/util.hpp"

namespace smc::sm {

namespace {

void check_id(const std::string& id, const char* what) {
    if (id.empty()) throw ConfigError(std::string(what) + ": empty id");
    for (char c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
            throw ConfigError(std::string(what) + ": id '" + id +
                              "' may only contain [A-Za-z0-9_-]");
}

std::string channel_key_name(const std::string& from, const std::string& to) {
    return "(" + from + ", " + to + ")";
}

}  // namespace

const char* modality_name(Modality m) {
    switch (m) {
        case Modality::generic: return "generic";
        case Modality::visual: return "visual";
        case Modality::audio: return "audio";
        case Modality::haptic: return "haptic";
    }
    return "unknown";
}

nlohmann::ordered_json channel_to_json(const channel::VectorChannel& chan) {
    nlohmann::ordered_json j;
    switch (chan.kind()) {
        case channel::VectorChannelKind::clean:
            j["kind"] = "clean";
            break;
        case channel::VectorChannelKind::additive_gaussian:
            j["kind"] = "additive_gaussian";
            j["sigma"] = chan.sigma();
            break;
        case channel::VectorChannelKind::quantize_then_dmc:
            j["kind"] = "quantize_then_dmc";
            j["levels"] = chan.levels();
            j["per_symbol"] = chan.per_symbol().matrix();
            break;
    }
    return j;
}

channel::VectorChannel channel_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "clean") return channel::VectorChannel::clean();
    if (kind == "additive_gaussian")
        return channel::VectorChannel::additive_gaussian(j.at("sigma").get<double>());
    if (kind == "quantize_then_dmc") {
        auto matrix = j.at("per_symbol").get<std::vector<std::vector<double>>>();
        return channel::VectorChannel::quantize_then_dmc(
            j.at("levels").get<std::size_t>(), channel::DiscreteChannel(std::move(matrix)));
    }
    throw SmcParseError("channel json: unknown kind '" + kind + "'");
}

void KnowledgeStore::put_network(const std::string& agent_id, const nn::DenseNet& net) {
    put_network_bytes(agent_id, net.serialize());
}

void KnowledgeStore::put_network_bytes(const std::string& agent_id,
                                       std::vector<std::uint8_t> bytes) {
    check_id(agent_id, "kb network");
    networks_[agent_id] = std::move(bytes);
}

bool KnowledgeStore::has_network(const std::string& agent_id) const {
    return networks_.count(agent_id) > 0;
}

nn::DenseNet KnowledgeStore::network(const std::string& agent_id) const {
    return nn::DenseNet::deserialize(network_bytes(agent_id));
}

const std::vector<std::uint8_t>& KnowledgeStore::network_bytes(
    const std::string& agent_id) const {
    const auto it = networks_.find(agent_id);
    if (it == networks_.end())
        throw KnowledgeMissError("kb: no network knowledge for agent '" + agent_id + "'");
    return it->second;
}

std::vector<std::string> KnowledgeStore::network_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, bytes] : networks_) ids.push_back(id);
    return ids;
}

void KnowledgeStore::put_channel(const std::string& from, const std::string& to,
                                 channel::VectorChannel chan) {
    check_id(from, "kb channel");
    check_id(to, "kb channel");
    channels_.insert_or_assign({from, to}, std::move(chan));
}

bool KnowledgeStore::has_channel(const std::string& from, const std::string& to) const {
    return channels_.count({from, to}) > 0;
}

const channel::VectorChannel& KnowledgeStore::channel_model(const std::string& from,
                                                            const std::string& to) const {
    const auto it = channels_.find({from, to});
    if (it == channels_.end())
        throw KnowledgeMissError("kb: no channel model for " + channel_key_name(from, to));
    return it->second;
}

void KnowledgeStore::put_graph(const std::string& id, symbolic::SymbolicGraph graph) {
    check_id(id, "kb graph");
    graphs_.insert_or_assign(id, std::move(graph));
}

bool KnowledgeStore::has_graph(const std::string& id) const { return graphs_.count(id) > 0; }

const symbolic::SymbolicGraph& KnowledgeStore::graph(const std::string& id) const {
    const auto it = graphs_.find(id);
    if (it == graphs_.end())
        throw KnowledgeMissError("kb: no graph knowledge with id '" + id + "'");
    return it->second;
}

std::vector<std::string> KnowledgeStore::graph_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, graph] : graphs_) ids.push_back(id);
    return ids;
}

void KnowledgeStore::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json manifest;
    manifest["agents"] = nlohmann::ordered_json::array();
    for (const auto& [id, bytes] : networks_) {
        const std::string file = id + ".smnn";
        util::write_file_bytes(dir / file, bytes);
        nlohmann::ordered_json entry;
        entry["id"] = id;
        entry["file"] = file;
        entry["bytes"] = bytes.size();
        entry["checksum"] = util::fnv1a_hex(bytes);
        manifest["agents"].push_back(entry);
    }
    manifest["channels"] = nlohmann::ordered_json::array();
    for (const auto& [key, chan] : channels_) {
        nlohmann::ordered_json entry;
        entry["from"] = key.first;
        entry["to"] = key.second;
        entry["model"] = channel_to_json(chan);
        manifest["channels"].push_back(entry);
    }
    manifest["graphs"] = nlohmann::ordered_json::array();
    for (const auto& [id, graph] : graphs_) {
        const std::string file = "graph_" + id + ".json";
        const std::string text = util::dump_json_12(symbolic::graph_to_json(graph));
        util::write_file_text(dir / file, text);
        nlohmann::ordered_json entry;
        entry["id"] = id;
        entry["file"] = file;
        entry["checksum"] = util::fnv1a_hex(text);
        manifest["graphs"].push_back(entry);
    }
    util::write_file_text(dir / "manifest.json", util::dump_json_12(manifest));
}

KnowledgeStore KnowledgeStore::load(const std::filesystem::path& dir) {
    const auto manifest = nlohmann::json::parse(util::read_file_text(dir / "manifest.json"));
    KnowledgeStore kb;
    try {
        for (const auto& entry : manifest.at("agents")) {
            const std::string id = entry.at("id").get<std::string>();
            auto bytes = util::read_file_bytes(dir / entry.at("file").get<std::string>());
            if (bytes.size() != entry.at("bytes").get<std::size_t>() ||
                util::fnv1a_hex(bytes) != entry.at("checksum").get<std::string>())
                throw SmcParseError("kb manifest: checksum mismatch for agent '" + id + "'");
            kb.put_network_bytes(id, std::move(bytes));
        }
        for (const auto& entry : manifest.at("channels"))
            kb.put_channel(entry.at("from").get<std::string>(),
                           entry.at("to").get<std::string>(),
                           channel_from_json(entry.at("model")));
        for (const auto& entry : manifest.at("graphs")) {
            const std::string id = entry.at("id").get<std::string>();
            const std::string text =
                util::read_file_text(dir / entry.at("file").get<std::string>());
            if (util::fnv1a_hex(text) != entry.at("checksum").get<std::string>())
                throw SmcParseError("kb manifest: checksum mismatch for graph '" + id + "'");
            kb.put_graph(id, symbolic::graph_from_json(nlohmann::json::parse(text)));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw SmcParseError(std::string("kb manifest: ") + ex.what());
    }
    return kb;
}

SemanticMultiverse::SemanticMultiverse(std::string id, nn::DenseNet enc, nn::DenseNet gen,
                                       KnowledgeStore store)
    : agent_id(std::move(id)),
      encoder(std::move(enc)),
      generator(std::move(gen)),
      kb(std::move(store)) {
    check_id(agent_id, "sm");
    if (encoder.output_size() != generator.input_size())
        throw DimensionError("sm: encoder output size != generator input size");
    if (encoder.output_size() == 0)
        throw DimensionError("sm: sr dimension must be positive");
}

SemanticRepresentation encode(const SemanticMultiverse& sm, std::span<const double> observation,
                              Modality modality) {
    if (observation.size() != sm.encoder.input_size())
        throw DimensionError("encode: observation length != encoder input size");
    return {sm.encoder.evaluate(observation), modality};
}

std::vector<double> generate(const SemanticMultiverse& sm, const SemanticRepresentation& sr) {
    if (sr.values.size() != sm.generator.input_size())
        throw DimensionError("generate: sr dimension != generator input size");
    return sm.generator.evaluate(sr.values);
}

std::vector<double> emulate_smc(const SemanticMultiverse& sm, const std::string& foreign_agent_id,
                                const std::vector<std::vector<double>>& probes, Rng& rng) {
    const auto foreign_generator = sm.kb.network(foreign_agent_id);
    const auto& chan = sm.kb.channel_model(sm.agent_id, foreign_agent_id);
    if (foreign_generator.input_size() != sm.sr_dim())
        throw DimensionError("emulate_smc: stored generator input size != sr dimension");

    std::vector<double> errors;
    errors.reserve(probes.size());
    for (const auto& probe : probes) {
        const auto sr = encode(sm, probe);
        const auto received = chan.transmit(sr.values, rng);
        const auto rendered = foreign_generator.evaluate(received);
        errors.push_back(nn::mse(rendered, probe));
    }
    return errors;
}

double sm_consistency(const SemanticMultiverse& a, const SemanticMultiverse& b,
                      const std::vector<std::vector<double>>& probes, double tolerance) {
    if (probes.empty()) throw ConfigError("sm_consistency: empty probe set");
    if (std::isnan(tolerance) || tolerance < 0.0)
        throw ConfigError("sm_consistency: tolerance must be >= 0");
    if (a.encoder.input_size() != b.encoder.input_size())
        throw DimensionError("sm_consistency: encoder input sizes differ");
    if (a.generator.output_size() != b.generator.output_size())
        throw DimensionError("sm_consistency: generator output sizes differ");

    std::size_t differing = 0;
    for (const auto& probe : probes) {
        const auto out_a = generate(a, encode(a, probe));
        const auto out_b = generate(b, encode(b, probe));
        double sup = 0.0;
        for (std::size_t i = 0; i < out_a.size(); ++i)
            sup = std::max(sup, std::abs(out_a[i] - out_b[i]));
        if (sup > tolerance) ++differing;
    }
    return static_cast<double>(differing) / static_cast<double>(probes.size());
}

}  // namespace smc::sm
