#include "smc/symbolic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>

namespace smc::symbolic {

namespace {

constexpr double kProbSumTol = 1e-12;

std::string format_probability(double p) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12f", p);
    return std::string(buf);
}

std::size_t chebyshev(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::size_t di = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
        d = std::max(d, di);
    }
    return d;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

void validate_node(const SrNode& node) {
    double sum = 0.0;
    for (const auto& e : node.edges) {
        if (!(e.probability > 0.0) || e.probability > 1.0)
            throw ConfigError("graph: edge probability outside (0, 1]");
        sum += e.probability;
    }
    if (std::abs(sum - 1.0) > kProbSumTol)
        throw ConfigError("graph: outgoing probabilities of sr node '" + node.label +
                          "' do not sum to 1");
}

bool atom_ok(const std::string& atom) {
    if (atom.empty()) return false;
    for (char c : atom)
        if (!(std::islower(static_cast<unsigned char>(c)) ||
              std::isdigit(static_cast<unsigned char>(c)) || c == '_'))
            return false;
    return true;
}

[[noreturn]] void parse_fail(std::size_t line, std::size_t col, const std::string& message) {
    throw SmcParseError("problog line " + std::to_string(line) + " col " + std::to_string(col) +
                        ": " + message);
}

std::size_t parse_action_id(const std::string& atom, std::size_t line) {
    if (atom.rfind("action_", 0) != 0)
        parse_fail(line, 1, "action atom must start with 'action_'");
    const std::string digits = atom.substr(7);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
        parse_fail(line, 1, "action atom must end in an integer id");
    return static_cast<std::size_t>(std::stoull(digits));
}

}  // namespace

MappingTable enumerate_mappings(const marl::Actors& actors, const marl::ReferentialEnv& env,
                                std::size_t quant_levels, std::size_t state_cap) {
    if (quant_levels < 2)
        throw ConfigError("enumerate_mappings: quant_levels must be >= 2");
    if (env.n_targets > state_cap)
        throw EnumerationRefusedError("enumerate_mappings: state space of " +
                                      std::to_string(env.n_targets) + " exceeds cap " +
                                      std::to_string(state_cap));
    MappingTable table;
    table.quant_levels = quant_levels;
    table.rows.reserve(env.n_targets);
    for (std::size_t state = 0; state < env.n_targets; ++state) {
        const auto entry = marl::run_state(actors, state, env.n_targets, quant_levels);
        table.rows.push_back({state, entry.message_cells, entry.action});
    }
    return table;
}

std::string cell_label(const std::vector<std::size_t>& cells) {
    std::string label;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) label += '_';
        label += std::to_string(cells[i]);
    }
    return label;
}

ClusteredTable cluster_srs(const MappingTable& table, const MergeRule& rule) {
    std::vector<std::vector<std::size_t>> unique;
    std::map<std::vector<std::size_t>, std::size_t> index_of;
    for (const auto& row : table.rows) {
        if (!unique.empty() && row.sr_cells.size() != unique.front().size())
            throw DimensionError("cluster_srs: sr tuples have mixed arity");
        if (index_of.emplace(row.sr_cells, unique.size()).second) unique.push_back(row.sr_cells);
    }

    std::vector<std::size_t> parent(unique.size());
    std::iota(parent.begin(), parent.end(), 0);
    if (rule.radius_cells > 0) {
        for (std::size_t i = 0; i < unique.size(); ++i)
            for (std::size_t j = i + 1; j < unique.size(); ++j)
                if (chebyshev(unique[i], unique[j]) <= rule.radius_cells)
                    parent[find_root(parent, i)] = find_root(parent, j);
    }

    // Cluster label = lexicographically smallest member tuple.
    std::vector<std::vector<std::size_t>> smallest(unique.size());
    for (std::size_t i = 0; i < unique.size(); ++i) {
        const std::size_t root = find_root(parent, i);
        if (smallest[root].empty() || unique[i] < smallest[root]) smallest[root] = unique[i];
    }

    ClusteredTable out;
    for (const auto& tuple : unique) {
        const std::size_t root = find_root(parent, index_of[tuple]);
        out.dictionary.emplace_back(tuple, cell_label(smallest[root]));
    }
    for (const auto& row : table.rows) {
        const std::size_t root = find_root(parent, index_of[row.sr_cells]);
        out.rows.push_back({row.state, cell_label(smallest[root]), row.action});
    }
    return out;
}

std::size_t SymbolicGraph::node_index(const std::string& label) const {
    for (std::size_t i = 0; i < sr_nodes.size(); ++i)
        if (sr_nodes[i].label == label) return i;
    throw CoverageError("graph: no sr node labeled '" + label + "'");
}

const SrNode& SymbolicGraph::node_for_state(std::size_t state) const {
    for (const auto& e : state_edges)
        if (e.state == state) return sr_nodes[e.node_index];
    throw CoverageError("graph: state " + std::to_string(state) + " not covered");
}

SymbolicGraph build_graph(const ClusteredTable& table) {
    if (table.rows.empty()) throw ConfigError("build_graph: empty table");
    SymbolicGraph graph;
    std::map<std::string, std::size_t> node_of;
    for (const auto& row : table.rows) {
        auto [it, inserted] = node_of.emplace(row.cluster, graph.sr_nodes.size());
        if (inserted) graph.sr_nodes.push_back({row.cluster, 0, {}});
        SrNode& node = graph.sr_nodes[it->second];
        node.support += 1;
        auto edge = std::find_if(node.edges.begin(), node.edges.end(),
                                 [&](const SrEdge& e) { return e.action == row.action; });
        if (edge == node.edges.end())
            node.edges.push_back({row.action, 1, 0.0});
        else
            edge->count += 1;
        graph.state_edges.push_back({row.state, it->second});
    }
    for (auto& node : graph.sr_nodes) {
        std::sort(node.edges.begin(), node.edges.end(),
                  [](const SrEdge& a, const SrEdge& b) { return a.action < b.action; });
        for (auto& e : node.edges)
            e.probability = static_cast<double>(e.count) / static_cast<double>(node.support);
        validate_node(node);
    }
    std::sort(graph.state_edges.begin(), graph.state_edges.end(),
              [](const StateEdge& a, const StateEdge& b) { return a.state < b.state; });
    return graph;
}

ProbLogProgram graph_to_program(const SymbolicGraph& graph) {
    ProbLogProgram program;
    for (const auto& node : graph.sr_nodes)
        for (const auto& edge : node.edges)
            program.clauses.push_back(
                {edge.probability, "action_" + std::to_string(edge.action), "sr_" + node.label});
    return program;
}

SymbolicGraph program_to_graph(const ProbLogProgram& program) {
    SymbolicGraph graph;
    std::map<std::string, std::size_t> node_of;
    for (const auto& clause : program.clauses) {
        if (clause.sr_atom.rfind("sr_", 0) != 0)
            throw SmcParseError("program: sr atom must start with 'sr_'");
        const std::string label = clause.sr_atom.substr(3);
        auto [it, inserted] = node_of.emplace(label, graph.sr_nodes.size());
        if (inserted) graph.sr_nodes.push_back({label, 0, {}});
        graph.sr_nodes[it->second].edges.push_back(
            {parse_action_id(clause.action_atom, 0), 0, clause.p});
    }
    return graph;
}

std::string emit_problog(const ProbLogProgram& program) {
    std::string out;
    for (const auto& clause : program.clauses) {
        out += format_probability(clause.p);
        out += "::";
        out += clause.action_atom;
        out += " :- ";
        out += clause.sr_atom;
        out += ".\n";
    }
    return out;
}

std::string emit_problog(const SymbolicGraph& graph) {
    return emit_problog(graph_to_program(graph));
}

ProbLogProgram parse_problog(const std::string& text) {
    ProbLogProgram program;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        ++line_no;
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;

        const std::size_t sep = line.find("::");
        if (sep == std::string::npos) parse_fail(line_no, 1, "missing '::'");
        const std::string number = line.substr(0, sep);
        if (number.empty()) parse_fail(line_no, 1, "missing probability");
        char* parse_end = nullptr;
        const double p = std::strtod(number.c_str(), &parse_end);
        if (parse_end != number.c_str() + number.size())
            parse_fail(line_no, 1, "malformed probability '" + number + "'");
        if (!(p > 0.0) || p > 1.0)
            parse_fail(line_no, 1, "probability outside (0, 1]");

        const std::size_t neck = line.find(" :- ", sep + 2);
        if (neck == std::string::npos) parse_fail(line_no, sep + 3, "missing ' :- '");
        const std::string action_atom = line.substr(sep + 2, neck - sep - 2);
        if (!atom_ok(action_atom)) parse_fail(line_no, sep + 3, "malformed action atom");

        if (line.empty() || line.back() != '.')
            parse_fail(line_no, line.size(), "missing trailing '.'");
        const std::string sr_atom = line.substr(neck + 4, line.size() - neck - 5);
        if (!atom_ok(sr_atom)) parse_fail(line_no, neck + 5, "malformed sr atom");

        program.clauses.push_back({p, action_atom, sr_atom});
    }
    return program;
}

double expression_entropy(const SrNode& node) {
    double h = 0.0;
    for (const auto& e : node.edges)
        if (e.probability > 0.0) h -= e.probability * std::log2(e.probability);
    return h;
}

double expression_entropy(const SymbolicGraph& graph, const std::string& sr_label) {
    return expression_entropy(graph.sr_nodes[graph.node_index(sr_label)]);
}

double clause_surprisal(double p) {
    if (!(p > 0.0) || p > 1.0) throw ConfigError("surprisal: probability outside (0, 1]");
    return -std::log2(p);
}

double graph_entropy(const SymbolicGraph& graph, GraphWeighting weighting) {
    if (graph.sr_nodes.empty()) throw ConfigError("graph_entropy: empty graph");
    double weighted = 0.0;
    double total_weight = 0.0;
    for (const auto& node : graph.sr_nodes) {
        const double w =
            weighting == GraphWeighting::uniform ? 1.0 : static_cast<double>(node.support);
        weighted += w * expression_entropy(node);
        total_weight += w;
    }
    if (total_weight <= 0.0)
        throw ConfigError("graph_entropy: support weighting needs support counts");
    return weighted / total_weight;
}

std::size_t replay(const SymbolicGraph& graph, std::size_t state, Rng& rng) {
    const SrNode& node = graph.node_for_state(state);
    std::vector<double> probs;
    probs.reserve(node.edges.size());
    for (const auto& e : node.edges) probs.push_back(e.probability);
    return node.edges[rng.categorical(probs)].action;
}

double fidelity(const SymbolicGraph& graph, const marl::Actors& actors,
                const marl::ReferentialEnv& env, std::size_t quant_levels) {
    double worst = 0.0;
    for (const auto& edge : graph.state_edges) {
        const auto entry = marl::run_state(actors, edge.state, env.n_targets, quant_levels);
        double mass_on_action = 0.0;
        for (const auto& e : graph.sr_nodes[edge.node_index].edges)
            if (e.action == entry.action) mass_on_action = e.probability;
        worst = std::max(worst, 1.0 - mass_on_action);
    }
    return worst;
}

SymbolicGraph edit_graph(const SymbolicGraph& graph, const Edit& edit) {
    SymbolicGraph out = graph;
    if (std::holds_alternative<ForbidAction>(edit)) {
        const std::size_t action = std::get<ForbidAction>(edit).action;
        bool found = false;
        for (auto& node : out.sr_nodes) {
            const auto hit = std::find_if(node.edges.begin(), node.edges.end(),
                                          [&](const SrEdge& e) { return e.action == action; });
            if (hit == node.edges.end()) continue;
            found = true;
            if (node.edges.size() == 1)
                throw InfeasibleEditError("edit: forbidding the only action of sr node '" +
                                          node.label + "'");
            const std::size_t removed = hit->count;
            node.edges.erase(hit);
            node.support -= removed;
            for (auto& e : node.edges)
                e.probability = static_cast<double>(e.count) / static_cast<double>(node.support);
            validate_node(node);
        }
        if (!found)
            throw InfeasibleEditError("edit: action " + std::to_string(action) +
                                      " not present in graph");
        return out;
    }
    const auto& relabel = std::get<RelabelSr>(edit);
    const std::size_t target = out.node_index(relabel.old_label);
    for (std::size_t i = 0; i < out.sr_nodes.size(); ++i)
        if (i != target && out.sr_nodes[i].label == relabel.new_label)
            throw InfeasibleEditError("edit: label '" + relabel.new_label + "' already in use");
    out.sr_nodes[target].label = relabel.new_label;
    return out;
}

std::string graph_to_dot(const SymbolicGraph& graph) {
    std::string out = "digraph sm {\n";
    for (const auto& e : graph.state_edges)
        out += "  state_" + std::to_string(e.state) + " [shape=box];\n";
    std::vector<std::size_t> actions;
    for (const auto& node : graph.sr_nodes) {
        out += "  sr_" + node.label + " [shape=ellipse];\n";
        for (const auto& e : node.edges) actions.push_back(e.action);
    }
    std::sort(actions.begin(), actions.end());
    actions.erase(std::unique(actions.begin(), actions.end()), actions.end());
    for (std::size_t a : actions) out += "  action_" + std::to_string(a) + " [shape=diamond];\n";
    for (const auto& e : graph.state_edges)
        out += "  state_" + std::to_string(e.state) + " -> sr_" +
               graph.sr_nodes[e.node_index].label + ";\n";
    for (const auto& node : graph.sr_nodes) {
        for (const auto& e : node.edges) {
            char label[32];
            std::snprintf(label, sizeof(label), "%.4f", e.probability);
            out += "  sr_" + node.label + " -> action_" + std::to_string(e.action) +
                   " [label=\"" + label + "\"];\n";
        }
    }
    out += "}\n";
    return out;
}

nlohmann::ordered_json graph_to_json(const SymbolicGraph& graph) {
    nlohmann::ordered_json j;
    j["sr_nodes"] = nlohmann::ordered_json::array();
    for (const auto& node : graph.sr_nodes) {
        nlohmann::ordered_json n;
        n["label"] = node.label;
        n["support"] = node.support;
        n["edges"] = nlohmann::ordered_json::array();
        for (const auto& e : node.edges) {
            nlohmann::ordered_json edge;
            edge["action"] = e.action;
            edge["count"] = e.count;
            edge["probability"] = e.probability;
            n["edges"].push_back(edge);
        }
        j["sr_nodes"].push_back(n);
    }
    j["state_edges"] = nlohmann::ordered_json::array();
    for (const auto& e : graph.state_edges) {
        nlohmann::ordered_json edge;
        edge["state"] = e.state;
        edge["node"] = e.node_index;
        j["state_edges"].push_back(edge);
    }
    return j;
}

SymbolicGraph graph_from_json(const nlohmann::json& j) {
    SymbolicGraph graph;
    try {
        for (const auto& n : j.at("sr_nodes")) {
            SrNode node;
            node.label = n.at("label").get<std::string>();
            node.support = n.at("support").get<std::size_t>();
            for (const auto& e : n.at("edges"))
                node.edges.push_back({e.at("action").get<std::size_t>(),
                                      e.at("count").get<std::size_t>(),
                                      e.at("probability").get<double>()});
            graph.sr_nodes.push_back(std::move(node));
        }
        for (const auto& e : j.at("state_edges")) {
            const std::size_t node = e.at("node").get<std::size_t>();
            if (node >= graph.sr_nodes.size())
                throw SmcParseError("graph json: state edge references missing node");
            graph.state_edges.push_back({e.at("state").get<std::size_t>(), node});
        }
    } catch (const nlohmann::json::exception& ex) {
        throw SmcParseError(std::string("graph json: ") + ex.what());
    }
    return graph;
}

}  // namespace smc::symbolic
