#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "smc/errors.hpp"
#include "smc/marl.hpp"
#include "smc/rng.hpp"

namespace smc::symbolic {

// One row per enumerated state under deterministic greedy quantized execution.
struct MappingRow {
    std::size_t state = 0;
    std::vector<std::size_t> sr_cells;
    std::size_t action = 0;
};

struct MappingTable {
    std::vector<MappingRow> rows;
    std::size_t quant_levels = 0;
};

MappingTable enumerate_mappings(const marl::Actors& actors, const marl::ReferentialEnv& env,
                                std::size_t quant_levels, std::size_t state_cap = 1u << 20);

// exact_cell merges identical quantized tuples; radius(r) additionally merges
// tuples within Chebyshev distance r via single linkage.
struct MergeRule {
    std::size_t radius_cells = 0;

    static MergeRule exact_cell() { return {0}; }
    static MergeRule radius(std::size_t r) { return {r}; }
};

std::string cell_label(const std::vector<std::size_t>& cells);

struct ClusteredRow {
    std::size_t state = 0;
    std::string cluster;
    std::size_t action = 0;
};

struct ClusteredTable {
    std::vector<ClusteredRow> rows;
    // raw tuple -> cluster label (the lexicographically smallest member).
    std::vector<std::pair<std::vector<std::size_t>, std::string>> dictionary;
};

ClusteredTable cluster_srs(const MappingTable& table, const MergeRule& rule);

struct SrEdge {
    std::size_t action = 0;
    std::size_t count = 0;
    double probability = 0.0;
};

struct SrNode {
    std::string label;
    std::size_t support = 0;
    std::vector<SrEdge> edges;  // sorted by action id; probabilities sum to 1
};

struct StateEdge {
    std::size_t state = 0;
    std::size_t node_index = 0;
};

// state -> sr edges are deterministic; sr -> action edges carry probability
// count(cluster, action) / count(cluster), exact as a ratio of counts.
struct SymbolicGraph {
    std::vector<SrNode> sr_nodes;       // first-appearance order over states
    std::vector<StateEdge> state_edges;  // sorted by state

    std::size_t node_index(const std::string& label) const;  // throws CoverageError
    const SrNode& node_for_state(std::size_t state) const;   // throws CoverageError
};

SymbolicGraph build_graph(const ClusteredTable& table);

struct Clause {
    double p = 0.0;
    std::string action_atom;
    std::string sr_atom;
};

struct ProbLogProgram {
    std::vector<Clause> clauses;
};

ProbLogProgram graph_to_program(const SymbolicGraph& graph);
// Reconstruction from clauses alone: no states, no support counts.
SymbolicGraph program_to_graph(const ProbLogProgram& program);

// One line per edge: `<p>::action_<id> :- sr_<label>.`, p at 12 decimals.
// emit(parse(emit(g))) is byte-identical to emit(g).
std::string emit_problog(const ProbLogProgram& program);
std::string emit_problog(const SymbolicGraph& graph);
ProbLogProgram parse_problog(const std::string& text);

double expression_entropy(const SrNode& node);
double expression_entropy(const SymbolicGraph& graph, const std::string& sr_label);
double clause_surprisal(double p);

enum class GraphWeighting { uniform, support };

double graph_entropy(const SymbolicGraph& graph, GraphWeighting weighting);

std::size_t replay(const SymbolicGraph& graph, std::size_t state, Rng& rng);

// Max over covered states of the total-variation distance between the graph's
// action distribution and the actors' deterministic action.
double fidelity(const SymbolicGraph& graph, const marl::Actors& actors,
                const marl::ReferentialEnv& env, std::size_t quant_levels);

struct ForbidAction {
    std::size_t action = 0;
};

struct RelabelSr {
    std::string old_label;
    std::string new_label;
};

using Edit = std::variant<ForbidAction, RelabelSr>;

SymbolicGraph edit_graph(const SymbolicGraph& graph, const Edit& edit);

std::string graph_to_dot(const SymbolicGraph& graph);
nlohmann::ordered_json graph_to_json(const SymbolicGraph& graph);
SymbolicGraph graph_from_json(const nlohmann::json& j);

}  // namespace smc::symbolic
