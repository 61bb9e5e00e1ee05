#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "smc/symbolic.hpp"

using namespace smc;

namespace {

// Same hand-built perfect protocol as the marl suite: state i -> distinct
// message sign pattern -> action i.
marl::Actors perfect_actors() {
    nn::DenseNet speaker({4, 2}, {nn::Activation::tanh});
    speaker.mutable_weights(0) = {3, 3, -3, -3, 3, -3, 3, -3};
    nn::DenseNet listener({2, 4}, {nn::Activation::softmax});
    listener.mutable_weights(0) = {5, 5, 5, -5, -5, 5, -5, -5};
    return {std::move(speaker), std::move(listener)};
}

symbolic::MappingTable table_of(std::vector<symbolic::MappingRow> rows,
                                std::size_t levels = 16) {
    symbolic::MappingTable t;
    t.rows = std::move(rows);
    t.quant_levels = levels;
    return t;
}

}  // namespace

TEST_SUITE("symbolic") {

TEST_CASE("enumeration covers every state exactly once and replays execution") {
    const auto actors = perfect_actors();
    marl::ReferentialEnv env{4};
    const auto table = symbolic::enumerate_mappings(actors, env, 2);
    REQUIRE(table.rows.size() == 4);
    for (std::size_t s = 0; s < 4; ++s) {
        const auto entry = marl::run_state(actors, s, 4, 2);
        CHECK(table.rows[s].state == s);
        CHECK(table.rows[s].sr_cells == entry.message_cells);
        CHECK(table.rows[s].action == entry.action);
    }
    const auto again = symbolic::enumerate_mappings(actors, env, 2);
    for (std::size_t s = 0; s < 4; ++s) {
        CHECK(again.rows[s].sr_cells == table.rows[s].sr_cells);
        CHECK(again.rows[s].action == table.rows[s].action);
    }

    CHECK_THROWS_AS((void)symbolic::enumerate_mappings(actors, env, 1), ConfigError);
    CHECK_THROWS_AS((void)symbolic::enumerate_mappings(actors, env, 16, 2),
                    EnumerationRefusedError);
}

TEST_CASE("single-state environment gives a single row") {
    nn::DenseNet speaker({1, 2}, {nn::Activation::tanh});
    speaker.mutable_weights(0) = {3, -3};
    nn::DenseNet listener({2, 1}, {nn::Activation::softmax});
    const marl::Actors actors{std::move(speaker), std::move(listener)};
    const auto table = symbolic::enumerate_mappings(actors, marl::ReferentialEnv{1}, 16);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].state == 0);
    CHECK(table.rows[0].action == 0);
}

TEST_CASE("radius clustering follows hand-checked single linkage") {
    const auto table = table_of({{0, {0, 0}, 0}, {1, {0, 1}, 1}, {2, {5, 5}, 2}}, 8);

    const auto exact = symbolic::cluster_srs(table, symbolic::MergeRule::exact_cell());
    CHECK(exact.rows[0].cluster == "0_0");
    CHECK(exact.rows[1].cluster == "0_1");
    CHECK(exact.rows[2].cluster == "5_5");

    const auto zero = symbolic::cluster_srs(table, symbolic::MergeRule::radius(0));
    for (std::size_t i = 0; i < 3; ++i) CHECK(zero.rows[i].cluster == exact.rows[i].cluster);

    const auto merged = symbolic::cluster_srs(table, symbolic::MergeRule::radius(1));
    CHECK(merged.rows[0].cluster == "0_0");
    CHECK(merged.rows[1].cluster == "0_0");  // lexicographically smallest member labels
    CHECK(merged.rows[2].cluster == "5_5");
    REQUIRE(merged.dictionary.size() == 3);
    CHECK(merged.dictionary[0].second == "0_0");
    CHECK(merged.dictionary[1].second == "0_0");
    CHECK(merged.dictionary[2].second == "5_5");

    // Single linkage chains through intermediate tuples.
    const auto chain = table_of({{0, {0, 0}, 0}, {1, {1, 1}, 1}, {2, {2, 2}, 2}}, 8);
    const auto chained = symbolic::cluster_srs(chain, symbolic::MergeRule::radius(1));
    for (const auto& row : chained.rows) CHECK(row.cluster == "0_0");

    const auto ragged = table_of({{0, {0, 0}, 0}, {1, {1}, 1}}, 8);
    CHECK_THROWS_AS((void)symbolic::cluster_srs(ragged, symbolic::MergeRule::exact_cell()),
                    DimensionError);
}

TEST_CASE("graph probabilities are exact count ratios") {
    // Fig.-6-style fixture: two SRs merged, counts by hand: cluster m holds
    // states 0,1,2 with actions 0,0,1; cluster z holds state 3 with action 2.
    symbolic::ClusteredTable table;
    table.rows = {{0, "m", 0}, {1, "m", 0}, {2, "m", 1}, {3, "z", 2}};
    const auto graph = symbolic::build_graph(table);
    REQUIRE(graph.sr_nodes.size() == 2);
    const auto& m = graph.sr_nodes[graph.node_index("m")];
    REQUIRE(m.edges.size() == 2);
    CHECK(m.support == 3);
    CHECK(m.edges[0].action == 0);
    CHECK(m.edges[0].count == 2);
    CHECK(m.edges[0].probability == 2.0 / 3.0);
    CHECK(m.edges[1].count == 1);
    CHECK(m.edges[1].probability == 1.0 / 3.0);
    double sum = 0.0;
    for (const auto& e : m.edges) sum += e.probability;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    const auto& z = graph.sr_nodes[graph.node_index("z")];
    CHECK(z.edges.size() == 1);
    CHECK(z.edges[0].probability == 1.0);

    CHECK(graph.node_for_state(2).label == "m");
    CHECK_THROWS_AS((void)graph.node_for_state(9), CoverageError);
    CHECK_THROWS_AS((void)graph.node_index("missing"), CoverageError);
    CHECK_THROWS_AS((void)symbolic::build_graph(symbolic::ClusteredTable{}), ConfigError);
}

TEST_CASE("deterministic tables build all-certain graphs") {
    const auto actors = perfect_actors();
    const auto table = symbolic::enumerate_mappings(actors, marl::ReferentialEnv{4}, 2);
    const auto graph =
        symbolic::build_graph(symbolic::cluster_srs(table, symbolic::MergeRule::exact_cell()));
    REQUIRE(graph.sr_nodes.size() == 4);
    for (const auto& node : graph.sr_nodes) {
        REQUIRE(node.edges.size() == 1);
        CHECK(node.edges[0].probability == 1.0);
        CHECK(symbolic::expression_entropy(node) == 0.0);
    }
    CHECK(symbolic::graph_entropy(graph, symbolic::GraphWeighting::uniform) == 0.0);
    CHECK(symbolic::graph_entropy(graph, symbolic::GraphWeighting::support) == 0.0);
    CHECK(symbolic::fidelity(graph, actors, marl::ReferentialEnv{4}, 2) == 0.0);
}

TEST_CASE("problog emission is exact and round-trips byte-identically") {
    symbolic::ClusteredTable single;
    single.rows = {{0, "0", 0}};
    const auto graph = symbolic::build_graph(single);
    CHECK(symbolic::emit_problog(graph) == "1.000000000000::action_0 :- sr_0.\n");

    symbolic::ClusteredTable mixed;
    mixed.rows = {{0, "m", 0}, {1, "m", 0}, {2, "m", 1}, {3, "z", 2}};
    const auto text = symbolic::emit_problog(symbolic::build_graph(mixed));
    const auto parsed = symbolic::parse_problog(text);
    CHECK(symbolic::emit_problog(parsed) == text);

    const auto reparsed = symbolic::program_to_graph(parsed);
    REQUIRE(reparsed.sr_nodes.size() == 2);
    const auto& m = reparsed.sr_nodes[reparsed.node_index("m")];
    REQUIRE(m.edges.size() == 2);
    CHECK(m.edges[0].probability == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("hand-written clauses parse to the defined edge") {
    const auto program = symbolic::parse_problog("0.5::action_1 :- sr_2.\n");
    REQUIRE(program.clauses.size() == 1);
    CHECK(program.clauses[0].p == 0.5);
    CHECK(program.clauses[0].action_atom == "action_1");
    CHECK(program.clauses[0].sr_atom == "sr_2");
    const auto graph = symbolic::program_to_graph(program);
    CHECK(graph.sr_nodes[graph.node_index("2")].edges[0].action == 1);
}

TEST_CASE("malformed problog reports line and column") {
    auto expect_parse_error = [](const std::string& text, const std::string& needle) {
        try {
            (void)symbolic::parse_problog(text);
            FAIL("expected parse error for: ", text);
        } catch (const SmcParseError& ex) {
            const std::string what = ex.what();
            CHECK(what.find("problog line") != std::string::npos);
            CHECK(what.find(needle) != std::string::npos);
        }
    };
    expect_parse_error("gibberish\n", "missing '::'");
    expect_parse_error("0.5::action_1 : sr_2.\n", "missing ' :- '");
    expect_parse_error("0.5::action_1 :- sr_2\n", "missing trailing '.'");
    expect_parse_error("1.5::action_1 :- sr_2.\n", "probability outside (0, 1]");
    expect_parse_error("x::action_1 :- sr_2.\n", "malformed probability");
    expect_parse_error("1.0::action_0 :- sr_0.\nbroken\n", "line 2");
}

TEST_CASE("expression entropy matches direct evaluation") {
    symbolic::SrNode half{"h", 2, {{0, 1, 0.5}, {1, 1, 0.5}}};
    CHECK(symbolic::expression_entropy(half) == 1.0);
    symbolic::SrNode skew{"s", 4, {{0, 1, 0.25}, {1, 3, 0.75}}};
    CHECK(symbolic::expression_entropy(skew) ==
          doctest::Approx(0.811278124459).epsilon(1e-12));
    symbolic::SrNode sure{"d", 1, {{0, 1, 1.0}}};
    CHECK(symbolic::expression_entropy(sure) == 0.0);

    // 0 <= node entropy <= log2(action count).
    symbolic::SrNode four{"f", 4, {{0, 1, 0.25}, {1, 1, 0.25}, {2, 1, 0.25}, {3, 1, 0.25}}};
    CHECK(symbolic::expression_entropy(four) == doctest::Approx(2.0).epsilon(1e-12));

    CHECK(symbolic::clause_surprisal(0.25) == 2.0);
    CHECK(symbolic::clause_surprisal(1.0) == 0.0);
    CHECK_THROWS_AS((void)symbolic::clause_surprisal(0.0), ConfigError);
    CHECK_THROWS_AS((void)symbolic::clause_surprisal(1.5), ConfigError);
}

TEST_CASE("graph entropy weights nodes uniformly or by support") {
    symbolic::ClusteredTable table;
    table.rows = {{0, "m", 0}, {1, "m", 1}, {2, "z", 0}};
    const auto graph = symbolic::build_graph(table);
    CHECK(symbolic::graph_entropy(graph, symbolic::GraphWeighting::uniform) == 0.5);
    CHECK(symbolic::graph_entropy(graph, symbolic::GraphWeighting::support) == 2.0 / 3.0);

    // A graph rebuilt from clauses has no supports to weight by.
    const auto bare = symbolic::program_to_graph(symbolic::parse_problog(
        "0.5::action_0 :- sr_m.\n0.5::action_1 :- sr_m.\n"));
    CHECK(symbolic::graph_entropy(bare, symbolic::GraphWeighting::uniform) == 1.0);
    CHECK_THROWS_AS((void)symbolic::graph_entropy(bare, symbolic::GraphWeighting::support),
                    ConfigError);
    CHECK_THROWS_AS(
        (void)symbolic::graph_entropy(symbolic::SymbolicGraph{},
                                      symbolic::GraphWeighting::uniform),
        ConfigError);
}

TEST_CASE("replay is deterministic on certain edges and samples mixed ones") {
    symbolic::ClusteredTable table;
    table.rows = {{0, "m", 3}, {1, "z", 0}, {2, "z", 1}};
    const auto graph = symbolic::build_graph(table);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        CHECK(symbolic::replay(graph, 0, rng) == 3);
    }
    Rng rng(1);
    std::size_t saw0 = 0, saw1 = 0;
    for (int i = 0; i < 200; ++i) {
        const std::size_t a = symbolic::replay(graph, 1, rng);
        if (a == 0) ++saw0;
        if (a == 1) ++saw1;
    }
    CHECK(saw0 + saw1 == 200);
    CHECK(saw0 > 50);
    CHECK(saw1 > 50);
    Rng r2(1);
    CHECK_THROWS_AS((void)symbolic::replay(graph, 7, r2), CoverageError);
}

TEST_CASE("merging states with different actions halves fidelity") {
    const auto actors = perfect_actors();
    symbolic::ClusteredTable table;
    table.rows = {{0, "m", 0}, {1, "m", 1}, {2, "2", 2}, {3, "3", 3}};
    const auto graph = symbolic::build_graph(table);
    CHECK(symbolic::fidelity(graph, actors, marl::ReferentialEnv{4}, 2) == 0.5);
}

TEST_CASE("forbid renormalizes by exact count ratios") {
    symbolic::ClusteredTable table;
    table.rows = {{0, "m", 0}, {1, "m", 1}, {2, "m", 2}, {3, "m", 2}};
    const auto graph = symbolic::build_graph(table);  // p = (0.25, 0.25, 0.5)

    const auto after = symbolic::edit_graph(graph, symbolic::ForbidAction{0});
    const auto& node = after.sr_nodes[after.node_index("m")];
    REQUIRE(node.edges.size() == 2);
    CHECK(node.support == 3);
    CHECK(node.edges[0].action == 1);
    CHECK(node.edges[0].probability == 1.0 / 3.0);
    CHECK(node.edges[1].action == 2);
    CHECK(node.edges[1].probability == 2.0 / 3.0);

    symbolic::ClusteredTable pair;
    pair.rows = {{0, "m", 1}, {1, "m", 2}};
    const auto even = symbolic::build_graph(pair);
    const auto forced = symbolic::edit_graph(even, symbolic::ForbidAction{2});
    const auto& sure = forced.sr_nodes[forced.node_index("m")];
    REQUIRE(sure.edges.size() == 1);
    CHECK(sure.edges[0].action == 1);
    CHECK(sure.edges[0].probability == 1.0);

    CHECK_THROWS_AS((void)symbolic::edit_graph(forced, symbolic::ForbidAction{1}),
                    InfeasibleEditError);
    CHECK_THROWS_AS((void)symbolic::edit_graph(graph, symbolic::ForbidAction{9}),
                    InfeasibleEditError);
}

TEST_CASE("relabel is an involution and guards collisions") {
    symbolic::ClusteredTable table;
    table.rows = {{0, "m", 0}, {1, "z", 1}};
    const auto graph = symbolic::build_graph(table);
    const auto renamed = symbolic::edit_graph(graph, symbolic::RelabelSr{"m", "goal"});
    CHECK(symbolic::emit_problog(renamed).find("sr_goal") != std::string::npos);
    const auto back = symbolic::edit_graph(renamed, symbolic::RelabelSr{"goal", "m"});
    CHECK(symbolic::emit_problog(back) == symbolic::emit_problog(graph));
    CHECK_THROWS_AS((void)symbolic::edit_graph(graph, symbolic::RelabelSr{"m", "z"}),
                    InfeasibleEditError);
    CHECK_THROWS_AS((void)symbolic::edit_graph(graph, symbolic::RelabelSr{"nope", "x"}),
                    CoverageError);
}

TEST_CASE("graph entropy is monotone in the merge radius") {
    const auto table = table_of({{0, {0, 0}, 0}, {1, {0, 2}, 1}, {2, {0, 4}, 2}}, 8);
    double previous_uniform = -1.0;
    double previous_support = -1.0;
    for (std::size_t r = 0; r <= 4; ++r) {
        const auto graph =
            symbolic::build_graph(symbolic::cluster_srs(table, symbolic::MergeRule::radius(r)));
        const double hu = symbolic::graph_entropy(graph, symbolic::GraphWeighting::uniform);
        const double hs = symbolic::graph_entropy(graph, symbolic::GraphWeighting::support);
        CHECK(hu >= previous_uniform - 1e-12);
        CHECK(hs >= previous_support - 1e-12);
        previous_uniform = hu;
        previous_support = hs;
    }
    const auto merged =
        symbolic::build_graph(symbolic::cluster_srs(table, symbolic::MergeRule::radius(2)));
    CHECK(symbolic::graph_entropy(merged, symbolic::GraphWeighting::uniform) ==
          doctest::Approx(std::log2(3.0)).epsilon(1e-12));
}

TEST_CASE("dot export types nodes by shape and labels probabilities") {
    symbolic::ClusteredTable table;
    table.rows = {{0, "m", 0}, {1, "m", 1}};
    const auto dot = symbolic::graph_to_dot(symbolic::build_graph(table));
    CHECK(dot.find("state_0 [shape=box];") != std::string::npos);
    CHECK(dot.find("sr_m [shape=ellipse];") != std::string::npos);
    CHECK(dot.find("action_1 [shape=diamond];") != std::string::npos);
    CHECK(dot.find("sr_m -> action_0 [label=\"0.5000\"];") != std::string::npos);
    CHECK(dot.find("state_0 -> sr_m;") != std::string::npos);
}

TEST_CASE("json dump round-trips counts and rejects dangling references") {
    symbolic::ClusteredTable table;
    table.rows = {{0, "m", 0}, {1, "m", 1}, {2, "z", 0}};
    const auto graph = symbolic::build_graph(table);
    const auto j = symbolic::graph_to_json(graph);
    const auto restored = symbolic::graph_from_json(j);
    CHECK(symbolic::emit_problog(restored) == symbolic::emit_problog(graph));
    REQUIRE(restored.sr_nodes.size() == graph.sr_nodes.size());
    for (std::size_t i = 0; i < graph.sr_nodes.size(); ++i) {
        CHECK(restored.sr_nodes[i].support == graph.sr_nodes[i].support);
        CHECK(restored.sr_nodes[i].edges.size() == graph.sr_nodes[i].edges.size());
    }
    CHECK(restored.state_edges.size() == graph.state_edges.size());

    auto corrupt = j;
    corrupt["state_edges"][0]["node"] = 99;
    CHECK_THROWS_AS((void)symbolic::graph_from_json(corrupt), SmcParseError);
    auto missing = j;
    missing.erase("sr_nodes");
    CHECK_THROWS_AS((void)symbolic::graph_from_json(missing), SmcParseError);
}

}  // TEST_SUITE
