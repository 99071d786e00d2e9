#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "dcirc/compile.hpp"
#include "dcirc/corpus.hpp"
#include "dcirc/oracle.hpp"
#include "dcirc/sweep.hpp"
#include "test_util.hpp"

using namespace dcirc;

namespace {

DiagramData single_chance_data() {
    DiagramData data;
    data.variables = {{"X", "X", VarKind::Chance, {"x0", "x1"}}};
    data.chance = {{"X", {}, {0.3, 0.7}}};
    return data;
}

// W -> R chain, chance only.
DiagramData chain_data() {
    DiagramData data;
    data.variables = {
        {"W", "W", VarKind::Chance, {"w0", "w1"}},
        {"R", "R", VarKind::Chance, {"r0", "r1"}},
    };
    data.chance = {{"W", {}, {0.6, 0.4}}, {"R", {"W"}, {0.8, 0.2, 0.19, 0.81}}};
    return data;
}

// A -> C <- B collider, chance only.
DiagramData collider_data() {
    DiagramData data;
    data.variables = {
        {"A", "A", VarKind::Chance, {"a0", "a1"}},
        {"B", "B", VarKind::Chance, {"b0", "b1"}},
        {"C", "C", VarKind::Chance, {"c0", "c1"}},
    };
    data.chance = {{"A", {}, {0.25, 0.75}},
                   {"B", {}, {0.55, 0.45}},
                   {"C", {"A", "B"}, {0.9, 0.1, 0.35, 0.65, 0.5, 0.5, 0.2, 0.8}}};
    return data;
}

// Alternative legal elimination orders obtained by swapping adjacent entries
// of the default order wherever legality is preserved.
std::vector<std::vector<VarId>> alternative_orders(const InfluenceDiagram& d) {
    std::vector<VarId> base = default_order(d);
    std::vector<std::vector<VarId>> out;
    for (size_t i = 0; i + 1 < base.size(); ++i) {
        std::vector<VarId> swapped = base;
        std::swap(swapped[i], swapped[i + 1]);
        if (swapped != base && is_legal_order(d, swapped)) out.push_back(swapped);
    }
    return out;
}

}  // namespace

TEST_CASE("default elimination order is legal and deterministic") {
    for (const char* name : {"umbrella", "report", "weather"}) {
        auto d = load_example(name);
        auto order = default_order(d);
        CHECK(order.size() == static_cast<size_t>(d.num_vars()));
        CHECK(is_legal_order(d, order));
        CHECK(default_order(d) == order);
    }
    auto cfg = corpus::load_config_file(repo_root() + "/diagrams/corpus.json");
    for (int i = 0; i < 30; ++i) {
        auto d = corpus::generate(cfg, i);
        CHECK(is_legal_order(d, default_order(d)));
    }
}

TEST_CASE("illegal elimination orders are rejected") {
    auto report = load_example("report");
    // A decision may only be eliminated once exactly its observed parents remain.
    CHECK_FALSE(is_legal_order(report, {"U", "B", "W", "R"}));
    CHECK_FALSE(is_legal_order(report, {"B", "U", "W", "R"}));
    // Every variable exactly once.
    CHECK_FALSE(is_legal_order(report, {"U", "W", "B"}));
    CHECK_FALSE(is_legal_order(report, {"U", "W", "B", "R", "R"}));
    CHECK_FALSE(is_legal_order(report, {"U", "W", "B", "B"}));
    CHECK_THROWS_AS(compile(report, {"U", "B", "W", "R"}), QueryError);
    // Both interleavings of the two pre-decision variables are fine.
    CHECK(is_legal_order(report, {"U", "W", "B", "R"}));
    CHECK(is_legal_order(report, {"W", "U", "B", "R"}));
}

TEST_CASE("single chance variable compiles to the textbook circuit") {
    InfluenceDiagram d{single_chance_data()};
    auto c = compile(d);
    auto stats = circuit_stats(c);
    // Root sum over two (lambda * theta) products: 7 nodes, 6 edges.
    CHECK(stats.nodes == 7);
    CHECK(stats.edges == 6);
    CHECK(stats.max_nodes == 0);
    CHECK(stats.depth == 2);

    Evidence none;
    CHECK(evaluate_upward(d, c, none, Mode::Sum).root_value(c) == doctest::Approx(1.0));
    Evidence e;
    e.assignments["X"] = "x1";
    CHECK(evaluate_upward(d, c, e, Mode::Sum).root_value(c) == doctest::Approx(0.7));
}

TEST_CASE("chance-only circuits evaluate their network polynomial") {
    for (const DiagramData& data : {chain_data(), collider_data()}) {
        InfluenceDiagram d{data};
        auto c = compile(d);
        // Every evidence subset, every outcome combination.
        int n = d.num_vars();
        for (int mask = 0; mask < (1 << n); ++mask) {
            std::vector<int> observed;
            for (int v = 0; v < n; ++v)
                if (mask & (1 << v)) observed.push_back(v);
            int combos = 1 << observed.size();
            for (int pick = 0; pick < combos; ++pick) {
                Evidence e;
                for (size_t i = 0; i < observed.size(); ++i) {
                    int v = observed[i];
                    e.assignments[d.var(v).id] = d.var(v).outcomes[(pick >> i) & 1];
                }
                double got = evaluate_upward(d, c, e, Mode::Sum).root_value(c);
                CHECK(got == doctest::Approx(oracle::oracle_prob(d, e)).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("circuit matches exhaustive enumeration on every strategy") {
    auto check_diagram = [](const InfluenceDiagram& d) {
        auto c = compile(d);
        auto strategies = oracle::enumerate_strategies(d);
        REQUIRE(!strategies.empty());
        size_t stride = strategies.size() > 48 ? strategies.size() / 16 : 1;

        std::vector<Evidence> evidences;
        evidences.push_back(d.evidence());
        if (!d.evidence().assignments.empty()) evidences.push_back(Evidence{});
        // One extra single-variable observation.
        for (int v = 0; v < d.num_vars(); ++v) {
            if (d.var(v).kind != VarKind::Chance) continue;
            if (d.evidence().assignments.count(d.var(v).id)) continue;
            Evidence e;
            e.assignments[d.var(v).id] = d.var(v).outcomes[1];
            evidences.push_back(e);
            break;
        }

        for (const Evidence& e : evidences) {
            Evidence eprime = augment_evidence(d, e);
            for (size_t si = 0; si < strategies.size(); si += stride) {
                const auto& s = strategies[si];
                auto gate = fix_strategy(d, c, s);
                auto eu = oracle::oracle_eu(d, s, e);
                double pe = evaluate_upward(d, c, e, Mode::Sum, gate).root_value(c);
                double num = evaluate_upward(d, c, eprime, Mode::Sum, gate).root_value(c);
                CHECK(pe == doctest::Approx(eu.p_e).epsilon(1e-9));
                CHECK(num == doctest::Approx(eu.eu * eu.p_e).epsilon(1e-9));
            }
        }
    };

    for (const char* name : {"umbrella", "report", "weather"}) check_diagram(load_example(name));
    auto cfg = corpus::load_config_file(repo_root() + "/diagrams/corpus.json");
    for (int i = 0; i < 20; ++i) check_diagram(corpus::generate(cfg, i));
}

TEST_CASE("evaluation is independent of the elimination order") {
    auto cfg = corpus::load_config_file(repo_root() + "/diagrams/corpus.json");
    std::vector<InfluenceDiagram> diagrams;
    diagrams.push_back(load_example("report"));
    diagrams.push_back(load_example("weather"));
    for (int i = 0; i < 6; ++i) diagrams.push_back(corpus::generate(cfg, i));

    for (const auto& d : diagrams) {
        auto base = compile(d);
        auto r0 = meu_ce(d, base, d.evidence());
        for (const auto& order : alternative_orders(d)) {
            auto alt = compile(d, order);
            auto r1 = meu_ce(d, alt, d.evidence());
            CHECK(std::abs(r1.meu - r0.meu) <= 1e-12);
            CHECK(std::abs(r1.p_e - r0.p_e) <= 1e-12);
            CHECK(r1.s_star.policy == r0.s_star.policy);

            // Fixed-strategy roots agree too, not just the optimum.
            auto strategies = oracle::enumerate_strategies(d);
            const auto& s = strategies[strategies.size() / 2];
            Evidence eprime = augment_evidence(d, d.evidence());
            double a = evaluate_upward(d, base, eprime, Mode::Sum, fix_strategy(d, base, s))
                           .root_value(base);
            double b = evaluate_upward(d, alt, eprime, Mode::Sum, fix_strategy(d, alt, s))
                           .root_value(alt);
            CHECK(std::abs(a - b) <= 1e-12);
        }
    }
}

TEST_CASE("withdrawn alternatives compile to constants") {
    auto data = load_example("umbrella").data();
    data.decisions[0].availability = {1, 0};
    InfluenceDiagram d{data};
    auto c = compile(d);
    // No parameter leaf exists for the withdrawn alternative.
    CHECK(c.parameter(d.var_index("B"), 1, 0) == -1);
    CHECK(c.parameter(d.var_index("B"), 0, 0) != -1);
    const auto& m = c.node(c.max_nodes_of(d.var_index("B"))[0]);
    REQUIRE(m.alts.size() == m.avail.size());
    for (size_t i = 0; i < m.alts.size(); ++i) CHECK(m.avail[i] == (m.alts[i] == 0 ? 1 : 0));

    auto r = meu_ce(d, c, Evidence{});
    CHECK(r.meu == doctest::Approx(0.7));
    CHECK(r.s_star.policy.at("B") == std::vector<int>{0});
}

TEST_CASE("max nodes are indexed by information-set configurations") {
    auto weather = load_example("weather");
    auto c = compile(weather);
    int g = weather.var_index("G");
    int b = weather.var_index("B");
    CHECK(c.max_nodes_of(g).size() == 1);
    CHECK(c.max_nodes_of(b).size() == 4);
    CHECK(c.max_table().size() == 2);
    for (int id : c.max_nodes_of(b)) {
        const auto& node = c.node(id);
        CHECK(node.kind == NodeKind::Max);
        CHECK(node.var == b);
        CHECK(node.children.size() == 2);
        CHECK(node.alts == std::vector<int>{0, 1});
    }
    CHECK_THROWS_AS(c.max_nodes_of(weather.var_index("W")), QueryError);
}

TEST_CASE("leaf tables cover the diagram") {
    auto report = load_example("report");
    auto c = compile(report);
    for (int v = 0; v < report.num_vars(); ++v)
        for (int o = 0; o < report.num_outcomes(v); ++o) CHECK(c.indicator(v, o) != -1);

    // R carries plain parameter leaves holding its CPT entries.
    int r = report.var_index("R");
    for (long row = 0; row < 2; ++row)
        for (int o = 0; o < 2; ++o) {
            int leaf = c.parameter(r, o, row);
            REQUIRE(leaf != -1);
            CHECK(c.node(leaf).value == doctest::Approx(report.chance_spec(r)->cpt[row * 2 + o]));
        }

    // W is driven by tau1, so its entries use the shared meta leaf instead.
    int w = report.var_index("W");
    CHECK(c.parameter(w, 0, 0) == -1);
    int tau = c.meta_leaf(0);
    REQUIRE(tau != -1);
    CHECK(c.node(tau).kind == NodeKind::Meta);
    CHECK(c.node(tau).value == doctest::Approx(0.6));

    // Decision parameters exist per information-set configuration.
    int b = report.var_index("B");
    for (long row = 0; row < 2; ++row)
        for (int o = 0; o < 2; ++o) CHECK(c.parameter(b, o, row) != -1);
}

TEST_CASE("circuit statistics for the bundled diagrams") {
    auto check = [](const char* name, long nodes, long edges, long max_nodes, long depth) {
        auto d = load_example(name);
        auto stats = circuit_stats(compile(d));
        CHECK(stats.nodes == nodes);
        CHECK(stats.edges == edges);
        CHECK(stats.max_nodes == max_nodes);
        CHECK(stats.depth == depth);
    };
    check("umbrella", 35, 42, 1, 8);
    check("report", 71, 94, 2, 8);
    check("weather", 120, 166, 5, 10);
}

TEST_CASE("compilation is deterministic") {
    auto weather = load_example("weather");
    auto a = compile(weather);
    auto b = compile(weather);
    REQUIRE(a.nodes().size() == b.nodes().size());
    CHECK(a.root() == b.root());
    for (size_t i = 0; i < a.nodes().size(); ++i) {
        CHECK(a.node(i).kind == b.node(i).kind);
        CHECK(a.node(i).children == b.node(i).children);
        CHECK(a.node(i).value == b.node(i).value);
    }
}

TEST_CASE("dot export is stable and well-formed") {
    auto weather = load_example("weather");
    auto c = compile(weather);
    std::string dot = to_dot(weather, c);
    CHECK(dot == to_dot(weather, c));
    CHECK(dot.find("digraph") != std::string::npos);
    CHECK(dot.find("lambda(W=sunny)") != std::string::npos);
    CHECK(dot.find("max B") != std::string::npos);
    CHECK(dot.find("->") != std::string::npos);
    CHECK(std::count(dot.begin(), dot.end(), '\n') > circuit_stats(c).nodes);
}
