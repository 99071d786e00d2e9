#include "dcirc/sweep.hpp"

#include <cmath>
#include <limits>

namespace dcirc {

namespace {

void check_evidence_kinds(const InfluenceDiagram& d, const Evidence& e) {
    for (const auto& [id, outcome] : e.assignments) {
        int v = d.var_index(id);  // throws on unknown variables
        if (d.var(v).kind == VarKind::Decision)
            throw QueryError("evidence on decision variable '" + id + "'");
    }
}

}  // namespace

SweepState evaluate_upward(const InfluenceDiagram& d, const DecisionCircuit& c, const Evidence& e,
                           Mode mode, const Overrides& overrides) {
    check_evidence_kinds(d, e);
    std::vector<int> mask = d.evidence_mask(e);

    SweepState s;
    s.mode = mode;
    s.evidence = e;
    s.overrides = overrides;
    s.value.assign(c.nodes().size(), 0.0);
    s.choice.assign(c.nodes().size(), -1);

    for (size_t id = 0; id < c.nodes().size(); ++id) {
        const CircuitNode& n = c.nodes()[id];
        double v = 0.0;
        switch (n.kind) {
            case NodeKind::Constant:
            case NodeKind::Parameter:
            case NodeKind::Meta:
                v = n.value;
                break;
            case NodeKind::Indicator:
                v = (mask[n.var] < 0 || mask[n.var] == n.outcome) ? 1.0 : 0.0;
                break;
            case NodeKind::Sum:
                for (int ch : n.children) v += s.value[ch];
                break;
            case NodeKind::Product:
                v = 1.0;
                for (int ch : n.children) v *= s.value[ch];
                break;
            case NodeKind::Max:
                if (mode == Mode::Sum) {
                    for (int ch : n.children) v += s.value[ch];
                } else {
                    int best = -1;
                    for (size_t i = 0; i < n.children.size(); ++i) {
                        if (!n.avail[i]) continue;
                        double cv = s.value[n.children[i]];
                        if (best < 0 || cv > v) {
                            best = static_cast<int>(i);
                            v = cv;
                        } else if (cv == v) {
                            s.ties = true;
                        }
                    }
                    s.choice[id] = best;
                    if (best < 0) v = 0.0;
                }
                break;
        }
        if (n.children.empty()) {
            auto it = overrides.find(static_cast<int>(id));
            if (it != overrides.end()) v = it->second;
        }
        s.value[id] = v;
    }
    return s;
}

void differentiate_downward(const DecisionCircuit& c, SweepState& s, int seed) {
    if (s.mode != Mode::Sum)
        throw QueryError("differentiation requires a sum-mode sweep (gate a strategy first)");
    if (seed < 0) seed = c.root();
    s.partial.assign(c.nodes().size(), 0.0);
    s.partial[seed] = 1.0;
    std::vector<double> prefix, suffix;
    for (int id = seed; id >= 0; --id) {
        const CircuitNode& n = c.nodes()[id];
        double p = s.partial[id];
        if (p == 0.0 || n.children.empty()) continue;
        if (n.kind == NodeKind::Product) {
            size_t m = n.children.size();
            prefix.assign(m + 1, 1.0);
            suffix.assign(m + 1, 1.0);
            for (size_t i = 0; i < m; ++i) prefix[i + 1] = prefix[i] * s.value[n.children[i]];
            for (size_t i = m; i-- > 0;) suffix[i] = suffix[i + 1] * s.value[n.children[i]];
            for (size_t i = 0; i < m; ++i) s.partial[n.children[i]] += p * prefix[i] * suffix[i + 1];
        } else {  // sum, and max treated as sum
            for (int ch : n.children) s.partial[ch] += p;
        }
    }
    s.has_partials = true;
}

Overrides fix_strategy(const InfluenceDiagram& d, const DecisionCircuit& c, const Strategy& s) {
    Overrides gates;
    for (int dec : d.decision_order()) {
        const VarId& id = d.var(dec).id;
        auto it = s.policy.find(id);
        if (it == s.policy.end()) throw QueryError("strategy is missing decision '" + id + "'");
        long configs = d.config_count_of(dec);
        if (static_cast<long>(it->second.size()) != configs)
            throw QueryError("strategy for '" + id + "' has the wrong number of configurations");
        for (long cfg = 0; cfg < configs; ++cfg) {
            int chosen = it->second[cfg];
            if (chosen < 0 || chosen >= d.num_outcomes(dec) || !d.available(dec, cfg, chosen))
                throw QueryError("strategy selects an unavailable alternative for '" + id + "'");
            for (int alt = 0; alt < d.num_outcomes(dec); ++alt) {
                int leaf = c.parameter(dec, alt, cfg);
                if (leaf >= 0) gates[leaf] = alt == chosen ? 1.0 : 0.0;
            }
        }
    }
    return gates;
}

Strategy read_strategy(const InfluenceDiagram& d, const DecisionCircuit& c, const SweepState& s) {
    if (s.mode != Mode::Maximize) throw QueryError("strategies are recorded by maximize-mode sweeps");
    Strategy out;
    for (const auto& [dec, slots] : c.max_table()) {
        std::vector<int>& policy = out.policy[d.var(dec).id];
        policy.resize(slots.size());
        for (size_t cfg = 0; cfg < slots.size(); ++cfg) {
            const CircuitNode& n = c.node(slots[cfg]);
            int pos = s.choice[slots[cfg]];
            if (pos < 0) throw QueryError("max node has no recorded choice");
            policy[cfg] = n.alts[pos];
        }
    }
    return out;
}

MeuCeResult meu_ce(const InfluenceDiagram& d, const DecisionCircuit& c, const Evidence& e,
                   const Overrides& extra) {
    if (!d.has_utility()) throw QueryError("expected-utility query on a diagram without a utility node");
    Evidence ep = e.augmented ? e : augment_evidence(d, e);

    SweepState up = evaluate_upward(d, c, ep, Mode::Maximize, extra);
    MeuCeResult result;
    result.s_star = read_strategy(d, c, up);

    Overrides gates = extra;
    for (const auto& [leaf, v] : fix_strategy(d, c, result.s_star)) gates[leaf] = v;
    result.state = evaluate_upward(d, c, ep, Mode::Sum, gates);
    differentiate_downward(c, result.state);

    // Report argmax ties only at reachable contexts: an exact tie at an
    // unreachable max node cannot affect any answer. Margins are recorded for
    // every max node so callers can tell decisive choices from coin tosses.
    result.margin.assign(c.nodes().size(), std::numeric_limits<double>::infinity());
    for (size_t id = 0; id < c.nodes().size(); ++id) {
        const CircuitNode& n = c.nodes()[id];
        if (n.kind != NodeKind::Max) continue;
        int hits = 0;
        double second = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < n.children.size(); ++i) {
            if (!n.avail[i]) continue;
            if (up.value[n.children[i]] == up.value[id]) ++hits;
            if (static_cast<int>(i) != up.choice[id])
                second = std::max(second, up.value[n.children[i]]);
        }
        if (second > -std::numeric_limits<double>::infinity())
            result.margin[id] = up.value[id] - second;
        if (!result.ties && hits > 1 && max_node_active(d, c, result.state, static_cast<int>(id)))
            result.ties = true;
    }

    int uvar = d.utility_var();
    double den = result.state.partial[c.indicator(uvar, 0)] + result.state.partial[c.indicator(uvar, 1)];
    if (den <= 0.0) throw QueryError("evidence has probability zero");
    result.g_root = result.state.root_value(c);
    result.p_e = den;
    result.meu = result.g_root / den;
    if (result.meu < -1e-9 || result.meu > 1.0 + 1e-9)
        throw QueryError("internal consistency failure: MEU outside [0, 1]");
    result.meu = std::min(1.0, std::max(0.0, result.meu));
    result.ce = d.utility().utility.inverse(result.meu);
    return result;
}

SweepState strategy_gradient(const InfluenceDiagram& d, const DecisionCircuit& c, const Evidence& e,
                             const Strategy& strat, const Overrides& extra) {
    Overrides gates = extra;
    for (const auto& [leaf, v] : fix_strategy(d, c, strat)) gates[leaf] = v;
    SweepState s = evaluate_upward(d, c, e, Mode::Sum, gates);
    differentiate_downward(c, s);
    return s;
}

bool max_node_active(const InfluenceDiagram& d, const DecisionCircuit& c, const SweepState& s,
                     int node) {
    if (!s.has_partials) throw QueryError("node activity needs a differentiated state");
    const CircuitNode& n = c.node(node);
    if (n.kind != NodeKind::Max) throw QueryError("node activity is defined for max nodes");
    if (std::abs(s.partial[node]) <= 1e-12) return false;
    const DecisionSpec* spec = d.decision_spec(n.var);
    std::vector<int> mask = d.evidence_mask(s.evidence);
    std::vector<int> outcomes = d.config_unrank(spec->parents, n.config);
    for (size_t i = 0; i < spec->parents.size(); ++i) {
        int p = d.var_index(spec->parents[i]);
        if (mask[p] >= 0 && mask[p] != outcomes[i]) return false;
    }
    return true;
}

}  // namespace dcirc
