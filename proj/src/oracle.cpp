#include "dcirc/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace dcirc::oracle {

namespace {

constexpr double kActiveTol = 1e-12;

struct WalkPlan {
    std::vector<int> order;                  // non-utility variables, topological
    std::vector<int> chance_positions;       // positions in `order` enumerated freely
    std::vector<long> chance_cards;
    long joint_size = 1;
    int utility_var = -1;
};

WalkPlan plan_walk(const InfluenceDiagram& d) {
    WalkPlan w;
    w.utility_var = d.utility_var();
    for (int v : d.topo_order()) {
        if (v == w.utility_var) continue;
        w.order.push_back(v);
    }
    for (size_t i = 0; i < w.order.size(); ++i) {
        int v = w.order[i];
        if (d.var(v).kind == VarKind::Chance) {
            w.chance_positions.push_back(static_cast<int>(i));
            w.chance_cards.push_back(d.num_outcomes(v));
            w.joint_size *= d.num_outcomes(v);
            if (w.joint_size > kJointCap) throw QueryError("joint distribution too large for the oracle");
        }
    }
    return w;
}

// Walks one joint outcome: fills per-variable values, returns the product of
// chance probabilities with decisions forced by the strategy. Evidence
// masking is the caller's job.
double walk_joint(const InfluenceDiagram& d, const WalkPlan& w, const Strategy& s, long counter,
                  std::vector<int>& outcome) {
    for (int i = static_cast<int>(w.chance_positions.size()) - 1; i >= 0; --i) {
        outcome[w.order[w.chance_positions[i]]] = static_cast<int>(counter % w.chance_cards[i]);
        counter /= w.chance_cards[i];
    }
    double p = 1.0;
    for (int v : w.order) {
        const auto& var = d.var(v);
        if (var.kind == VarKind::Chance) {
            const auto& spec = *d.chance_spec(v);
            std::vector<int> pa(spec.parents.size());
            for (size_t i = 0; i < spec.parents.size(); ++i) pa[i] = outcome[d.var_index(spec.parents[i])];
            long row = d.config_rank(spec.parents, pa);
            p *= spec.cpt[row * d.num_outcomes(v) + outcome[v]];
        } else {
            const auto& spec = *d.decision_spec(v);
            std::vector<int> pa(spec.parents.size());
            for (size_t i = 0; i < spec.parents.size(); ++i) pa[i] = outcome[d.var_index(spec.parents[i])];
            long row = d.config_rank(spec.parents, pa);
            auto it = s.policy.find(var.id);
            if (it == s.policy.end()) throw QueryError("strategy is missing decision '" + var.id + "'");
            outcome[v] = it->second[row];
        }
        if (p == 0.0) break;
    }
    return p;
}

double joint_value(const InfluenceDiagram& d, const std::vector<int>& outcome) {
    if (!d.has_utility()) return 0.0;
    const auto& u = d.utility();
    std::vector<int> attr(u.attributes.size());
    for (size_t i = 0; i < u.attributes.size(); ++i) attr[i] = outcome[d.var_index(u.attributes[i])];
    return u.values[d.config_rank(u.attributes, attr)];
}

bool matches_evidence(const InfluenceDiagram& d, const std::vector<int>& mask, const std::vector<int>& outcome,
                      int utility_var) {
    for (int v = 0; v < d.num_vars(); ++v) {
        if (v == utility_var) continue;
        if (mask[v] >= 0 && outcome[v] != mask[v]) return false;
    }
    return true;
}

Strategy empty_strategy(const InfluenceDiagram& d) {
    Strategy s;
    for (int v : d.decision_order()) s.policy[d.var(v).id] = {};
    return s;
}

}  // namespace

JointTable make_joint(const InfluenceDiagram& d, const Strategy& s) {
    WalkPlan w = plan_walk(d);
    JointTable t;
    t.vars = w.order;
    long size = 1;
    for (int v : w.order) size *= d.num_outcomes(v);
    if (size > kJointCap) throw QueryError("joint distribution too large for the oracle");
    t.mass.assign(size, 0.0);
    t.value.assign(size, 0.0);
    t.util.assign(size, 0.0);

    std::vector<int> outcome(d.num_vars(), -1);
    std::vector<long> stride(w.order.size());
    long acc = 1;
    for (int i = static_cast<int>(w.order.size()) - 1; i >= 0; --i) {
        stride[i] = acc;
        acc *= d.num_outcomes(w.order[i]);
    }
    for (long c = 0; c < w.joint_size; ++c) {
        double p = walk_joint(d, w, s, c, outcome);
        long idx = 0;
        for (size_t i = 0; i < w.order.size(); ++i) idx += stride[i] * outcome[w.order[i]];
        t.mass[idx] += p;
        double v = joint_value(d, outcome);
        t.value[idx] = v;
        t.util[idx] = d.has_utility() ? d.utility().utility(v) : 0.0;
    }
    return t;
}

std::vector<Strategy> enumerate_strategies(const InfluenceDiagram& d) {
    struct Slot {
        VarId decision;
        long config;
        std::vector<int> alts;  // available alternatives, ascending
    };
    std::vector<Slot> slots;
    long total = 1;
    for (int v : d.decision_order()) {
        const auto& spec = *d.decision_spec(v);
        long configs = d.config_count(spec.parents);
        for (long c = 0; c < configs; ++c) {
            Slot slot{d.var(v).id, c, {}};
            for (int a = 0; a < d.num_outcomes(v); ++a)
                if (d.available(v, c, a)) slot.alts.push_back(a);
            total *= static_cast<long>(slot.alts.size());
            if (total > kStrategyCap) throw QueryError("strategy space exceeds the enumeration cap");
            slots.push_back(std::move(slot));
        }
    }

    std::vector<Strategy> out;
    out.reserve(total);
    Strategy base;
    for (int v : d.decision_order())
        base.policy[d.var(v).id] = std::vector<int>(d.config_count(d.decision_spec(v)->parents), 0);
    // Mixed-radix odometer, first slot most significant: index order is
    // lexicographic over (decision order, configuration, alternative).
    for (long i = 0; i < total; ++i) {
        Strategy s = base;
        long rest = i;
        for (int j = static_cast<int>(slots.size()) - 1; j >= 0; --j) {
            const Slot& slot = slots[j];
            long card = static_cast<long>(slot.alts.size());
            s.policy[slot.decision][slot.config] = slot.alts[rest % card];
            rest /= card;
        }
        out.push_back(std::move(s));
    }
    return out;
}

EuResult oracle_eu(const InfluenceDiagram& d, const Strategy& s, const Evidence& e) {
    if (!d.has_utility()) throw QueryError("expected-utility query on a diagram without a utility node");
    WalkPlan w = plan_walk(d);
    std::vector<int> mask = d.evidence_mask(e);
    std::vector<int> outcome(d.num_vars(), -1);
    double num = 0.0, den = 0.0;
    for (long c = 0; c < w.joint_size; ++c) {
        double p = walk_joint(d, w, s, c, outcome);
        if (p == 0.0 || !matches_evidence(d, mask, outcome, w.utility_var)) continue;
        den += p;
        num += p * d.utility().utility(joint_value(d, outcome));
    }
    if (den <= 0.0) throw QueryError("evidence has probability zero");
    return {num / den, den};
}

double oracle_prob(const InfluenceDiagram& d, const Strategy& s, const Evidence& e) {
    WalkPlan w = plan_walk(d);
    std::vector<int> mask = d.evidence_mask(e);
    std::vector<int> outcome(d.num_vars(), -1);
    double den = 0.0;
    for (long c = 0; c < w.joint_size; ++c) {
        double p = walk_joint(d, w, s, c, outcome);
        if (p == 0.0 || !matches_evidence(d, mask, outcome, w.utility_var)) continue;
        den += p;
    }
    return den;
}

double oracle_prob(const InfluenceDiagram& d, const Evidence& e) {
    if (!d.decision_order().empty())
        throw QueryError("oracle_prob without a strategy requires a chance-only diagram");
    return oracle_prob(d, empty_strategy(d), e);
}

std::map<std::pair<int, int>, double> oracle_marginals(const InfluenceDiagram& d, const Evidence& e) {
    if (!d.decision_order().empty())
        throw QueryError("oracle_marginals requires a chance-only diagram");
    Strategy s = empty_strategy(d);
    WalkPlan w = plan_walk(d);
    std::vector<int> mask = d.evidence_mask(e);
    std::vector<int> outcome(d.num_vars(), -1);
    std::map<std::pair<int, int>, double> out;
    for (int v : w.order)
        for (int o = 0; o < d.num_outcomes(v); ++o) out[{v, o}] = 0.0;
    for (long c = 0; c < w.joint_size; ++c) {
        double p = walk_joint(d, w, s, c, outcome);
        if (p == 0.0 || !matches_evidence(d, mask, outcome, w.utility_var)) continue;
        for (int v : w.order) out[{v, outcome[v]}] += p;
    }
    return out;
}

MeuResult oracle_meu(const InfluenceDiagram& d, const Evidence& e, Exec exec) {
    std::vector<Strategy> strategies = enumerate_strategies(d);
    if (strategies.empty()) throw QueryError("diagram has no decisions");
    long n = static_cast<long>(strategies.size());
    std::vector<double> eu(n), pe(n);
    std::vector<std::uint8_t> failed(n, 0);
    parallel_for(exec, n, [&](long i) {
        try {
            EuResult r = oracle_eu(d, strategies[i], e);
            eu[i] = r.eu;
            pe[i] = r.p_e;
        } catch (const QueryError&) {
            failed[i] = 1;
        }
    });
    MeuResult best;
    for (long i = 0; i < n; ++i) {
        if (failed[i]) continue;
        if (best.s_index < 0 || eu[i] > best.meu) {
            best.meu = eu[i];
            best.s_star = strategies[i];
            best.s_index = i;
            best.p_e = pe[i];
        }
    }
    if (best.s_index < 0) throw QueryError("evidence has probability zero");
    best.ce = d.utility().utility.inverse(best.meu);
    return best;
}

VoiResult oracle_voi(const InfluenceDiagram& d, const Evidence& e, const std::vector<VarId>& vars, Exec exec) {
    // Preconditions: chance, unobserved, no decision among the ancestors.
    std::vector<int> var_idx;
    for (const auto& id : vars) {
        int v = d.var_index(id);
        if (d.var(v).kind != VarKind::Chance) throw QueryError("'" + id + "' is not a chance variable");
        if (e.assignments.count(id)) throw QueryError("'" + id + "' is already observed");
        var_idx.push_back(v);
    }
    {
        std::vector<std::uint8_t> reach(d.num_vars(), 0);  // reach[v]: v has a decision ancestor
        for (int v : d.topo_order()) {
            const std::vector<VarId>* parents = nullptr;
            if (const auto* c = d.chance_spec(v)) parents = &c->parents;
            if (const auto* dd = d.decision_spec(v)) parents = &dd->parents;
            if (!parents) continue;
            for (const auto& p : *parents) {
                int pi = d.var_index(p);
                if (d.var(pi).kind == VarKind::Decision || reach[pi]) reach[v] = 1;
            }
        }
        for (int v : var_idx)
            if (reach[v]) throw QueryError("'" + d.var(v).id + "' is affected by a decision");
    }

    MeuResult base = oracle_meu(d, e, exec);
    long count = 1;
    for (int v : var_idx) {
        count *= d.num_outcomes(v);
        if (count > kInstantiationCap) throw QueryError("too many instantiations for the VOI sweep");
    }
    std::vector<double> numerators(count, 0.0);
    parallel_for(exec, count, [&](long c) {
        Evidence cond = e;
        long rest = c;
        for (int i = static_cast<int>(var_idx.size()) - 1; i >= 0; --i) {
            int v = var_idx[i];
            cond.assignments[d.var(v).id] = d.var(v).outcomes[rest % d.num_outcomes(v)];
            rest /= d.num_outcomes(v);
        }
        try {
            MeuResult r = oracle_meu(d, cond, Exec::Serial);
            // max_s P(U=1, x, e | s) = MEU(e,x) * P(e,x)
            numerators[c] = r.meu * r.p_e;
        } catch (const QueryError&) {
            numerators[c] = 0.0;  // impossible instantiation contributes nothing
        }
    });
    double sum = 0.0;
    for (double x : numerators) sum += x;
    VoiResult out;
    out.meu_pi = sum / base.p_e;
    const auto& u = d.utility().utility;
    out.voi = u.inverse(out.meu_pi) - u.inverse(base.meu);
    return out;
}

Interval oracle_interval(const InfluenceDiagram& d, const Evidence& e, const std::string& k, double step,
                         Exec exec) {
    if (step < 1e-4) throw QueryError("oracle interval grid step must be at least 1e-4");
    const MetaParameter* m = d.meta(k);
    if (!m) throw QueryError("unknown meta-parameter '" + k + "'");
    double tau0 = m->reference;
    MeuResult ref = oracle_meu(d, e, exec);

    auto optimal_matches = [&](double tau) {
        InfluenceDiagram probe = apply_meta(d, k, tau);
        try {
            MeuResult r = oracle_meu(probe, e, exec);
            return agree_on_active(d, ref.s_star, probe, r.s_star, e);
        } catch (const QueryError&) {
            return false;  // evidence impossible at this tau
        }
    };

    Interval out{tau0, tau0};
    for (long i = 1;; ++i) {
        double tau = tau0 + i * step;
        if (tau > 1.0 + step / 2) break;
        tau = std::min(tau, 1.0);
        if (!optimal_matches(tau)) break;
        out.hi = tau;
        if (tau >= 1.0) break;
    }
    for (long i = 1;; ++i) {
        double tau = tau0 - i * step;
        if (tau < -step / 2) break;
        tau = std::max(tau, 0.0);
        if (!optimal_matches(tau)) break;
        out.lo = tau;
        if (tau <= 0.0) break;
    }
    return out;
}

double finite_diff(const std::function<double(double)>& fn, double x0, double h) {
    if (!(h >= 1e-8 && h <= 1e-2)) throw QueryError("finite difference step outside [1e-8, 1e-2]");
    return (fn(x0 + h) - fn(x0 - h)) / (2.0 * h);
}

std::map<VarId, std::vector<std::uint8_t>> active_configs(const InfluenceDiagram& d, const Strategy& s,
                                                          const Evidence& e) {
    WalkPlan w = plan_walk(d);
    std::vector<int> mask = d.evidence_mask(e);
    std::vector<int> outcome(d.num_vars(), -1);
    std::map<VarId, std::vector<double>> weight;
    for (int v : d.decision_order())
        weight[d.var(v).id].assign(d.config_count(d.decision_spec(v)->parents), 0.0);
    for (long c = 0; c < w.joint_size; ++c) {
        double p = walk_joint(d, w, s, c, outcome);
        if (p == 0.0 || !matches_evidence(d, mask, outcome, w.utility_var)) continue;
        for (int v : d.decision_order()) {
            const auto& spec = *d.decision_spec(v);
            std::vector<int> pa(spec.parents.size());
            for (size_t i = 0; i < spec.parents.size(); ++i) pa[i] = outcome[d.var_index(spec.parents[i])];
            weight[d.var(v).id][d.config_rank(spec.parents, pa)] += p;
        }
    }
    std::map<VarId, std::vector<std::uint8_t>> out;
    for (const auto& [id, ws] : weight) {
        auto& flags = out[id];
        flags.reserve(ws.size());
        for (double x : ws) flags.push_back(x > kActiveTol ? 1 : 0);
    }
    return out;
}

bool agree_on_active(const InfluenceDiagram& da, const Strategy& sa, const InfluenceDiagram& db,
                     const Strategy& sb, const Evidence& e) {
    auto active_a = active_configs(da, sa, e);
    auto active_b = active_configs(db, sb, e);
    for (const auto& [id, flags_a] : active_a) {
        const auto& flags_b = active_b.at(id);
        const auto& pa = sa.policy.at(id);
        const auto& pb = sb.policy.at(id);
        for (size_t c = 0; c < flags_a.size(); ++c)
            if (flags_a[c] && flags_b[c] && pa[c] != pb[c]) return false;
    }
    return true;
}

}  // namespace dcirc::oracle
