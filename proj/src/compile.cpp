#include "dcirc/compile.hpp"

#include <algorithm>
#include <set>

namespace dcirc {

namespace {

// Intermediate elimination factor: a table of circuit node ids over the
// listed variables (ascending indices, first variable slowest).
struct Factor {
    std::vector<int> vars;
    std::vector<int> table;
};

long table_size(const InfluenceDiagram& d, const std::vector<int>& vars) {
    long n = 1;
    for (int v : vars) n *= d.num_outcomes(v);
    return n;
}

std::vector<int> unrank(const InfluenceDiagram& d, const std::vector<int>& vars, long config) {
    std::vector<int> out(vars.size());
    for (size_t i = vars.size(); i-- > 0;) {
        int card = d.num_outcomes(vars[i]);
        out[i] = static_cast<int>(config % card);
        config /= card;
    }
    return out;
}

}  // namespace

class CircuitBuilder {
  public:
    explicit CircuitBuilder(const InfluenceDiagram& d) : d_(d) {
        meta_of_var_.assign(d.num_vars(), -1);
        for (size_t k = 0; k < d.metas().size(); ++k)
            meta_of_var_[d.var_index(d.metas()[k].variable)] = static_cast<int>(k);
        circuit_.meta_of_.assign(d.metas().size(), -1);
    }

    DecisionCircuit build(const std::vector<int>& order) {
        for (int v = 0; v < d_.num_vars(); ++v) pool_.push_back(family_factor(v));
        for (int v : order) eliminate(v);
        std::vector<int> scalars;
        for (const Factor& f : pool_) {
            if (!f.vars.empty()) throw QueryError("internal: uneliminated variables in factor pool");
            scalars.push_back(f.table[0]);
        }
        circuit_.root_ = product_of(std::move(scalars));
        for (const CircuitNode& n : circuit_.nodes_) circuit_.edges_ += static_cast<long>(n.children.size());
        circuit_.order_.assign(order.begin(), order.end());
        return std::move(circuit_);
    }

  private:
    int add_node(CircuitNode n) {
        circuit_.nodes_.push_back(std::move(n));
        return static_cast<int>(circuit_.nodes_.size()) - 1;
    }

    int const_node(double v) {
        auto [it, fresh] = const_of_.try_emplace(v, 0);
        if (fresh) {
            CircuitNode n;
            n.kind = NodeKind::Constant;
            n.value = v;
            it->second = add_node(std::move(n));
        }
        return it->second;
    }

    int indicator(int var, int outcome) {
        auto [it, fresh] = circuit_.indicator_of_.try_emplace({var, outcome}, 0);
        if (fresh) {
            CircuitNode n;
            n.kind = NodeKind::Indicator;
            n.value = 1.0;
            n.var = var;
            n.outcome = outcome;
            it->second = add_node(std::move(n));
        }
        return it->second;
    }

    int parameter(int var, int outcome, long config, double value) {
        auto [it, fresh] = circuit_.parameter_of_.try_emplace({var, outcome, config}, 0);
        if (fresh) {
            CircuitNode n;
            n.kind = NodeKind::Parameter;
            n.value = value;
            n.var = var;
            n.outcome = outcome;
            n.config = config;
            it->second = add_node(std::move(n));
        }
        return it->second;
    }

    int meta_node(int k) {
        if (circuit_.meta_of_[k] < 0) {
            CircuitNode n;
            n.kind = NodeKind::Meta;
            n.value = d_.metas()[k].reference;
            n.meta = k;
            circuit_.meta_of_[k] = add_node(std::move(n));
        }
        return circuit_.meta_of_[k];
    }

    bool is_const(int id, double v) const {
        const CircuitNode& n = circuit_.nodes_[id];
        return n.kind == NodeKind::Constant && n.value == v;
    }
    bool is_const(int id) const { return circuit_.nodes_[id].kind == NodeKind::Constant; }

    int sum_of(std::vector<int> children) {
        std::vector<int> kept;
        for (int c : children)
            if (!is_const(c, 0.0)) kept.push_back(c);
        if (kept.empty()) return const_node(0.0);
        if (std::all_of(kept.begin(), kept.end(), [&](int c) { return is_const(c); })) {
            double total = 0;
            for (int c : kept) total += circuit_.nodes_[c].value;
            return const_node(total);
        }
        if (kept.size() == 1) return kept[0];
        std::sort(kept.begin(), kept.end());
        auto [it, fresh] = sum_of_.try_emplace(kept, 0);
        if (fresh) {
            CircuitNode n;
            n.kind = NodeKind::Sum;
            n.children = kept;
            it->second = add_node(std::move(n));
        }
        return it->second;
    }

    int product_of(std::vector<int> children) {
        std::vector<int> kept;
        for (int c : children) {
            if (is_const(c, 0.0)) return const_node(0.0);
            if (!is_const(c, 1.0)) kept.push_back(c);
        }
        if (kept.empty()) return const_node(1.0);
        if (std::all_of(kept.begin(), kept.end(), [&](int c) { return is_const(c); })) {
            double total = 1;
            for (int c : kept) total *= circuit_.nodes_[c].value;
            return const_node(total);
        }
        if (kept.size() == 1) return kept[0];
        std::sort(kept.begin(), kept.end());
        auto [it, fresh] = product_of_.try_emplace(kept, 0);
        if (fresh) {
            CircuitNode n;
            n.kind = NodeKind::Product;
            n.children = kept;
            it->second = add_node(std::move(n));
        }
        return it->second;
    }

    int max_node(int decision, long config, std::vector<int> children, std::vector<int> alts,
                 std::vector<std::uint8_t> avail) {
        CircuitNode n;
        n.kind = NodeKind::Max;
        n.var = decision;
        n.config = config;
        n.children = std::move(children);
        n.alts = std::move(alts);
        n.avail = std::move(avail);
        return add_node(std::move(n));
    }

    // CPT entry as a circuit input: a plain parameter leaf, or the affine
    // form c0 + c1 * tau_k when the variable is bound to meta-parameter k.
    int theta_entry(int var, int outcome, long row, double prob) {
        int k = meta_of_var_[var];
        if (k < 0) return parameter(var, outcome, row, prob);
        const MetaParameter& meta = d_.metas()[k];
        long flat = row * d_.num_outcomes(var) + outcome;
        return sum_of({const_node(meta.c0[flat]),
                       product_of({const_node(meta.c1[flat]), meta_node(k)})});
    }

    Factor family_factor(int var) {
        Factor f;
        std::vector<VarId> parents;
        const Variable& v = d_.var(var);
        if (const auto* c = d_.chance_spec(var)) parents = c->parents;
        if (const auto* dd = d_.decision_spec(var)) parents = dd->parents;
        if (v.kind == VarKind::Utility) parents = d_.utility().attributes;

        f.vars.push_back(var);
        for (const VarId& p : parents) f.vars.push_back(d_.var_index(p));
        std::sort(f.vars.begin(), f.vars.end());

        long size = table_size(d_, f.vars);
        f.table.resize(size);
        for (long cfg = 0; cfg < size; ++cfg) {
            auto outcomes = unrank(d_, f.vars, cfg);
            int own = 0;
            std::vector<int> parent_outcomes(parents.size());
            for (size_t i = 0; i < f.vars.size(); ++i) {
                if (f.vars[i] == var) {
                    own = outcomes[i];
                } else {
                    for (size_t j = 0; j < parents.size(); ++j)
                        if (d_.var_index(parents[j]) == f.vars[i]) parent_outcomes[j] = outcomes[i];
                }
            }
            long row = d_.config_rank(parents, parent_outcomes);
            int entry = -1;
            switch (v.kind) {
                case VarKind::Chance: {
                    const ChanceSpec& spec = *d_.chance_spec(var);
                    double prob = spec.cpt[row * d_.num_outcomes(var) + own];
                    entry = product_of({indicator(var, own), theta_entry(var, own, row, prob)});
                    break;
                }
                case VarKind::Decision: {
                    entry = d_.available(var, row, own)
                                ? product_of({indicator(var, own), parameter(var, own, row, 1.0)})
                                : const_node(0.0);
                    break;
                }
                case VarKind::Utility: {
                    double u = d_.utility().utility(d_.utility().values[row]);
                    double p = own == 0 ? u : 1.0 - u;
                    entry = product_of({indicator(var, own), const_node(p)});
                    break;
                }
            }
            f.table[cfg] = entry;
        }
        return f;
    }

    // Project a configuration of `from` onto the subset `onto` (both ascending).
    long project(const std::vector<int>& from, const std::vector<int>& outcomes,
                 const std::vector<int>& onto) const {
        long config = 0;
        for (int v : onto) {
            size_t pos = std::lower_bound(from.begin(), from.end(), v) - from.begin();
            config = config * d_.num_outcomes(v) + outcomes[pos];
        }
        return config;
    }

    void eliminate(int var) {
        std::vector<Factor> touching;
        std::vector<Factor> rest;
        for (Factor& f : pool_) {
            if (std::binary_search(f.vars.begin(), f.vars.end(), var))
                touching.push_back(std::move(f));
            else
                rest.push_back(std::move(f));
        }
        pool_ = std::move(rest);

        // Multiply everything mentioning the variable into one factor.
        std::set<int> var_union;
        for (const Factor& f : touching) var_union.insert(f.vars.begin(), f.vars.end());
        Factor merged;
        merged.vars.assign(var_union.begin(), var_union.end());
        long size = table_size(d_, merged.vars);
        merged.table.resize(size);
        for (long cfg = 0; cfg < size; ++cfg) {
            auto outcomes = unrank(d_, merged.vars, cfg);
            std::vector<int> parts;
            parts.reserve(touching.size());
            for (const Factor& f : touching)
                parts.push_back(f.table[project(merged.vars, outcomes, f.vars)]);
            merged.table[cfg] = product_of(std::move(parts));
        }

        Factor result;
        for (int v : merged.vars)
            if (v != var) result.vars.push_back(v);
        long result_size = table_size(d_, result.vars);
        result.table.resize(result_size);
        int card = d_.num_outcomes(var);
        size_t var_pos = std::lower_bound(merged.vars.begin(), merged.vars.end(), var) - merged.vars.begin();

        const bool is_decision = d_.var(var).kind == VarKind::Decision;
        const DecisionSpec* spec = d_.decision_spec(var);
        for (long cfg = 0; cfg < result_size; ++cfg) {
            auto context = unrank(d_, result.vars, cfg);
            std::vector<int> full(merged.vars.size());
            for (size_t i = 0, j = 0; i < merged.vars.size(); ++i)
                full[i] = i == var_pos ? 0 : context[j++];
            std::vector<int> entries(card);
            for (int out = 0; out < card; ++out) {
                full[var_pos] = out;
                long idx = 0;
                for (size_t i = 0; i < merged.vars.size(); ++i)
                    idx = idx * d_.num_outcomes(merged.vars[i]) + full[i];
                entries[out] = merged.table[idx];
            }
            if (is_decision) {
                // The surviving context is exactly the information set, so a
                // max node keyed by the parent configuration is well defined.
                std::vector<int> parent_idx;
                for (const VarId& p : spec->parents) parent_idx.push_back(d_.var_index(p));
                std::sort(parent_idx.begin(), parent_idx.end());
                if (parent_idx != result.vars)
                    throw QueryError("internal: decision context does not match its information set");
                std::vector<int> parent_outcomes(spec->parents.size());
                for (size_t j = 0; j < spec->parents.size(); ++j) {
                    int pv = d_.var_index(spec->parents[j]);
                    size_t pos = std::lower_bound(result.vars.begin(), result.vars.end(), pv) - result.vars.begin();
                    parent_outcomes[j] = context[pos];
                }
                long pa_config = d_.config_rank(spec->parents, parent_outcomes);
                std::vector<int> alts(card);
                std::vector<std::uint8_t> avail(card);
                for (int out = 0; out < card; ++out) {
                    alts[out] = out;
                    avail[out] = d_.available(var, pa_config, out) ? 1 : 0;
                }
                int node = max_node(var, pa_config, entries, alts, avail);
                auto& slots = circuit_.max_of_[var];
                if (slots.empty()) slots.assign(d_.config_count_of(var), -1);
                slots[pa_config] = node;
                result.table[cfg] = node;
            } else {
                result.table[cfg] = sum_of(std::move(entries));
            }
        }
        pool_.push_back(std::move(result));
    }

    const InfluenceDiagram& d_;
    DecisionCircuit circuit_;
    std::vector<int> meta_of_var_;
    std::vector<Factor> pool_;
    std::map<double, int> const_of_;
    std::map<std::vector<int>, int> sum_of_;
    std::map<std::vector<int>, int> product_of_;
};

namespace {

std::vector<int> to_indices(const InfluenceDiagram& d, const std::vector<VarId>& order) {
    std::vector<int> out;
    out.reserve(order.size());
    for (const VarId& id : order) out.push_back(d.var_index(id));
    return out;
}

// Set-based elimination simulation used by the min-fill heuristic.
struct FillSim {
    std::vector<std::vector<int>> scopes;

    explicit FillSim(const InfluenceDiagram& d) {
        for (int v = 0; v < d.num_vars(); ++v) {
            std::vector<VarId> parents;
            if (const auto* c = d.chance_spec(v)) parents = c->parents;
            if (const auto* dd = d.decision_spec(v)) parents = dd->parents;
            if (d.var(v).kind == VarKind::Utility) parents = d.utility().attributes;
            std::vector<int> scope{v};
            for (const VarId& p : parents) scope.push_back(d.var_index(p));
            std::sort(scope.begin(), scope.end());
            scopes.push_back(std::move(scope));
        }
    }

    std::vector<int> neighbours(int v) const {
        std::set<int> out;
        for (const auto& s : scopes)
            if (std::binary_search(s.begin(), s.end(), v)) out.insert(s.begin(), s.end());
        out.erase(v);
        return {out.begin(), out.end()};
    }

    bool adjacent(int a, int b) const {
        for (const auto& s : scopes)
            if (std::binary_search(s.begin(), s.end(), a) && std::binary_search(s.begin(), s.end(), b))
                return true;
        return false;
    }

    int fill_cost(int v) const {
        auto nb = neighbours(v);
        int cost = 0;
        for (size_t i = 0; i < nb.size(); ++i)
            for (size_t j = i + 1; j < nb.size(); ++j)
                if (!adjacent(nb[i], nb[j])) cost++;
        return cost;
    }

    void eliminate(int v) {
        std::set<int> merged;
        std::vector<std::vector<int>> kept;
        for (auto& s : scopes) {
            if (std::binary_search(s.begin(), s.end(), v))
                merged.insert(s.begin(), s.end());
            else
                kept.push_back(std::move(s));
        }
        merged.erase(v);
        kept.emplace_back(merged.begin(), merged.end());
        scopes = std::move(kept);
    }
};

void order_block(FillSim& sim, std::set<int>& block, std::vector<int>& out) {
    while (!block.empty()) {
        int best = -1, best_cost = 0;
        for (int v : block) {
            int cost = sim.fill_cost(v);
            if (best < 0 || cost < best_cost) {
                best = v;
                best_cost = cost;
            }
        }
        sim.eliminate(best);
        block.erase(best);
        out.push_back(best);
    }
}

}  // namespace

std::vector<VarId> default_order(const InfluenceDiagram& d) {
    FillSim sim(d);
    std::set<int> remaining;
    for (int v = 0; v < d.num_vars(); ++v) remaining.insert(v);

    std::vector<int> order;
    const auto& decisions = d.decision_order();
    for (size_t k = decisions.size(); k-- > 0;) {
        int dec = decisions[k];
        std::set<int> info;
        for (const VarId& p : d.decision_spec(dec)->parents) info.insert(d.var_index(p));
        std::set<int> block;
        for (int v : remaining)
            if (v != dec && !info.count(v)) block.insert(v);
        order_block(sim, block, order);
        for (int v : order)
            remaining.erase(v);
        sim.eliminate(dec);
        order.push_back(dec);
        remaining.erase(dec);
    }
    std::set<int> block = remaining;
    order_block(sim, block, order);

    std::vector<VarId> out;
    for (int v : order) out.push_back(d.var(v).id);
    return out;
}

bool is_legal_order(const InfluenceDiagram& d, const std::vector<VarId>& order) {
    if (static_cast<int>(order.size()) != d.num_vars()) return false;
    std::set<int> remaining;
    for (int v = 0; v < d.num_vars(); ++v) remaining.insert(v);
    for (const VarId& id : order) {
        int v = d.find_var(id);
        if (v < 0 || !remaining.count(v)) return false;
        if (d.var(v).kind == VarKind::Decision) {
            std::set<int> info;
            for (const VarId& p : d.decision_spec(v)->parents) info.insert(d.var_index(p));
            std::set<int> rest = remaining;
            rest.erase(v);
            if (rest != info) return false;
        }
        remaining.erase(v);
    }
    return remaining.empty();
}

DecisionCircuit compile(const InfluenceDiagram& d, const std::vector<VarId>& order) {
    std::vector<VarId> used = order.empty() ? default_order(d) : order;
    if (!is_legal_order(d, used))
        throw QueryError("illegal elimination order for this diagram");
    return CircuitBuilder(d).build(to_indices(d, used));
}

}  // namespace dcirc
