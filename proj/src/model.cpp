#include "dcirc/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace dcirc {

namespace {

constexpr double kRowSumTol = 1e-9;
constexpr double kRefMatchTol = 1e-9;

}  // namespace

double UtilityFunction::operator()(double v) const {
    if (kind == Kind::Linear) return a * v + b;
    return -a * std::exp(-v / rho) + b;
}

double UtilityFunction::inverse(double u) const {
    if (kind == Kind::Linear) return (u - b) / a;
    double arg = (b - u) / a;
    if (arg <= 0.0) throw QueryError("utility value outside the range of the exponential utility function");
    return -rho * std::log(arg);
}

double UtilityFunction::slope_at(double v) const {
    if (kind == Kind::Linear) return a;
    return (a / rho) * std::exp(-v / rho);
}

InfluenceDiagram::InfluenceDiagram(DiagramData data) : data_(std::move(data)) { validate(); }

int InfluenceDiagram::var_index(const VarId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw QueryError("unknown variable '" + id + "'");
    return it->second;
}

int InfluenceDiagram::find_var(const VarId& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? -1 : it->second;
}

int InfluenceDiagram::outcome_index(int var_idx, const std::string& outcome) const {
    const auto& outs = data_.variables[var_idx].outcomes;
    auto it = std::find(outs.begin(), outs.end(), outcome);
    return it == outs.end() ? -1 : static_cast<int>(it - outs.begin());
}

const ChanceSpec* InfluenceDiagram::chance_spec(int var_idx) const {
    int i = chance_of_[var_idx];
    return i < 0 ? nullptr : &data_.chance[i];
}

const DecisionSpec* InfluenceDiagram::decision_spec(int var_idx) const {
    int i = decision_of_[var_idx];
    return i < 0 ? nullptr : &data_.decisions[i];
}

const UtilitySpec& InfluenceDiagram::utility() const {
    if (!data_.utility) throw QueryError("diagram has no utility node");
    return *data_.utility;
}

const MetaParameter* InfluenceDiagram::meta(const std::string& id) const {
    for (const auto& m : data_.metas)
        if (m.id == id) return &m;
    return nullptr;
}

long InfluenceDiagram::config_count(const std::vector<VarId>& parents) const {
    long n = 1;
    for (const auto& p : parents) n *= num_outcomes(var_index(p));
    return n;
}

long InfluenceDiagram::config_count_of(int var_idx) const {
    if (const auto* c = chance_spec(var_idx)) return config_count(c->parents);
    if (const auto* d = decision_spec(var_idx)) return config_count(d->parents);
    if (var_idx == utility_var_) return config_count(data_.utility->attributes);
    return 1;
}

std::vector<int> InfluenceDiagram::config_unrank(const std::vector<VarId>& parents, long config) const {
    std::vector<int> out(parents.size(), 0);
    for (int i = static_cast<int>(parents.size()) - 1; i >= 0; --i) {
        int card = num_outcomes(var_index(parents[i]));
        out[i] = static_cast<int>(config % card);
        config /= card;
    }
    return out;
}

long InfluenceDiagram::config_rank(const std::vector<VarId>& parents, const std::vector<int>& outcomes) const {
    long rank = 0;
    for (size_t i = 0; i < parents.size(); ++i) rank = rank * num_outcomes(var_index(parents[i])) + outcomes[i];
    return rank;
}

bool InfluenceDiagram::available(int decision_idx, long config, int alternative) const {
    const auto* spec = decision_spec(decision_idx);
    if (!spec || spec->availability.empty()) return true;
    long n_alt = num_outcomes(decision_idx);
    return spec->availability[config * n_alt + alternative] != 0;
}

std::vector<int> InfluenceDiagram::evidence_mask(const Evidence& e) const {
    std::vector<int> mask(num_vars(), -1);
    for (const auto& [id, outcome] : e.assignments) {
        int v = var_index(id);
        int o = outcome_index(v, outcome);
        if (o < 0) throw QueryError("variable '" + id + "' has no outcome '" + outcome + "'");
        mask[v] = o;
    }
    return mask;
}

void InfluenceDiagram::validate() {
    // Identifiers and outcome labels.
    for (size_t i = 0; i < data_.variables.size(); ++i) {
        auto& v = data_.variables[i];
        if (v.id.empty()) throw ValidationError("variable with empty id");
        if (v.name.empty()) v.name = v.id;
        if (!index_.emplace(v.id, static_cast<int>(i)).second)
            throw ValidationError("duplicate variable id '" + v.id + "'");
        if (v.outcomes.empty()) throw ValidationError("variable '" + v.id + "' has no outcomes");
        std::set<std::string> seen(v.outcomes.begin(), v.outcomes.end());
        if (seen.size() != v.outcomes.size())
            throw ValidationError("variable '" + v.id + "' has duplicate outcome labels");
    }

    chance_of_.assign(num_vars(), -1);
    decision_of_.assign(num_vars(), -1);

    auto check_parents = [&](const VarId& owner, const std::vector<VarId>& parents) {
        std::set<VarId> seen;
        for (const auto& p : parents) {
            if (index_.find(p) == index_.end())
                throw ValidationError("'" + owner + "' references unknown parent '" + p + "'");
            if (p == owner) throw ValidationError("'" + owner + "' lists itself as a parent");
            if (!seen.insert(p).second) throw ValidationError("'" + owner + "' lists parent '" + p + "' twice");
        }
    };

    for (size_t i = 0; i < data_.chance.size(); ++i) {
        const auto& c = data_.chance[i];
        int v = find_var(c.variable);
        if (v < 0) throw ValidationError("chance spec references unknown variable '" + c.variable + "'");
        if (data_.variables[v].kind != VarKind::Chance)
            throw ValidationError("chance spec given for non-chance variable '" + c.variable + "'");
        if (chance_of_[v] >= 0) throw ValidationError("duplicate chance spec for '" + c.variable + "'");
        check_parents(c.variable, c.parents);
        chance_of_[v] = static_cast<int>(i);
    }
    for (size_t i = 0; i < data_.decisions.size(); ++i) {
        const auto& d = data_.decisions[i];
        int v = find_var(d.variable);
        if (v < 0) throw ValidationError("decision spec references unknown variable '" + d.variable + "'");
        if (data_.variables[v].kind != VarKind::Decision)
            throw ValidationError("decision spec given for non-decision variable '" + d.variable + "'");
        if (decision_of_[v] >= 0) throw ValidationError("duplicate decision spec for '" + d.variable + "'");
        check_parents(d.variable, d.parents);
        decision_of_[v] = static_cast<int>(i);
    }

    // Kinds and specs must pair up; at most one utility node.
    for (int v = 0; v < num_vars(); ++v) {
        const auto& var = data_.variables[v];
        switch (var.kind) {
            case VarKind::Chance:
                if (chance_of_[v] < 0) throw ValidationError("chance variable '" + var.id + "' has no CPT");
                break;
            case VarKind::Decision:
                if (decision_of_[v] < 0) throw ValidationError("decision variable '" + var.id + "' has no decision spec");
                break;
            case VarKind::Utility:
                if (utility_var_ >= 0)
                    throw ValidationError("more than one utility node ('" + data_.variables[utility_var_].id +
                                          "', '" + var.id + "')");
                utility_var_ = v;
                if (var.outcomes.size() != 2)
                    throw ValidationError("utility variable '" + var.id + "' must be binary (U=1 first)");
                break;
        }
    }
    if (utility_var_ >= 0) {
        if (!data_.utility) throw ValidationError("utility node present but no utility spec");
    } else if (data_.utility) {
        throw ValidationError("utility spec present but no utility variable");
    }

    // Table shapes and contents.
    for (const auto& c : data_.chance) {
        int v = var_index(c.variable);
        long rows = config_count(c.parents);
        long cols = num_outcomes(v);
        if (static_cast<long>(c.cpt.size()) != rows * cols) {
            std::ostringstream os;
            os << "CPT for " << c.variable << " has " << c.cpt.size() << " entries, expected " << rows * cols;
            throw ValidationError(os.str());
        }
        for (long r = 0; r < rows; ++r) {
            double sum = 0.0;
            for (long o = 0; o < cols; ++o) {
                double p = c.cpt[r * cols + o];
                if (!(p >= 0.0 && p <= 1.0))
                    throw ValidationError("CPT entry for " + c.variable + " outside [0,1]");
                sum += p;
            }
            if (std::abs(sum - 1.0) > kRowSumTol) {
                std::ostringstream os;
                os << "CPT row " << r << " for " << c.variable << " sums to " << sum << ", not 1";
                throw ValidationError(os.str());
            }
        }
    }
    for (const auto& d : data_.decisions) {
        int v = var_index(d.variable);
        long rows = config_count(d.parents);
        long cols = num_outcomes(v);
        if (!d.availability.empty()) {
            if (static_cast<long>(d.availability.size()) != rows * cols)
                throw ValidationError("availability table for " + d.variable + " has the wrong size");
            for (long r = 0; r < rows; ++r) {
                bool any = false;
                for (long o = 0; o < cols; ++o) {
                    auto a = d.availability[r * cols + o];
                    if (a != 0 && a != 1)
                        throw ValidationError("availability entry for " + d.variable + " is not 0/1");
                    any = any || a == 1;
                }
                if (!any)
                    throw ValidationError("decision " + d.variable + " has no available alternative in some configuration");
            }
        }
    }
    if (data_.utility) {
        const auto& u = *data_.utility;
        check_parents(data_.variables[utility_var_].id, u.attributes);
        long rows = config_count(u.attributes);
        if (static_cast<long>(u.values.size()) != rows)
            throw ValidationError("utility value table has the wrong size");
        const auto& f = u.utility;
        if (!(f.a > 0.0)) throw ValidationError("utility function requires a > 0");
        if (f.kind == UtilityFunction::Kind::Exponential && !(f.rho > 0.0))
            throw ValidationError("exponential utility requires rho > 0");
        for (double v : u.values) {
            double uv = f(v);
            if (!(uv >= -1e-12 && uv <= 1.0 + 1e-12)) {
                std::ostringstream os;
                os << "u(" << v << ") = " << uv << " is outside [0,1]";
                throw ValidationError(os.str());
            }
            if (std::abs(f.inverse(uv) - v) > 1e-9 * std::max(1.0, std::abs(v)))
                throw ValidationError("utility function inverse fails to round-trip");
        }
    }

    // Acyclicity over the parent graph (utility attributes are parents of U).
    std::vector<std::vector<int>> parents_of(num_vars());
    for (const auto& c : data_.chance)
        for (const auto& p : c.parents) parents_of[var_index(c.variable)].push_back(var_index(p));
    for (const auto& d : data_.decisions)
        for (const auto& p : d.parents) parents_of[var_index(d.variable)].push_back(var_index(p));
    if (data_.utility)
        for (const auto& p : data_.utility->attributes) parents_of[utility_var_].push_back(var_index(p));

    std::vector<int> out_degree(num_vars(), 0);
    std::vector<std::vector<int>> children_of(num_vars());
    for (int v = 0; v < num_vars(); ++v)
        for (int p : parents_of[v]) children_of[p].push_back(v);

    {
        std::vector<int> in_deg(num_vars());
        for (int v = 0; v < num_vars(); ++v) in_deg[v] = static_cast<int>(parents_of[v].size());
        std::vector<int> ready;
        for (int v = 0; v < num_vars(); ++v)
            if (in_deg[v] == 0) ready.push_back(v);
        while (!ready.empty()) {
            std::sort(ready.begin(), ready.end(), std::greater<int>());
            int v = ready.back();
            ready.pop_back();
            topo_order_.push_back(v);
            for (int c : children_of[v])
                if (--in_deg[c] == 0) ready.push_back(c);
        }
        if (static_cast<int>(topo_order_.size()) != num_vars())
            throw ValidationError("parent graph contains a cycle");
    }

    if (utility_var_ >= 0 && !children_of[utility_var_].empty())
        throw ValidationError("utility node '" + data_.variables[utility_var_].id + "' must have no children");

    // Decisions must admit a total order with nested information sets:
    // each decision's parents include every earlier decision and all of its
    // observed parents (no forgetting).
    {
        std::vector<int> decisions;
        for (int v = 0; v < num_vars(); ++v)
            if (data_.variables[v].kind == VarKind::Decision) decisions.push_back(v);
        std::sort(decisions.begin(), decisions.end(), [&](int a, int b) {
            size_t na = decision_spec(a)->parents.size(), nb = decision_spec(b)->parents.size();
            return na != nb ? na < nb : a < b;
        });
        for (size_t i = 0; i + 1 < decisions.size(); ++i) {
            const auto& earlier = *decision_spec(decisions[i]);
            const auto& later = *decision_spec(decisions[i + 1]);
            std::set<VarId> later_set(later.parents.begin(), later.parents.end());
            bool ok = later_set.count(earlier.variable) > 0;
            for (const auto& p : earlier.parents) ok = ok && later_set.count(p) > 0;
            if (!ok)
                throw ValidationError("no-forgetting violated between decisions '" + earlier.variable +
                                      "' and '" + later.variable + "'");
        }
        decision_order_ = decisions;
    }

    // Meta-parameters.
    {
        std::set<std::string> ids;
        std::set<VarId> bound;
        for (const auto& m : data_.metas) {
            if (m.id.empty()) throw ValidationError("meta-parameter with empty id");
            if (!ids.insert(m.id).second) throw ValidationError("duplicate meta-parameter id '" + m.id + "'");
            int v = find_var(m.variable);
            if (v < 0) throw ValidationError("meta-parameter " + m.id + " binds unknown variable '" + m.variable + "'");
            if (data_.variables[v].kind != VarKind::Chance)
                throw ValidationError("meta-parameter " + m.id + " must bind a chance variable");
            if (!bound.insert(m.variable).second)
                throw ValidationError("two meta-parameters bind variable '" + m.variable + "'");
            if (!(m.reference >= 0.0 && m.reference <= 1.0))
                throw ValidationError("meta-parameter " + m.id + " reference outside [0,1]");
            const auto& spec = *chance_spec(v);
            if (m.c0.size() != spec.cpt.size() || m.c1.size() != spec.cpt.size())
                throw ValidationError("meta-parameter " + m.id + " coefficient tables do not match the CPT shape");
            long cols = num_outcomes(v);
            long rows = static_cast<long>(spec.cpt.size()) / cols;
            for (long r = 0; r < rows; ++r) {
                double s0 = 0.0, s1 = 0.0;
                for (long o = 0; o < cols; ++o) {
                    long i = r * cols + o;
                    s0 += m.c0[i];
                    s1 += m.c1[i];
                    for (double tau : {0.0, 1.0}) {
                        double entry = m.c0[i] + m.c1[i] * tau;
                        if (!(entry >= -1e-12 && entry <= 1.0 + 1e-12)) {
                            std::ostringstream os;
                            os << "meta-parameter " << m.id << " pushes a CPT entry of " << m.variable
                               << " to " << entry << " at tau=" << tau;
                            throw ValidationError(os.str());
                        }
                    }
                    double at_ref = m.c0[i] + m.c1[i] * m.reference;
                    if (std::abs(at_ref - spec.cpt[i]) > kRefMatchTol)
                        throw ValidationError("meta-parameter " + m.id +
                                              " does not reproduce the reference CPT at its reference value");
                }
                if (std::abs(s0 - 1.0) > kRowSumTol || std::abs(s1) > kRowSumTol)
                    throw ValidationError("meta-parameter " + m.id + " coefficient row sums must be (1, 0)");
            }
        }
    }

    // Evidence refers to chance variables only, with valid outcomes.
    for (const auto& [id, outcome] : data_.evidence.assignments) {
        int v = find_var(id);
        if (v < 0) throw ValidationError("evidence on unknown variable '" + id + "'");
        if (data_.variables[v].kind != VarKind::Chance)
            throw ValidationError("evidence on non-chance variable '" + id + "' is not allowed");
        if (outcome_index(v, outcome) < 0)
            throw ValidationError("evidence outcome '" + outcome + "' is not an outcome of '" + id + "'");
    }
}

bool is_normal_form(const InfluenceDiagram& d) {
    if (d.decision_order().size() != 1) return false;
    return d.decision_spec(d.decision_order()[0])->parents.empty();
}

InfluenceDiagram apply_meta(const InfluenceDiagram& d, const std::string& k, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw QueryError("tau outside [0,1]");
    const MetaParameter* m = d.meta(k);
    if (!m) throw QueryError("unknown meta-parameter '" + k + "'");
    DiagramData data = d.data();
    for (auto& c : data.chance) {
        if (c.variable != m->variable) continue;
        for (size_t i = 0; i < c.cpt.size(); ++i) {
            double entry = m->c0[i] + m->c1[i] * tau;
            c.cpt[i] = std::min(1.0, std::max(0.0, entry));
        }
    }
    // The moved reference keeps the meta consistent with the new tables.
    for (auto& mm : data.metas)
        if (mm.id == k) mm.reference = tau;
    return InfluenceDiagram(std::move(data));
}

Evidence augment_evidence(const InfluenceDiagram& d, const Evidence& e) {
    if (d.utility_var() < 0) throw QueryError("cannot append U=1: diagram has no utility node");
    Evidence out = e;
    const auto& uvar = d.var(d.utility_var());
    out.assignments[uvar.id] = uvar.outcomes[0];
    out.augmented = true;
    return out;
}

}  // namespace dcirc
