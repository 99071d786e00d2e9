#include "dcirc/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dcirc/compile.hpp"
#include "dcirc/format.hpp"

namespace dcirc {

namespace {

constexpr double kActiveTol = 1e-12;
constexpr double kCoincideTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct LocalLine {
    int alt = -1;
    double anchor = 0.0;
    double slope = 0.0;
};

// Largest offsets around the reference point over which the starred line
// stays maximal: competitors with steeper slope bound the move up, shallower
// ones the move down. Parallel lines never constrain; coinciding anchors
// raise the tie diagnostic. Lines whose anchor and slope both agree to
// rounding scale count as coincident outright: dividing two such noise
// differences would place their "crossing" at an arbitrary point.
void theorem2_deltas(const std::vector<LocalLine>& lines, size_t star, double& dplus,
                     double& dminus, bool& tie) {
    dplus = kInf;
    dminus = -kInf;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (i == star) continue;
        double da = lines[i].anchor - lines[star].anchor;
        double ds = lines[i].slope - lines[star].slope;
        double ascale = std::max({1.0, std::abs(lines[i].anchor), std::abs(lines[star].anchor)});
        double sscale = std::max({1.0, std::abs(lines[i].slope), std::abs(lines[star].slope)});
        if (std::abs(da) <= kCoincideTol * ascale && std::abs(ds) <= kCoincideTol * sscale) {
            tie = true;
            continue;
        }
        if (da == 0.0) tie = true;
        if (std::abs(ds) <= kCoincideTol * sscale) continue;
        double offset = (lines[star].anchor - lines[i].anchor) / ds;
        if (ds > 0.0)
            dplus = std::min(dplus, offset);
        else
            dminus = std::max(dminus, offset);
    }
    dplus = std::max(dplus, 0.0);
    dminus = std::min(dminus, 0.0);
}

AdmissibleInterval interval_from_lines(const std::vector<LocalLine>& lines, size_t star, int k,
                                       double tau0, IntervalKind kind) {
    AdmissibleInterval out;
    out.meta = k;
    out.kind = kind;
    bool tie = false;
    theorem2_deltas(lines, star, out.delta_plus, out.delta_minus, tie);
    out.tie = tie;
    out.lo = std::max(0.0, tau0 + out.delta_minus);
    out.hi = std::min(1.0, tau0 + out.delta_plus);
    return out;
}

void check_meta_index(const InfluenceDiagram& d, int k) {
    if (k < 0 || k >= static_cast<int>(d.metas().size()))
        throw QueryError("unknown meta-parameter index");
}

bool has_decision_ancestor(const InfluenceDiagram& d, int target) {
    std::vector<char> taint(d.num_vars(), 0);
    for (int v : d.topo_order()) {
        if (d.var(v).kind == VarKind::Decision) {
            taint[v] = 1;
            continue;
        }
        const std::vector<VarId>* parents = nullptr;
        if (const ChanceSpec* cs = d.chance_spec(v)) parents = &cs->parents;
        if (d.var(v).kind == VarKind::Utility) parents = &d.utility().attributes;
        if (!parents) continue;
        for (const VarId& p : *parents) taint[v] = taint[v] || taint[d.var_index(p)];
    }
    return taint[target];
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

// Per-alternative value lines of one max node: the value its branch takes
// when that alternative is switched on, everything else staying gated to the
// reference optimum, as an affine function of each meta-parameter.
struct NodeLines {
    std::vector<LocalLine> lines;                 // anchors; slope field unused here
    std::vector<std::vector<double>> slope_by_k;  // [listed alternative][meta]
    size_t star = 0;                              // position of the gated choice
};

NodeLines node_value_lines(const InfluenceDiagram& d, const DecisionCircuit& c,
                           const MeuCeResult& ref, int v) {
    const CircuitNode& node = c.node(v);
    int dec = node.var;
    long cfg = node.config;
    int chosen = ref.s_star.policy.at(d.var(dec).id)[cfg];
    int num_metas = static_cast<int>(d.metas().size());

    NodeLines out;
    for (size_t pos = 0; pos < node.children.size(); ++pos) {
        if (!node.avail[pos]) continue;
        int alt = node.alts[pos];
        int child = node.children[pos];
        Overrides o = ref.state.overrides;
        if (int theta = c.parameter(dec, alt, cfg); theta != -1) o[theta] = 1.0;
        SweepState st = evaluate_upward(d, c, ref.state.evidence, Mode::Sum, o);
        LocalLine line;
        line.alt = alt;
        line.anchor = st.value[child];
        out.lines.push_back(line);

        differentiate_downward(c, st, child);
        std::vector<double> slopes(num_metas, 0.0);
        for (int k = 0; k < num_metas; ++k)
            if (int leaf = c.meta_leaf(k); leaf != -1) slopes[k] = st.partial[leaf];
        out.slope_by_k.push_back(std::move(slopes));
        if (alt == chosen) out.star = out.lines.size() - 1;
    }
    return out;
}

}  // namespace

bool same_optimum(const InfluenceDiagram& d, const DecisionCircuit& c, const MeuCeResult& a,
                  const MeuCeResult& b) {
    for (const auto& [dec, nodes] : c.max_table()) {
        const auto& pa = a.s_star.policy.at(d.var(dec).id);
        const auto& pb = b.s_star.policy.at(d.var(dec).id);
        for (size_t cfg = 0; cfg < nodes.size(); ++cfg) {
            int v = nodes[cfg];
            if (!max_node_active(d, c, a.state, v) || !max_node_active(d, c, b.state, v)) continue;
            if (pa[cfg] == pb[cfg]) continue;
            if (a.margin[v] <= kCoincideTol || b.margin[v] <= kCoincideTol) continue;
            return false;
        }
    }
    return true;
}

std::vector<EuLine> eu_lines_normal(const InfluenceDiagram& d, const DecisionCircuit& c,
                                    const Evidence& e, int k) {
    if (!is_normal_form(d))
        throw QueryError("expected-utility lines require a normal-form diagram");
    check_meta_index(d, k);

    MeuCeResult r = meu_ce(d, c, e);
    Evidence eprime = augment_evidence(d, e);
    SweepState ungated = evaluate_upward(d, c, eprime, Mode::Sum);
    differentiate_downward(c, ungated);

    int dec = d.decision_order()[0];
    int leaf = c.meta_leaf(k);
    double tau0 = d.metas()[k].reference;

    SweepState den = strategy_gradient(d, c, e, r.s_star);
    double p0 = den.root_value(c);
    double dp = leaf == -1 ? 0.0 : den.partial[leaf];
    LineSemantics sem =
        std::abs(dp) <= kActiveTol ? LineSemantics::ExpectedUtility : LineSemantics::Numerator;

    std::vector<EuLine> lines;
    for (int a = 0; a < d.num_outcomes(dec); ++a) {
        int theta = c.parameter(dec, a, 0);
        if (theta == -1) continue;  // withdrawn alternative
        Strategy s;
        s.policy[d.var(dec).id] = {a};
        SweepState grad = strategy_gradient(d, c, eprime, s);
        EuLine line;
        line.alternative = a;
        line.meta = k;
        line.tau0 = tau0;
        line.anchor = ungated.partial[theta] / p0;
        line.slope = (leaf == -1 ? 0.0 : grad.partial[leaf]) / p0;
        line.semantics = sem;
        lines.push_back(line);
    }
    return lines;
}

AdmissibleInterval admissible_interval_normal(const std::vector<EuLine>& lines) {
    if (lines.empty()) throw QueryError("admissible interval needs at least one line");
    std::vector<LocalLine> local;
    size_t star = 0;
    for (const EuLine& l : lines) {
        local.push_back({l.alternative, l.anchor, l.slope});
        if (l.anchor > local[star].anchor) star = local.size() - 1;
    }
    return interval_from_lines(local, star, lines.front().meta, lines.front().tau0,
                               IntervalKind::Exact);
}

std::string strategy_signature(const Strategy& s) {
    std::string out;
    for (const auto& [id, choices] : s.policy) {
        if (!out.empty()) out += ';';
        out += id + ":";
        for (int choice : choices) out += std::to_string(choice);
    }
    return out;
}

PlotSeries one_way_plot(const InfluenceDiagram& d, const DecisionCircuit& c, const Evidence& e,
                        int k, double eps, const Strategy* ref) {
    if (!(eps > 0.0 && eps <= 0.5)) throw QueryError("plot resolution out of range (0, 0.5]");
    check_meta_index(d, k);

    MeuCeResult r0 = meu_ce(d, c, e);
    Strategy ref_strategy = ref ? *ref : r0.s_star;
    Overrides ref_gate = fix_strategy(d, c, ref_strategy);
    Evidence eprime = augment_evidence(d, e);
    int leaf = c.meta_leaf(k);
    const UtilityFunction& u = d.utility().utility;

    PlotSeries series;
    series.meta = k;
    series.epsilon = eps;
    long n = static_cast<long>(std::ceil(1.0 / eps - 1e-9));
    std::vector<double> taus;
    for (long i = 0; i < n; ++i) taus.push_back(static_cast<double>(i) * eps);
    taus.push_back(1.0);

    if (is_normal_form(d)) {
        // Both curves are ratios of affine functions: evaluate the lines.
        std::vector<EuLine> lines = eu_lines_normal(d, c, e, k);
        SweepState den = strategy_gradient(d, c, e, r0.s_star);
        double p0 = den.root_value(c);
        double dp = leaf == -1 ? 0.0 : den.partial[leaf];
        int dec = d.decision_order()[0];
        int ref_alt = ref_strategy.policy.at(d.var(dec).id)[0];

        for (double tau : taus) {
            PlotSample sample;
            sample.tau = tau;
            double p = p0 + (tau - lines.front().tau0) * dp;
            if (p <= 1e-300) {
                sample.valid = false;
                sample.ce_problem = sample.ce_strategy = std::nan("");
                series.samples.push_back(sample);
                continue;
            }
            size_t best = 0;
            double best_val = -kInf;
            double ref_val = 0.0;
            for (size_t i = 0; i < lines.size(); ++i) {
                double val = lines[i].at(tau);
                if (val > best_val) {
                    best_val = val;
                    best = i;
                }
                if (lines[i].alternative == ref_alt) ref_val = val;
            }
            sample.ce_problem = u.inverse(clamp01(best_val * p0 / p));
            sample.ce_strategy = u.inverse(clamp01(ref_val * p0 / p));
            Strategy opt;
            opt.policy[d.var(dec).id] = {lines[best].alternative};
            sample.opt = strategy_signature(opt);
            series.samples.push_back(sample);
        }
        return series;
    }

    for (double tau : taus) {
        PlotSample sample;
        sample.tau = tau;
        Overrides probe;
        if (leaf != -1) probe[leaf] = tau;
        try {
            MeuCeResult rt = meu_ce(d, c, e, probe);
            sample.ce_problem = rt.ce;
            sample.opt = strategy_signature(rt.s_star);
        } catch (const QueryError&) {
            sample.valid = false;
            sample.ce_problem = std::nan("");
        }
        Overrides gated = ref_gate;
        if (leaf != -1) gated[leaf] = tau;
        double pe = evaluate_upward(d, c, e, Mode::Sum, gated).root_value(c);
        if (pe <= 1e-300) {
            sample.valid = false;
            sample.ce_strategy = std::nan("");
        } else {
            double num = evaluate_upward(d, c, eprime, Mode::Sum, gated).root_value(c);
            sample.ce_strategy = u.inverse(clamp01(num / pe));
        }
        series.samples.push_back(sample);
    }
    return series;
}

std::string plot_csv(const PlotSeries& series) {
    std::string out = "tau,ce_problem,ce_strategy,opt_strategy\n";
    for (const PlotSample& s : series.samples) {
        out += fmt_shortest(s.tau);
        out += ',';
        out += fmt_shortest(s.ce_problem);
        out += ',';
        out += fmt_shortest(s.ce_strategy);
        out += ',';
        out += s.opt;
        out += '\n';
    }
    return out;
}

MaxNodeClasses classify_max_nodes(const InfluenceDiagram& d, const DecisionCircuit& c,
                                  const SweepState& state) {
    if (!state.has_partials)
        throw QueryError("max-node classification requires a differentiated state");
    MaxNodeClasses out;
    for (const auto& [dec, nodes] : c.max_table())
        for (int v : nodes)
            (max_node_active(d, c, state, v) ? out.active : out.inactive).push_back(v);
    std::sort(out.active.begin(), out.active.end());
    std::sort(out.inactive.begin(), out.inactive.end());
    return out;
}

ExtensiveIntervals admissible_intervals_extensive(const InfluenceDiagram& d,
                                                  const DecisionCircuit& c, const Evidence& e) {
    MeuCeResult r = meu_ce(d, c, e);
    MaxNodeClasses classes = classify_max_nodes(d, c, r.state);
    int num_metas = static_cast<int>(d.metas().size());

    ExtensiveIntervals out;
    out.all_active = classes.inactive.empty();
    auto fresh = [&](IntervalKind kind) {
        std::vector<AdmissibleInterval> v(num_metas);
        for (int k = 0; k < num_metas; ++k) {
            v[k].meta = k;
            v[k].kind = kind;
            v[k].delta_plus = kInf;
            v[k].delta_minus = -kInf;
        }
        return v;
    };
    out.tight = fresh(IntervalKind::Tight);
    out.weak = fresh(IntervalKind::Weak);

    auto intersect = [](AdmissibleInterval& acc, const AdmissibleInterval& piece) {
        acc.lo = std::max(acc.lo, piece.lo);
        acc.hi = std::min(acc.hi, piece.hi);
        acc.delta_plus = std::min(acc.delta_plus, piece.delta_plus);
        acc.delta_minus = std::max(acc.delta_minus, piece.delta_minus);
        acc.tie = acc.tie || piece.tie;
    };

    // Ties at unreachable contexts are vacuous: the lines there still cut the
    // interval, but equal anchors among them say nothing about s* itself.
    auto process = [&](const std::vector<int>& nodes, std::vector<AdmissibleInterval>& target,
                       bool keep_tie) {
        for (int v : nodes) {
            NodeLines nl = node_value_lines(d, c, r, v);
            for (int k = 0; k < num_metas; ++k) {
                std::vector<LocalLine> lines = nl.lines;
                for (size_t i = 0; i < lines.size(); ++i) lines[i].slope = nl.slope_by_k[i][k];
                AdmissibleInterval piece = interval_from_lines(lines, nl.star, k,
                                                               d.metas()[k].reference,
                                                               target[k].kind);
                if (!keep_tie) piece.tie = false;
                intersect(target[k], piece);
            }
        }
    };
    process(classes.active, out.weak, true);
    process(classes.inactive, out.tight, false);
    for (int k = 0; k < num_metas; ++k) intersect(out.tight[k], out.weak[k]);

    if (out.all_active)
        for (int k = 0; k < num_metas; ++k)
            out.tight[k].kind = out.weak[k].kind = IntervalKind::Exact;
    return out;
}

NeighbourValues neighbouring_strategy_values(const InfluenceDiagram& d, const DecisionCircuit& c,
                                             const Evidence& e, int node) {
    const CircuitNode& n = c.node(node);
    if (n.kind != NodeKind::Max) throw QueryError("neighbouring strategies need a max node");
    MeuCeResult r = meu_ce(d, c, e);
    Evidence eprime = augment_evidence(d, e);
    int num_metas = static_cast<int>(d.metas().size());

    NeighbourValues out;
    out.node = node;
    for (size_t pos = 0; pos < n.children.size(); ++pos) {
        if (!n.avail[pos]) continue;
        Strategy s = r.s_star;
        s.policy.at(d.var(n.var).id)[n.config] = n.alts[pos];
        SweepState st = strategy_gradient(d, c, eprime, s);
        out.alternatives.push_back(n.alts[pos]);
        out.value.push_back(st.root_value(c));
        std::vector<double> slopes(num_metas, 0.0);
        for (int k = 0; k < num_metas; ++k)
            if (int leaf = c.meta_leaf(k); leaf != -1) slopes[k] = st.partial[leaf];
        out.slope.push_back(std::move(slopes));
    }
    return out;
}

bool strategy_still_optimal(const InfluenceDiagram& d, const DecisionCircuit& c, const Evidence& e,
                            const MeuCeResult& ref, int k, double tau) {
    check_meta_index(d, k);
    int leaf = c.meta_leaf(k);
    Overrides probe;
    if (leaf != -1) probe[leaf] = tau;
    try {
        MeuCeResult rt = meu_ce(d, c, e, probe);
        Overrides gates = probe;
        for (const auto& [gate, v] : fix_strategy(d, c, ref.s_star)) gates[gate] = v;
        double own = evaluate_upward(d, c, rt.state.evidence, Mode::Sum, gates).root_value(c);
        return own >= rt.g_root - kActiveTol * std::max(1.0, std::abs(rt.g_root));
    } catch (const QueryError&) {
        return false;  // evidence impossible here: no strategy is optimal
    }
}

AdmissibleInterval binary_search_interval(const InfluenceDiagram& d, const DecisionCircuit& c,
                                          const Evidence& e, int k, double eps) {
    if (!(eps > 0.0 && eps <= 0.1))
        throw QueryError("binary-search tolerance out of range (0, 0.1]");
    check_meta_index(d, k);

    MeuCeResult r0 = meu_ce(d, c, e);
    double tau0 = d.metas()[k].reference;
    int leaf = c.meta_leaf(k);

    AdmissibleInterval out;
    out.meta = k;
    out.kind = IntervalKind::Exact;
    if (leaf == -1) {  // the parameter never reaches the circuit
        out.delta_plus = kInf;
        out.delta_minus = -kInf;
        return out;
    }

    auto agrees = [&](double tau) { return strategy_still_optimal(d, c, e, r0, k, tau); };

    auto endpoint = [&](double toward) {
        if (agrees(toward)) return toward;
        double good = tau0, bad = toward;
        while (std::abs(bad - good) > eps) {
            double mid = 0.5 * (good + bad);
            (agrees(mid) ? good : bad) = mid;
        }
        return good;
    };
    out.hi = endpoint(1.0);
    out.lo = endpoint(0.0);
    out.delta_plus = out.hi - tau0;
    out.delta_minus = out.lo - tau0;

    // The admissible set is only argued convex in special cases; verify the
    // bracket on a coarse grid and report holes instead of assuming.
    for (long i = 0; i <= 100; ++i) {
        double tau = 0.01 * static_cast<double>(i);
        if (tau <= out.lo + 1e-12 || tau >= out.hi - 1e-12) continue;
        if (!agrees(tau)) {
            out.nonconvex = true;
            break;
        }
    }
    return out;
}

VoiAnswer voi_derivative(const InfluenceDiagram& d, const DecisionCircuit& c, const Evidence& e,
                         const VarId& x) {
    if (!is_normal_form(d)) throw QueryError("derivative VOI requires a normal-form diagram");
    int xi = d.var_index(x);
    if (d.var(xi).kind != VarKind::Chance)
        throw QueryError("voi target '" + x + "' is not a chance variable");
    if (has_decision_ancestor(d, xi))
        throw QueryError("voi target '" + x + "' is affected by a decision");

    MeuCeResult r = meu_ce(d, c, e);
    VoiAnswer out;
    out.vars = {x};
    if (e.assignments.count(x)) {
        out.meu_pi = r.meu;
        out.voi = 0.0;
        out.note = "variable already observed; information is worthless";
        return out;
    }

    Evidence eprime = augment_evidence(d, e);
    int dec = d.decision_order()[0];
    std::vector<SweepState> grads;
    for (int a = 0; a < d.num_outcomes(dec); ++a) {
        if (c.parameter(dec, a, 0) == -1) continue;
        Strategy s;
        s.policy[d.var(dec).id] = {a};
        grads.push_back(strategy_gradient(d, c, eprime, s));
    }

    double sum = 0.0;
    for (int o = 0; o < d.num_outcomes(xi); ++o) {
        int lam = c.indicator(xi, o);
        double best = -kInf;
        for (const SweepState& g : grads) best = std::max(best, g.partial[lam]);
        sum += best;
    }
    out.meu_pi = clamp01(sum / r.p_e);
    out.voi = d.utility().utility.inverse(out.meu_pi) - r.ce;
    return out;
}

VoiAnswer voi_sweep(const InfluenceDiagram& d, const DecisionCircuit& c, const Evidence& e,
                    const std::vector<VarId>& vars, long cap, Exec exec) {
    std::vector<int> idx;
    for (const VarId& x : vars) {
        int xi = d.var_index(x);
        if (d.var(xi).kind != VarKind::Chance)
            throw QueryError("voi target '" + x + "' is not a chance variable");
        if (e.assignments.count(x)) throw QueryError("voi target '" + x + "' is observed");
        if (has_decision_ancestor(d, xi))
            throw QueryError("voi target '" + x + "' is affected by a decision");
        if (std::find(idx.begin(), idx.end(), xi) != idx.end())
            throw QueryError("duplicate voi target '" + x + "'");
        idx.push_back(xi);
    }

    MeuCeResult r = meu_ce(d, c, e);
    VoiAnswer out;
    out.vars = vars;
    if (idx.empty()) {
        out.meu_pi = r.meu;
        out.voi = 0.0;
        return out;
    }

    long count = 1;
    for (int xi : idx) {
        count *= d.num_outcomes(xi);
        if (count > cap) throw QueryError("voi instantiation count exceeds the cap");
    }

    std::vector<double> slot(count);
    parallel_for(exec, count, [&](long inst) {
        Evidence ex = e;
        long rest = inst;
        for (size_t i = idx.size(); i-- > 0;) {
            int xi = idx[i];
            int o = static_cast<int>(rest % d.num_outcomes(xi));
            rest /= d.num_outcomes(xi);
            ex.assignments[d.var(xi).id] = d.var(xi).outcomes[o];
        }
        Evidence ep = augment_evidence(d, ex);
        slot[inst] = evaluate_upward(d, c, ep, Mode::Maximize).root_value(c);
    });
    double sum = 0.0;
    for (double v : slot) sum += v;

    out.meu_pi = clamp01(sum / r.p_e);
    out.voi = d.utility().utility.inverse(out.meu_pi) - r.ce;
    return out;
}

double ce_slope(double eu_slope, double ce, const UtilityFunction& u) {
    double uprime = u.slope_at(ce);
    if (!(uprime > 1e-300))
        throw QueryError("utility derivative underflows at the certain equivalent");
    return eu_slope / uprime;
}

}  // namespace dcirc
