// Acceptance gate: one PASS/FAIL line per criterion, exit code = number of
// failures. Run with DCIRC_ROOT pointing at the repository root.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "dcirc/cli.hpp"
#include "dcirc/compile.hpp"
#include "dcirc/corpus.hpp"
#include "dcirc/diagram_io.hpp"
#include "dcirc/model.hpp"
#include "dcirc/oracle.hpp"
#include "dcirc/sensitivity.hpp"
#include "dcirc/sweep.hpp"

using namespace dcirc;

namespace {

std::string repo_root() {
    const char* r = std::getenv("DCIRC_ROOT");
    return r ? r : ".";
}

std::string diagram_path(const std::string& name) {
    return repo_root() + "/diagrams/" + name + ".json";
}

int failures = 0;

void report(int idx, const char* name, bool ok, const std::string& detail) {
    std::printf("%s  criterion %d  %-28s %s\n", ok ? "PASS" : "FAIL", idx, name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// First number following "key=" in CLI output; NaN when absent.
double num_field(const std::string& text, const std::string& key) {
    auto pos = text.find(key + "=");
    if (pos == std::string::npos) return std::nan("");
    return std::strtod(text.c_str() + pos + key.size() + 1, nullptr);
}

std::string str_field(const std::string& text, const std::string& key) {
    auto pos = text.find(key + "=");
    if (pos == std::string::npos) return {};
    pos += key.size() + 1;
    auto end = text.find_first_of(" \n", pos);
    return text.substr(pos, end == std::string::npos ? end : end - pos);
}

// lo/hi of the interval line "<meta> kind=<kind> ..." in `intervals` output.
bool find_interval(const std::string& text, const std::string& meta, const std::string& kind,
                   double& lo, double& hi) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(meta + " ", 0) == 0 && line.find("kind=" + kind) != std::string::npos) {
            lo = num_field(line, "lo");
            hi = num_field(line, "hi");
            return true;
        }
    }
    return false;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. The bundled weather example through the command-line interface.
void criterion1() {
    auto t0 = std::chrono::steady_clock::now();
    std::string w = diagram_path("weather");
    auto ev = run_cli({"evaluate", w});
    auto voi = run_cli({"voi", w, "--vars", "W"});
    auto iv = run_cli({"intervals", w});
    auto ex = run_cli({"intervals", w, "--exact"});
    double secs = seconds_since(t0);

    bool ok = ev.code == 0 && voi.code == 0 && iv.code == 0 && ex.code == 0;
    std::string why;

    double ce = num_field(ev.out, "ce");
    if (std::abs(ce - 52.5) > 0.05) { ok = false; why += " ce-off"; }

    // The reported policy must read: gather, then take the umbrella exactly
    // when the report is rainy. Decoded against the diagram's own labels.
    auto d = load_diagram_file(w);
    std::string sig = str_field(ev.out, "s_star");
    auto seg = [&](const std::string& var) -> std::string {
        std::istringstream ss(sig);
        std::string part;
        while (std::getline(ss, part, ';'))
            if (part.rfind(var + ":", 0) == 0) return part.substr(var.size() + 1);
        return {};
    };
    std::string gd = seg("G"), bd = seg("B");
    int gather = d.outcome_index(d.var_index("G"), "gather");
    int take = d.outcome_index(d.var_index("B"), "take");
    int rainy = d.outcome_index(d.var_index("R"), "rainy");
    const auto* bspec = d.decision_spec(d.var_index("B"));
    bool policy_ok = gd.size() == 1 && gd[0] - '0' == gather &&
                     bd.size() == static_cast<size_t>(d.config_count(bspec->parents));
    if (policy_ok) {
        for (long cfgi = 0; cfgi < d.config_count(bspec->parents); ++cfgi) {
            auto par = d.config_unrank(bspec->parents, cfgi);
            if (par[0] != gather) continue;  // skip-side contexts are unreachable
            bool want_take = par[1] == rainy;
            if ((bd[cfgi] - '0' == take) != want_take) policy_ok = false;
        }
    }
    if (!policy_ok) { ok = false; why += " policy-off"; }

    double v = num_field(voi.out, "voi");
    if (std::abs(v - 21.3) > 0.05) { ok = false; why += " voi-off"; }

    struct Want { const char* meta; const char* kind; double lo, hi; };
    const Want wants[] = {{"tau1", "tight", 0.44, 0.67},
                          {"tau1", "weak", 0.44, 0.89},
                          {"tau2", "tight", 0.57, 1.0},
                          {"tau2", "weak", 0.57, 1.0}};
    for (const auto& want : wants) {
        double lo = 0, hi = 0;
        if (!find_interval(iv.out, want.meta, want.kind, lo, hi) ||
            std::abs(lo - want.lo) > 0.005 || std::abs(hi - want.hi) > 0.005) {
            ok = false;
            why += std::string(" ") + want.meta + "-" + want.kind + "-off";
        }
    }
    double xlo = 0, xhi = 0;
    if (!find_interval(ex.out, "tau1", "exact", xlo, xhi) || std::abs(xlo - 0.44) > 0.005 ||
        std::abs(xhi - 0.84) > 0.005) {
        ok = false;
        why += " exact-off";
    }
    if (secs >= 1.0) { ok = false; why += " slow"; }

    report(1, "weather walkthrough", ok,
           "ce=" + fmt(ce) + " s_star=" + sig + " voi=" + fmt(v) + " exact=[" + fmt(xlo) + "," +
               fmt(xhi) + "] time=" + fmt(secs) + "s" + why);
}

// ---------------------------------------------------------------------------
// 2. Circuit answers equal brute force across the whole generated corpus.
void criterion2() {
    auto t0 = std::chrono::steady_clock::now();
    auto cfg = corpus::load_config_file(repo_root() + "/diagrams/corpus.json");
    double max_meu = 0, max_voi = 0;
    int checked = 0, policy_bad = 0, tied = 0, voi_checked = 0, deriv_checked = 0;
    bool ok = true;
    for (int i = 0; i < cfg.count; ++i) {
        auto d = corpus::generate(cfg, i);
        auto c = compile(d);
        const Evidence& e = d.evidence();
        auto r = meu_ce(d, c, e);
        auto om = oracle::oracle_meu(d, e);
        max_meu = std::max(max_meu, std::abs(r.meu - om.meu));
        if (!oracle::agree_on_active(d, r.s_star, d, om.s_star, e)) {
            // With an exact argmax tie several strategies are optimal and the
            // two sides may pick different ones; accept when the brute force
            // confirms the circuit's pick achieves the brute-force optimum.
            double through = r.ties ? oracle::oracle_eu(d, r.s_star, e).eu : -1.0;
            if (r.ties && std::abs(through - om.meu) <= 1e-12 * std::max(1.0, std::abs(om.meu)))
                ++tied;
            else
                ++policy_bad;
        }
        auto vars = corpus::voi_eligible(d);
        if (!vars.empty()) {
            std::vector<VarId> x{vars.front()};
            auto ov = oracle::oracle_voi(d, e, x);
            auto vs = voi_sweep(d, c, e, x);
            max_voi = std::max(max_voi, std::abs(vs.voi - ov.voi));
            ++voi_checked;
            if (is_normal_form(d)) {
                auto vd = voi_derivative(d, c, e, x.front());
                max_voi = std::max(max_voi, std::abs(vd.voi - ov.voi));
                ++deriv_checked;
            }
        }
        ++checked;
    }
    double secs = seconds_since(t0);
    if (max_meu > 1e-9 || max_voi > 1e-9 || policy_bad > 0 || secs >= 60.0) ok = false;
    report(2, "corpus vs brute force", ok,
           "diagrams=" + std::to_string(checked) + " max|meu|=" + fmt(max_meu) +
               " max|voi|=" + fmt(max_voi) + " (" + std::to_string(voi_checked) + " sweep, " +
               std::to_string(deriv_checked) + " derivative) policy_mismatch=" +
               std::to_string(policy_bad) + " tie_confirmed=" + std::to_string(tied) +
               " time=" + fmt(secs) + "s");
}

// ---------------------------------------------------------------------------
// 3. Every leaf partial matches a central finite difference; closed-form line
//    slopes match finite differences of brute-force expected utility.
void criterion3() {
    auto t0 = std::chrono::steady_clock::now();
    auto cfg = corpus::load_config_file(repo_root() + "/diagrams/corpus.json");
    const double h = 1e-4;
    double max_partial = 0, max_slope = 0;
    int diagrams = 0, leaves = 0, slopes = 0;
    for (int i = 0; i < 50; ++i) {
        auto d = corpus::generate(cfg, i);
        auto c = compile(d);
        auto r = meu_ce(d, c, d.evidence());
        for (int v = 0; v < static_cast<int>(c.nodes().size()); ++v) {
            const CircuitNode& n = c.node(v);
            if (n.kind != NodeKind::Indicator && n.kind != NodeKind::Parameter &&
                n.kind != NodeKind::Meta)
                continue;
            double base = r.state.value[v];
            auto probe = [&](double x) {
                Overrides o = r.state.overrides;
                o[v] = x;
                return evaluate_upward(d, c, r.state.evidence, Mode::Sum, o).root_value(c);
            };
            double fd = (probe(base + h) - probe(base - h)) / (2 * h);
            max_partial = std::max(max_partial, std::abs(fd - r.state.partial[v]));
            ++leaves;
        }
        ++diagrams;

        if (!is_normal_form(d)) continue;
        int dec = d.decision_order()[0];
        for (size_t k = 0; k < d.metas().size(); ++k) {
            auto lines = eu_lines_normal(d, c, d.evidence(), static_cast<int>(k));
            double tau0 = d.metas()[k].reference;
            Strategy ref;
            ref.policy[d.var(dec).id] = {lines.back().alternative};
            double p0 = oracle::oracle_prob(d, ref, d.evidence());
            for (const EuLine& line : lines) {
                Strategy s;
                s.policy[d.var(dec).id] = {line.alternative};
                double fd = oracle::finite_diff(
                    [&](double t) {
                        auto shifted = apply_meta(d, d.metas()[k].id, t);
                        auto eu = oracle::oracle_eu(shifted, s, d.evidence());
                        return eu.eu * eu.p_e / p0;
                    },
                    tau0, h);
                max_slope = std::max(max_slope, std::abs(line.slope - fd));
                ++slopes;
            }
        }
    }
    double secs = seconds_since(t0);
    bool ok = max_partial <= 1e-6 && max_slope <= 1e-6;
    report(3, "derivatives vs differences", ok,
           "diagrams=" + std::to_string(diagrams) + " leaves=" + std::to_string(leaves) +
               " max|partial|=" + fmt(max_partial) + " slopes=" + std::to_string(slopes) +
               " max|slope|=" + fmt(max_slope) + " time=" + fmt(secs) + "s");
}

// ---------------------------------------------------------------------------
// 4. Interval nesting and grid-probe soundness on every corpus diagram.
void criterion4() {
    auto t0 = std::chrono::steady_clock::now();
    auto cfg = corpus::load_config_file(repo_root() + "/diagrams/corpus.json");
    int diagrams = 0, metas = 0, probes = 0, nest_bad = 0, inside_bad = 0, outside_bad = 0;
    for (int i = 0; i < cfg.count; ++i) {
        auto d = corpus::generate(cfg, i);
        if (d.metas().empty()) continue;
        auto c = compile(d);
        const Evidence& e = d.evidence();
        auto r0 = meu_ce(d, c, e);
        auto ext = admissible_intervals_extensive(d, c, e);
        ++diagrams;
        for (size_t k = 0; k < d.metas().size(); ++k) {
            ++metas;
            auto bs = binary_search_interval(d, c, e, static_cast<int>(k), 1e-4);
            if (ext.tight[k].lo < bs.lo - 2e-4 || ext.tight[k].hi > bs.hi + 2e-4 ||
                bs.lo < ext.weak[k].lo - 2e-4 || bs.hi > ext.weak[k].hi + 2e-4 || bs.nonconvex)
                ++nest_bad;
            int leaf = c.meta_leaf(static_cast<int>(k));
            if (leaf == -1) continue;
            for (int g = 0; g <= 100; ++g) {
                double tau = 0.01 * g;
                bool inside_tight =
                    tau > ext.tight[k].lo + 1e-9 && tau < ext.tight[k].hi - 1e-9;
                bool outside_weak = tau < ext.weak[k].lo - 1e-9 || tau > ext.weak[k].hi + 1e-9;
                if (!inside_tight && !outside_weak) continue;
                ++probes;
                bool agree = strategy_still_optimal(d, c, e, r0, static_cast<int>(k), tau);
                if (inside_tight && !agree) ++inside_bad;
                if (outside_weak && agree) ++outside_bad;
            }
        }
    }
    double secs = seconds_since(t0);
    bool ok = nest_bad == 0 && inside_bad == 0 && outside_bad == 0;
    report(4, "interval soundness", ok,
           "diagrams=" + std::to_string(diagrams) + " metas=" + std::to_string(metas) +
               " probes=" + std::to_string(probes) + " nesting_bad=" + std::to_string(nest_bad) +
               " inside_bad=" + std::to_string(inside_bad) + " outside_bad=" +
               std::to_string(outside_bad) + " time=" + fmt(secs) + "s");
}

// ---------------------------------------------------------------------------
// 5. Closed form equals endpoint search; the two value-of-information
//    methods coincide. Single-decision corpus diagrams.
void criterion5() {
    auto t0 = std::chrono::steady_clock::now();
    auto cfg = corpus::load_config_file(repo_root() + "/diagrams/corpus.json");
    double max_end = 0, max_voi = 0;
    int diagrams = 0, intervals = 0, vois = 0;
    for (int i = 0; i < cfg.count; ++i) {
        auto d = corpus::generate(cfg, i);
        if (!is_normal_form(d)) continue;
        auto c = compile(d);
        const Evidence& e = d.evidence();
        ++diagrams;
        for (size_t k = 0; k < d.metas().size(); ++k) {
            auto closed = admissible_interval_normal(eu_lines_normal(d, c, e, static_cast<int>(k)));
            auto bs = binary_search_interval(d, c, e, static_cast<int>(k), 1e-5);
            max_end = std::max({max_end, std::abs(closed.lo - bs.lo), std::abs(closed.hi - bs.hi)});
            ++intervals;
        }
        for (const VarId& x : corpus::voi_eligible(d)) {
            auto vs = voi_sweep(d, c, e, {x});
            auto vd = voi_derivative(d, c, e, x);
            max_voi = std::max(max_voi, std::abs(vs.voi - vd.voi));
            ++vois;
        }
    }
    double secs = seconds_since(t0);
    bool ok = max_end <= 1e-4 && max_voi <= 1e-9;
    report(5, "single-decision consistency", ok,
           "diagrams=" + std::to_string(diagrams) + " intervals=" + std::to_string(intervals) +
               " max|endpoint|=" + fmt(max_end) + " voi_pairs=" + std::to_string(vois) +
               " max|voi|=" + fmt(max_voi) + " time=" + fmt(secs) + "s");
}

// ---------------------------------------------------------------------------
// 6. Per-alternative expected utility is affine in each meta-parameter:
//    five-point collinearity against brute force, restricted to diagrams
//    whose evidence probability does not move with the parameter.
void criterion6() {
    auto t0 = std::chrono::steady_clock::now();
    auto cfg = corpus::load_config_file(repo_root() + "/diagrams/corpus.json");
    double max_dev = 0;
    int diagrams = 0, lines_checked = 0;
    for (int i = 0; i < cfg.count; ++i) {
        auto d = corpus::generate(cfg, i);
        if (!is_normal_form(d)) continue;
        auto c = compile(d);
        const Evidence& e = d.evidence();
        int dec = d.decision_order()[0];
        bool counted = false;
        for (size_t k = 0; k < d.metas().size(); ++k) {
            auto lines = eu_lines_normal(d, c, e, static_cast<int>(k));
            bool pure = std::all_of(lines.begin(), lines.end(), [](const EuLine& l) {
                return l.semantics == LineSemantics::ExpectedUtility;
            });
            if (!pure) continue;  // evidence probability depends on tau here
            if (!counted) { ++diagrams; counted = true; }
            for (double tau : {0.0, 0.25, 0.5, 0.75, 1.0}) {
                auto shifted = apply_meta(d, d.metas()[k].id, tau);
                for (const EuLine& line : lines) {
                    Strategy s;
                    s.policy[d.var(dec).id] = {line.alternative};
                    double want = oracle::oracle_eu(shifted, s, e).eu;
                    double dev = std::abs(line.at(tau) - want) / std::max(1.0, std::abs(want));
                    max_dev = std::max(max_dev, dev);
                }
            }
            lines_checked += static_cast<int>(lines.size());
        }
    }
    double secs = seconds_since(t0);
    bool ok = max_dev <= 1e-9 && lines_checked > 0;
    report(6, "five-point collinearity", ok,
           "diagrams=" + std::to_string(diagrams) + " lines=" + std::to_string(lines_checked) +
               " max_dev=" + fmt(max_dev) + " time=" + fmt(secs) + "s");
}

// ---------------------------------------------------------------------------
// 7. Weather tau1 certain-equivalent plot: continuous, coincides with the
//    frozen-strategy curve exactly on the admissible interval, dominates it
//    outside.
void criterion7() {
    auto t0 = std::chrono::steady_clock::now();
    auto d = load_diagram_file(diagram_path("weather"));
    auto c = compile(d);
    Evidence none;
    auto series = one_way_plot(d, c, none, 0, 0.01);
    auto bs = binary_search_interval(d, c, none, 0, 1e-4);
    bool ok = series.samples.size() == 101;
    std::string why;
    double max_step = 0;
    int kinks = 0, coincide = 0, strict = 0, dominated = 0;
    for (size_t s = 0; s < series.samples.size(); ++s) {
        const PlotSample& p = series.samples[s];
        if (!p.valid) { ok = false; why += " invalid-sample"; break; }
        if (s > 0)
            max_step = std::max(max_step,
                                std::abs(p.ce_problem - series.samples[s - 1].ce_problem));
        if (s > 0 && s + 1 < series.samples.size()) {
            double d2 = series.samples[s + 1].ce_problem - 2 * p.ce_problem +
                        series.samples[s - 1].ce_problem;
            if (std::abs(d2) > 0.3) ++kinks;  // slope break, not mere curvature
        }
        if (p.ce_problem < p.ce_strategy - 1e-9) ++dominated;
        if (p.tau > bs.lo + 0.005 && p.tau < bs.hi - 0.005) {
            if (std::abs(p.ce_problem - p.ce_strategy) <= 1e-9) ++coincide;
        }
        if ((p.tau < bs.lo - 0.02 || p.tau > bs.hi + 0.02) && p.ce_problem > p.ce_strategy + 1e-6)
            ++strict;
    }
    if (max_step > 5.0) { ok = false; why += " jump"; }
    if (kinks > 3) { ok = false; why += " rough"; }
    if (dominated > 0) { ok = false; why += " strategy-above-problem"; }
    if (coincide < 35) { ok = false; why += " coincide-short"; }
    if (strict < 40) { ok = false; why += " dominance-short"; }
    double secs = seconds_since(t0);
    report(7, "weather plot shape", ok,
           "samples=" + std::to_string(series.samples.size()) + " max_step=" + fmt(max_step) +
               " kinks=" + std::to_string(kinks) + " coincide=" + std::to_string(coincide) +
               " strict_dominance=" + std::to_string(strict) + " interval=[" + fmt(bs.lo) + "," +
               fmt(bs.hi) + "] time=" + fmt(secs) + "s" + why);
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    std::printf("%s: %d of 7 criteria failed\n", failures == 0 ? "OK" : "FAILURES", failures);
    return failures == 0 ? 0 : 1;
}
