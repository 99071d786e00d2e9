#include "dcirc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dcirc/compile.hpp"
#include "dcirc/diagram_io.hpp"
#include "dcirc/format.hpp"
#include "dcirc/oracle.hpp"
#include "dcirc/sensitivity.hpp"
#include "dcirc/sweep.hpp"

namespace dcirc {

namespace {

struct RunConfig {
    std::string path;
    std::vector<std::string> evidence;  // VAR=outcome pairs
    std::string emit_graph;
    std::string meta;
    std::string strategy = "optimal";
    double resolution = 0.01;
    double tolerance = 1e-4;
    long cap = 4096;
    bool exact = false;
    std::string vars;
    bool oracle = false;
    std::string format = "text";
    std::string output;
};

bool csv_mode(const RunConfig& cfg) { return cfg.format == "csv"; }

Evidence merged_evidence(const InfluenceDiagram& d, const std::vector<std::string>& pairs) {
    Evidence e = d.evidence();
    for (const std::string& p : pairs) {
        auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == p.size())
            throw QueryError("evidence must look like VAR=outcome, got '" + p + "'");
        e.assignments[p.substr(0, eq)] = p.substr(eq + 1);
    }
    return e;
}

int resolve_meta(const InfluenceDiagram& d, const std::string& sel) {
    for (size_t i = 0; i < d.metas().size(); ++i)
        if (d.metas()[i].id == sel) return static_cast<int>(i);
    size_t pos = 0;
    try {
        int k = std::stoi(sel, &pos);
        if (pos == sel.size() && k >= 0 && k < static_cast<int>(d.metas().size())) return k;
    } catch (const std::exception&) {
    }
    throw QueryError("unknown meta-parameter '" + sel + "'");
}

std::vector<VarId> split_vars(const std::string& s) {
    std::vector<VarId> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string check_line(bool agree, double delta) {
    return std::string("oracle_agree=") + (agree ? "true" : "false") + " delta=" + fmt_sig9(delta) +
           "\n";
}

void do_validate(const InfluenceDiagram& d, const RunConfig& cfg, std::string& out) {
    const DiagramData& data = d.data();
    std::string variables = std::to_string(data.variables.size());
    std::string chance = std::to_string(data.chance.size());
    std::string decisions = std::to_string(data.decisions.size());
    std::string metas = std::to_string(data.metas.size());
    std::string evidence = std::to_string(data.evidence.assignments.size());
    if (csv_mode(cfg)) {
        out += "valid,variables,chance,decisions,metas,evidence\n";
        out += "true," + variables + "," + chance + "," + decisions + "," + metas + "," +
               evidence + "\n";
    } else {
        out += "valid=true variables=" + variables + " chance=" + chance +
               " decisions=" + decisions + " metas=" + metas + " evidence=" + evidence + "\n";
    }
}

void do_compile(const InfluenceDiagram& d, const RunConfig& cfg, std::string& out) {
    DecisionCircuit c = compile(d);
    CircuitStats st = circuit_stats(c);
    std::vector<std::string> names;
    for (int v : c.order()) names.push_back(d.var(v).id);
    std::string order = join(names, ',');
    if (!cfg.emit_graph.empty()) {
        std::ofstream f(cfg.emit_graph);
        if (!f) throw QueryError("cannot write graph file '" + cfg.emit_graph + "'");
        f << to_dot(d, c);
    }
    if (csv_mode(cfg)) {
        out += "nodes,edges,max_nodes,depth,order\n";
        out += std::to_string(st.nodes) + "," + std::to_string(st.edges) + "," +
               std::to_string(st.max_nodes) + "," + std::to_string(st.depth) + ",\"" + order +
               "\"\n";
    } else {
        out += "nodes=" + std::to_string(st.nodes) + " edges=" + std::to_string(st.edges) +
               " max_nodes=" + std::to_string(st.max_nodes) + " depth=" + std::to_string(st.depth) +
               " order=" + order + "\n";
    }
}

void do_evaluate(const InfluenceDiagram& d, const RunConfig& cfg, std::string& out) {
    DecisionCircuit c = compile(d);
    Evidence e = merged_evidence(d, cfg.evidence);
    MeuCeResult r = meu_ce(d, c, e);
    std::string sig = strategy_signature(r.s_star);
    if (csv_mode(cfg)) {
        out += "meu,ce,p_e,s_star\n";
        out += fmt_shortest(r.meu) + "," + fmt_shortest(r.ce) + "," + fmt_shortest(r.p_e) + "," +
               sig + "\n";
    } else {
        out += "meu=" + fmt_sig9(r.meu) + " ce=" + fmt_dollars(r.ce) + " p_e=" + fmt_sig9(r.p_e) +
               " s_star=" + sig;
        if (r.ties) out += " ties=true";
        out += "\n";
    }
    if (cfg.oracle) {
        oracle::MeuResult o = oracle::oracle_meu(d, e);
        double delta = std::abs(r.meu - o.meu);
        bool agree = delta <= 1e-9 && oracle::agree_on_active(d, r.s_star, d, o.s_star, e) &&
                     std::abs(r.ce - o.ce) <= 1e-6 * std::max(1.0, std::abs(o.ce));
        out += check_line(agree, delta);
    }
}

void do_plot(const InfluenceDiagram& d, const RunConfig& cfg, std::string& out) {
    DecisionCircuit c = compile(d);
    int k = resolve_meta(d, cfg.meta);
    Strategy from_file;
    const Strategy* ref = nullptr;
    if (cfg.strategy != "optimal") {
        from_file = load_strategy_file(d, cfg.strategy);
        ref = &from_file;
    }
    PlotSeries series = one_way_plot(d, c, d.evidence(), k, cfg.resolution, ref);
    out += plot_csv(series);
    if (cfg.oracle) {
        double delta = 0.0, scale = 1.0;
        for (const PlotSample& s : series.samples) {
            if (!s.valid) continue;
            InfluenceDiagram shifted = apply_meta(d, d.metas()[k].id, s.tau);
            oracle::MeuResult o = oracle::oracle_meu(shifted, d.evidence());
            delta = std::max(delta, std::abs(s.ce_problem - o.ce));
            scale = std::max(scale, std::abs(o.ce));
        }
        out += check_line(delta <= 1e-6 * scale, delta);
    }
}

std::string interval_text(const std::string& id, const char* kind, const AdmissibleInterval& iv) {
    std::string line = id + " kind=" + kind + " lo=" + fmt_sig9(iv.lo) + " hi=" + fmt_sig9(iv.hi);
    if (iv.tie) line += " tie=true";
    if (iv.nonconvex) line += " nonconvex=true";
    return line + "\n";
}

std::string interval_csv(const std::string& id, const char* kind, const AdmissibleInterval& iv) {
    std::string note = iv.tie ? "tie" : (iv.nonconvex ? "nonconvex" : "");
    return id + "," + kind + "," + fmt_shortest(iv.lo) + "," + fmt_shortest(iv.hi) + "," + note +
           "\n";
}

void do_intervals(const InfluenceDiagram& d, const RunConfig& cfg, std::string& out,
                  std::string& err) {
    DecisionCircuit c = compile(d);
    const Evidence& e = d.evidence();
    if (d.metas().empty()) {
        err += "no meta-parameters declared; nothing to report\n";
        return;
    }
    if (csv_mode(cfg)) out += "meta,kind,lo,hi,note\n";
    bool normal = is_normal_form(d);
    ExtensiveIntervals ext;
    if (!normal) ext = admissible_intervals_extensive(d, c, e);
    for (size_t k = 0; k < d.metas().size(); ++k) {
        const std::string& id = d.metas()[k].id;
        if (normal) {
            AdmissibleInterval iv =
                admissible_interval_normal(eu_lines_normal(d, c, e, static_cast<int>(k)));
            if (csv_mode(cfg)) {
                out += interval_csv(id, "exact", iv);
            } else {
                std::string line = id + " kind=exact lo=" + fmt_sig9(iv.lo) +
                                   " hi=" + fmt_sig9(iv.hi) +
                                   " delta_plus=" + fmt_sig9(iv.delta_plus) +
                                   " delta_minus=" + fmt_sig9(iv.delta_minus);
                if (iv.tie) line += " tie=true";
                out += line + "\n";
            }
            continue;
        }
        if (ext.all_active) {
            out += csv_mode(cfg) ? interval_csv(id, "exact", ext.tight[k])
                                 : interval_text(id, "exact", ext.tight[k]);
        } else {
            out += csv_mode(cfg) ? interval_csv(id, "tight", ext.tight[k])
                                 : interval_text(id, "tight", ext.tight[k]);
            out += csv_mode(cfg) ? interval_csv(id, "weak", ext.weak[k])
                                 : interval_text(id, "weak", ext.weak[k]);
        }
        if (cfg.exact) {
            AdmissibleInterval bs =
                binary_search_interval(d, c, e, static_cast<int>(k), cfg.tolerance);
            out += csv_mode(cfg) ? interval_csv(id, "exact", bs) : interval_text(id, "exact", bs);
        }
    }
    if (cfg.oracle) {
        // Nesting check against grid probing: tight within the oracle
        // interval, the oracle interval within weak, one grid step of slack.
        double step = 0.01, slack = step + 1e-9, delta = 0.0;
        for (size_t k = 0; k < d.metas().size(); ++k) {
            oracle::Interval g = oracle::oracle_interval(d, e, d.metas()[k].id, step);
            AdmissibleInterval lo_side, hi_side;
            if (normal) {
                lo_side = hi_side =
                    admissible_interval_normal(eu_lines_normal(d, c, e, static_cast<int>(k)));
            } else {
                lo_side = ext.tight[k];
                hi_side = ext.weak[k];
            }
            delta = std::max(delta, g.lo - lo_side.lo - slack);
            delta = std::max(delta, lo_side.hi - g.hi - slack);
            delta = std::max(delta, hi_side.lo - g.lo - slack);
            delta = std::max(delta, g.hi - hi_side.hi - slack);
        }
        delta = std::max(delta, 0.0);
        out += check_line(delta == 0.0, delta);
    }
}

void do_voi(const InfluenceDiagram& d, const RunConfig& cfg, std::string& out) {
    DecisionCircuit c = compile(d);
    const Evidence& e = d.evidence();
    std::vector<VarId> vars = split_vars(cfg.vars);
    VoiAnswer sweep = voi_sweep(d, c, e, vars, cfg.cap);
    std::string joined = join(vars, ',');
    if (csv_mode(cfg)) {
        out += "vars,method,meu_pi,voi\n";
        out += joined + ",sweep," + fmt_shortest(sweep.meu_pi) + "," + fmt_shortest(sweep.voi) +
               "\n";
    } else {
        out += "vars=" + joined + " method=sweep meu_pi=" + fmt_sig9(sweep.meu_pi) +
               " voi=" + fmt_dollars(sweep.voi) + "\n";
    }
    if (vars.size() == 1 && is_normal_form(d)) {
        VoiAnswer deriv = voi_derivative(d, c, e, vars[0]);
        if (csv_mode(cfg)) {
            out += joined + ",derivative," + fmt_shortest(deriv.meu_pi) + "," +
                   fmt_shortest(deriv.voi) + "\n";
        } else {
            out += "vars=" + joined + " method=derivative meu_pi=" + fmt_sig9(deriv.meu_pi) +
                   " voi=" + fmt_dollars(deriv.voi) + "\n";
        }
        double gap = std::abs(sweep.voi - deriv.voi);
        bool agree = gap <= 1e-9 * std::max(1.0, std::abs(sweep.voi));
        out += std::string("methods_agree=") + (agree ? "true" : "false") +
               " delta=" + fmt_sig9(gap) + "\n";
    }
    if (cfg.oracle) {
        oracle::VoiResult o = oracle::oracle_voi(d, e, vars);
        double delta = std::abs(sweep.voi - o.voi);
        bool agree = delta <= 1e-6 * std::max(1.0, std::abs(o.voi)) &&
                     std::abs(sweep.meu_pi - o.meu_pi) <= 1e-9;
        out += check_line(agree, delta);
    }
}

}  // namespace

CliResult run_cli(std::vector<std::string> args) {
    RunConfig cfg;
    CLI::App app{"Decision-circuit toolkit for discrete influence diagrams"};
    app.name("dcirc");
    app.require_subcommand(1);
    app.fallthrough();
    app.add_flag("--oracle", cfg.oracle, "Cross-check the result against the brute-force oracle");
    app.add_option("--format", cfg.format, "Output encoding")
        ->check(CLI::IsMember({"text", "csv"}))
        ->capture_default_str();
    app.add_option("--output", cfg.output, "Write results to this file instead of stdout");

    CLI::App* validate = app.add_subcommand("validate", "Load a diagram file and report its shape");
    validate->add_option("file", cfg.path, "Diagram JSON file")->required();

    CLI::App* compiled =
        app.add_subcommand("compile", "Compile the diagram and print circuit statistics");
    compiled->add_option("file", cfg.path, "Diagram JSON file")->required();
    compiled->add_option("--emit-graph", cfg.emit_graph,
                         "Write a Graphviz rendering of the circuit to this path");

    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "Maximal expected utility, certain equivalent, and optimal strategy");
    evaluate->add_option("file", cfg.path, "Diagram JSON file")->required();
    evaluate->add_option("--evidence", cfg.evidence, "Extra observation VAR=outcome (repeatable)");

    CLI::App* plot =
        app.add_subcommand("plot", "One-way sensitivity plot over a meta-parameter (CSV)");
    plot->add_option("file", cfg.path, "Diagram JSON file")->required();
    plot->add_option("--meta", cfg.meta, "Meta-parameter id or index")->required();
    plot->add_option("--strategy", cfg.strategy,
                     "Reference curve: 'optimal' or a strategy JSON file")
        ->capture_default_str();
    plot->add_option("--resolution", cfg.resolution, "Sample spacing in (0, 0.5]")
        ->capture_default_str();

    CLI::App* intervals =
        app.add_subcommand("intervals", "Admissible intervals of every meta-parameter");
    intervals->add_option("file", cfg.path, "Diagram JSON file")->required();
    intervals->add_flag("--exact", cfg.exact,
                        "Also binary-search the exact interval (extensive form)");
    intervals->add_option("--tolerance", cfg.tolerance, "Search endpoint tolerance in (0, 0.1]")
        ->capture_default_str();

    CLI::App* voi = app.add_subcommand("voi", "Value of perfect information on a variable set");
    voi->add_option("file", cfg.path, "Diagram JSON file")->required();
    voi->add_option("--vars", cfg.vars, "Comma-separated variable ids")->required();
    voi->add_option("--cap", cfg.cap, "Largest allowed joint instantiation count")
        ->capture_default_str();

    CliResult res;
    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        CLI::App* topic = &app;
        for (CLI::App* sub : app.get_subcommands())
            if (sub->parsed()) topic = sub;
        res.out = topic->help();
        return res;
    } catch (const CLI::ParseError& e) {
        res.err = std::string(e.what()) + "\nRun with --help for usage.\n";
        res.code = 2;
        return res;
    }

    try {
        InfluenceDiagram d = load_diagram_file(cfg.path);
        if (validate->parsed()) do_validate(d, cfg, res.out);
        if (compiled->parsed()) do_compile(d, cfg, res.out);
        if (evaluate->parsed()) do_evaluate(d, cfg, res.out);
        if (plot->parsed()) do_plot(d, cfg, res.out);
        if (intervals->parsed()) do_intervals(d, cfg, res.out, res.err);
        if (voi->parsed()) do_voi(d, cfg, res.out);
        if (!cfg.output.empty()) {
            std::ofstream f(cfg.output);
            if (!f) throw QueryError("cannot write output file '" + cfg.output + "'");
            f << res.out;
            res.out.clear();
        }
    } catch (const QueryError& e) {
        res.err += cfg.path + ": " + e.what() + "\n";
        res.code = 2;
    } catch (const DiagramError& e) {
        res.err += cfg.path + ": " + e.what() + "\n";
        res.code = 1;
    }
    return res;
}

}  // namespace dcirc
