#include "dcirc/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dcirc/errors.hpp"

namespace dcirc::corpus {

namespace {

struct Rng {
    std::mt19937_64 engine;
    explicit Rng(std::uint64_t seed) : engine(seed) {}
    double u01() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
    int uniform(int lo, int hi) {  // inclusive
        int span = hi - lo + 1;
        int v = lo + static_cast<int>(u01() * span);
        return std::min(v, hi);
    }
    bool coin(double p) { return u01() < p; }
};

// CPT entries live in [0.15, 0.85] so that every information state keeps a
// probability comfortably above the active-node threshold, and covariation
// keeps them inside [0.1, 0.9] across the whole tau range.
double row_prob(Rng& rng) { return 0.15 + 0.7 * rng.u01(); }

}  // namespace

CorpusConfig load_config(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what());
    }
    CorpusConfig cfg;
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("count")) cfg.count = doc["count"].get<int>();
    if (doc.contains("max_vars")) cfg.max_vars = doc["max_vars"].get<int>();
    if (doc.contains("max_decisions")) cfg.max_decisions = doc["max_decisions"].get<int>();
    if (cfg.count < 1 || cfg.max_vars < 3 || cfg.max_decisions < 1 || cfg.max_decisions > 2)
        throw ParseError("corpus config out of range");
    return cfg;
}

CorpusConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_config(buf.str());
}

InfluenceDiagram generate(const CorpusConfig& cfg, int index) {
    Rng rng(cfg.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(index) + 1);

    int n_dec = cfg.max_decisions >= 2 && rng.coin(0.5) ? 2 : 1;
    bool normal_form = n_dec == 1 && rng.coin(0.5);
    int n_chance = rng.uniform(3, cfg.max_vars - n_dec);

    // Topological layout: at least one chance variable before the first
    // decision (it is always a legal VOI target), decisions afterwards in
    // order, remaining chance variables anywhere after the first slot.
    struct Slot {
        bool decision;
        int serial;  // per-kind counter
    };
    std::vector<Slot> layout;
    layout.push_back({false, 0});
    std::vector<Slot> rest;
    for (int i = 1; i < n_chance; ++i) rest.push_back({false, i});
    int prev = 0;
    for (int i = 0; i < n_dec; ++i) {  // later decisions always placed after earlier ones
        int pos = rng.uniform(prev, static_cast<int>(rest.size()));
        rest.insert(rest.begin() + pos, {true, i});
        prev = pos + 1;
    }
    layout.insert(layout.end(), rest.begin(), rest.end());

    DiagramData data;
    std::vector<VarId> placed;           // ids in topological order
    std::vector<VarId> placed_chance;    // chance ids so far
    std::vector<VarId> decision_ids;
    std::vector<std::vector<VarId>> decision_parents;

    auto add_chance = [&](int serial) {
        VarId id = "C" + std::to_string(serial);
        Variable var{id, id, VarKind::Chance, {"f", "t"}};
        ChanceSpec spec;
        spec.variable = id;
        int max_parents = std::min<int>(2, static_cast<int>(placed.size()));
        int n_par = max_parents == 0 ? 0 : rng.uniform(0, max_parents);
        std::vector<VarId> pool = placed;
        for (int i = 0; i < n_par; ++i) {
            int j = rng.uniform(0, static_cast<int>(pool.size()) - 1);
            spec.parents.push_back(pool[j]);
            pool.erase(pool.begin() + j);
        }
        long rows = 1;
        for (size_t i = 0; i < spec.parents.size(); ++i) rows *= 2;
        for (long r = 0; r < rows; ++r) {
            double p = row_prob(rng);
            spec.cpt.push_back(p);
            spec.cpt.push_back(1.0 - p);
        }
        data.variables.push_back(std::move(var));
        data.chance.push_back(std::move(spec));
        placed.push_back(id);
        placed_chance.push_back(id);
    };

    auto add_decision = [&](int serial) {
        VarId id = "D" + std::to_string(serial);
        Variable var{id, id, VarKind::Decision, {"a0", "a1"}};
        DecisionSpec spec;
        spec.variable = id;
        if (serial == 0) {
            if (!normal_form && !placed_chance.empty() && rng.coin(0.8)) {
                int j = rng.uniform(0, static_cast<int>(placed_chance.size()) - 1);
                spec.parents.push_back(placed_chance[j]);
            }
        } else {
            // No forgetting: everything the first decision knew, plus itself.
            spec.parents = decision_parents[0];
            spec.parents.push_back(decision_ids[0]);
            std::vector<VarId> pool;
            for (const auto& c : placed_chance)
                if (std::find(spec.parents.begin(), spec.parents.end(), c) == spec.parents.end())
                    pool.push_back(c);
            while (spec.parents.size() < 3 && !pool.empty() && rng.coin(0.6)) {
                int j = rng.uniform(0, static_cast<int>(pool.size()) - 1);
                spec.parents.push_back(pool[j]);
                pool.erase(pool.begin() + j);
            }
        }
        decision_ids.push_back(id);
        decision_parents.push_back(spec.parents);
        data.variables.push_back(std::move(var));
        data.decisions.push_back(std::move(spec));
        placed.push_back(id);
    };

    for (const Slot& slot : layout) {
        if (slot.decision) {
            add_decision(slot.serial);
        } else {
            add_chance(slot.serial);
        }
    }

    // Utility node: the last decision always matters, plus one or two chance
    // variables drawn from the back of the layout (more likely downstream).
    {
        data.variables.push_back({"U", "U", VarKind::Utility, {kUtilityTrue, kUtilityFalse}});
        UtilitySpec u;
        u.attributes.push_back(decision_ids.back());
        std::vector<VarId> pool = placed_chance;
        int extra = rng.uniform(1, std::min<int>(2, static_cast<int>(pool.size())));
        for (int i = 0; i < extra; ++i) {
            int j = rng.uniform(0, static_cast<int>(pool.size()) - 1);
            u.attributes.push_back(pool[j]);
            pool.erase(pool.begin() + j);
        }
        if (decision_ids.size() > 1 && rng.coin(0.5))
            u.attributes.insert(u.attributes.begin(), decision_ids[0]);

        long rows = 1;
        for (size_t i = 0; i < u.attributes.size(); ++i) rows *= 2;
        double vmin = 1e300, vmax = -1e300;
        for (long r = 0; r < rows; ++r) {
            double v = 5.0 + 90.0 * rng.u01();
            u.values.push_back(v);
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
        if (rng.coin(0.5)) {
            u.utility.kind = UtilityFunction::Kind::Linear;
            u.utility.a = 0.01;
            u.utility.b = 0.0;
        } else {
            u.utility.kind = UtilityFunction::Kind::Exponential;
            u.utility.rho = 40.0 + 80.0 * rng.u01();
            double lo = std::exp(-vmin / u.utility.rho);   // largest exp term
            double hi = std::exp(-vmax / u.utility.rho);   // smallest exp term
            // Map the tabulated range onto [0.05, 0.95].
            u.utility.a = lo > hi ? 0.9 / (lo - hi) : 1.0;
            u.utility.b = 0.05 + u.utility.a * lo;
        }
        data.utility = std::move(u);
    }

    // Meta-parameters: one or two, on distinct chance variables, covarying
    // every CPT row with the biggest slope that keeps entries in [0.1, 0.9].
    {
        int n_meta = rng.coin(0.5) ? 2 : 1;
        std::vector<VarId> pool = placed_chance;
        n_meta = std::min<int>(n_meta, static_cast<int>(pool.size()));
        for (int m = 0; m < n_meta; ++m) {
            int j = rng.uniform(0, static_cast<int>(pool.size()) - 1);
            VarId target = pool[j];
            pool.erase(pool.begin() + j);

            const ChanceSpec* spec = nullptr;
            for (const auto& c : data.chance)
                if (c.variable == target) spec = &c;

            MetaParameter meta;
            meta.id = "tau" + std::to_string(m + 1);
            meta.variable = target;
            meta.reference = 0.2 + 0.6 * rng.u01();
            long rows = static_cast<long>(spec->cpt.size()) / 2;
            for (long r = 0; r < rows; ++r) {
                double p = spec->cpt[r * 2];
                bool positive = rng.coin(0.5);
                double bound = positive
                                   ? std::min((0.9 - p) / (1.0 - meta.reference), (p - 0.1) / meta.reference)
                                   : std::min((p - 0.1) / (1.0 - meta.reference), (0.9 - p) / meta.reference);
                double slope = 0.8 * bound * (positive ? 1.0 : -1.0);
                meta.c0.push_back(p - slope * meta.reference);
                meta.c0.push_back(1.0 - p + slope * meta.reference);
                meta.c1.push_back(slope);
                meta.c1.push_back(-slope);
            }
            data.metas.push_back(std::move(meta));
        }
    }

    // Occasional evidence on a variable no decision can influence, leaving
    // at least one other such variable free for VOI queries.
    {
        InfluenceDiagram probe(data);  // validates and gives ancestor access
        std::vector<VarId> eligible = voi_eligible(probe);
        if (eligible.size() >= 2 && rng.coin(0.3)) {
            int j = rng.uniform(0, static_cast<int>(eligible.size()) - 1);
            data.evidence.assignments[eligible[j]] = rng.coin(0.5) ? "f" : "t";
        }
    }

    return InfluenceDiagram(std::move(data));
}

std::vector<VarId> voi_eligible(const InfluenceDiagram& d) {
    std::vector<std::uint8_t> tainted(d.num_vars(), 0);
    for (int v : d.topo_order()) {
        const std::vector<VarId>* parents = nullptr;
        if (const auto* c = d.chance_spec(v)) parents = &c->parents;
        if (const auto* dd = d.decision_spec(v)) parents = &dd->parents;
        if (!parents) continue;
        for (const auto& p : *parents) {
            int pi = d.var_index(p);
            if (d.var(pi).kind == VarKind::Decision || tainted[pi]) tainted[v] = 1;
        }
    }
    std::vector<VarId> out;
    for (int v = 0; v < d.num_vars(); ++v) {
        if (d.var(v).kind != VarKind::Chance || tainted[v]) continue;
        if (d.evidence().assignments.count(d.var(v).id)) continue;
        out.push_back(d.var(v).id);
    }
    return out;
}

}  // namespace dcirc::corpus
