#include "dcirc/diagram_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dcirc {

using nlohmann::json;

namespace {

std::string type_name(const json& j) { return j.type_name(); }

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'", where);
    return *it;
}

std::string as_string(const json& j, const std::string& where) {
    if (!j.is_string()) throw ParseError("expected a string, got " + type_name(j), where);
    return j.get<std::string>();
}

double as_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ParseError("expected a number, got " + type_name(j), where);
    return j.get<double>();
}

std::vector<double> as_number_array(const json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError("expected an array, got " + type_name(j), where);
    std::vector<double> out;
    out.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<std::string> as_string_array(const json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError("expected an array, got " + type_name(j), where);
    std::vector<std::string> out;
    out.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i) out.push_back(as_string(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

VarKind parse_kind(const std::string& s, const std::string& where) {
    if (s == "chance") return VarKind::Chance;
    if (s == "decision") return VarKind::Decision;
    if (s == "utility") return VarKind::Utility;
    throw ParseError("unknown variable kind '" + s + "'", where);
}

const char* kind_name(VarKind k) {
    switch (k) {
        case VarKind::Chance: return "chance";
        case VarKind::Decision: return "decision";
        case VarKind::Utility: return "utility";
    }
    return "?";
}

}  // namespace

InfluenceDiagram load_diagram(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what());
    }
    if (!doc.is_object()) throw ParseError("top level must be an object");

    const json& fmt = require(doc, "format", "/");
    if (!fmt.is_number_integer() || fmt.get<int>() != 1)
        throw ParseError("unsupported format version (expected 1)", "/format");

    DiagramData data;

    const json& vars = require(doc, "variables", "/");
    if (!vars.is_array()) throw ParseError("expected an array", "/variables");
    for (size_t i = 0; i < vars.size(); ++i) {
        std::string where = "/variables/" + std::to_string(i);
        const json& v = vars[i];
        if (!v.is_object()) throw ParseError("expected an object", where);
        Variable var;
        var.id = as_string(require(v, "id", where), where + "/id");
        var.kind = parse_kind(as_string(require(v, "kind", where), where + "/kind"), where + "/kind");
        if (v.contains("name")) var.name = as_string(v["name"], where + "/name");
        if (v.contains("outcomes")) {
            var.outcomes = as_string_array(v["outcomes"], where + "/outcomes");
        } else if (var.kind == VarKind::Utility) {
            var.outcomes = {kUtilityTrue, kUtilityFalse};
        } else {
            throw ParseError("missing field 'outcomes'", where);
        }
        data.variables.push_back(std::move(var));
    }

    if (doc.contains("chance")) {
        const json& arr = doc["chance"];
        if (!arr.is_array()) throw ParseError("expected an array", "/chance");
        for (size_t i = 0; i < arr.size(); ++i) {
            std::string where = "/chance/" + std::to_string(i);
            const json& c = arr[i];
            ChanceSpec spec;
            spec.variable = as_string(require(c, "variable", where), where + "/variable");
            if (c.contains("parents")) spec.parents = as_string_array(c["parents"], where + "/parents");
            spec.cpt = as_number_array(require(c, "cpt", where), where + "/cpt");
            data.chance.push_back(std::move(spec));
        }
    }

    if (doc.contains("decisions")) {
        const json& arr = doc["decisions"];
        if (!arr.is_array()) throw ParseError("expected an array", "/decisions");
        for (size_t i = 0; i < arr.size(); ++i) {
            std::string where = "/decisions/" + std::to_string(i);
            const json& d = arr[i];
            DecisionSpec spec;
            spec.variable = as_string(require(d, "variable", where), where + "/variable");
            if (d.contains("parents")) spec.parents = as_string_array(d["parents"], where + "/parents");
            if (d.contains("availability")) {
                for (double x : as_number_array(d["availability"], where + "/availability")) {
                    if (x != 0.0 && x != 1.0) throw ParseError("availability entries must be 0 or 1", where);
                    spec.availability.push_back(static_cast<std::uint8_t>(x));
                }
            }
            data.decisions.push_back(std::move(spec));
        }
    }

    if (doc.contains("utility")) {
        const json& u = doc["utility"];
        std::string where = "/utility";
        if (!u.is_object()) throw ParseError("expected an object", where);
        UtilitySpec spec;
        spec.attributes = as_string_array(require(u, "attributes", where), where + "/attributes");
        spec.values = as_number_array(require(u, "values", where), where + "/values");
        const json& f = require(u, "utility", where);
        std::string fwhere = where + "/utility";
        std::string kind = as_string(require(f, "kind", fwhere), fwhere + "/kind");
        if (kind == "linear") {
            spec.utility.kind = UtilityFunction::Kind::Linear;
        } else if (kind == "exponential") {
            spec.utility.kind = UtilityFunction::Kind::Exponential;
        } else {
            throw ParseError("unknown utility kind '" + kind + "'", fwhere);
        }
        if (f.contains("a")) spec.utility.a = as_number(f["a"], fwhere + "/a");
        if (f.contains("b")) spec.utility.b = as_number(f["b"], fwhere + "/b");
        if (spec.utility.kind == UtilityFunction::Kind::Exponential)
            spec.utility.rho = as_number(require(f, "rho", fwhere), fwhere + "/rho");
        data.utility = std::move(spec);
    }

    if (doc.contains("meta_parameters")) {
        const json& arr = doc["meta_parameters"];
        if (!arr.is_array()) throw ParseError("expected an array", "/meta_parameters");
        for (size_t i = 0; i < arr.size(); ++i) {
            std::string where = "/meta_parameters/" + std::to_string(i);
            const json& m = arr[i];
            MetaParameter meta;
            meta.id = as_string(require(m, "id", where), where + "/id");
            meta.variable = as_string(require(m, "variable", where), where + "/variable");
            meta.c0 = as_number_array(require(m, "c0", where), where + "/c0");
            meta.c1 = as_number_array(require(m, "c1", where), where + "/c1");
            meta.reference = as_number(require(m, "reference", where), where + "/reference");
            data.metas.push_back(std::move(meta));
        }
    }

    if (doc.contains("evidence")) {
        const json& e = doc["evidence"];
        if (!e.is_object()) throw ParseError("expected an object", "/evidence");
        for (auto it = e.begin(); it != e.end(); ++it)
            data.evidence.assignments[it.key()] = as_string(it.value(), "/evidence/" + it.key());
    }

    return InfluenceDiagram(std::move(data));
}

InfluenceDiagram load_diagram_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_diagram(buf.str());
}

std::string serialize(const InfluenceDiagram& d) {
    const DiagramData& data = d.data();
    json doc;
    doc["format"] = 1;

    json vars = json::array();
    for (const auto& v : data.variables) {
        json jv;
        jv["id"] = v.id;
        if (v.name != v.id) jv["name"] = v.name;
        jv["kind"] = kind_name(v.kind);
        jv["outcomes"] = v.outcomes;
        vars.push_back(std::move(jv));
    }
    doc["variables"] = std::move(vars);

    if (!data.chance.empty()) {
        json arr = json::array();
        for (const auto& c : data.chance) {
            json jc;
            jc["variable"] = c.variable;
            if (!c.parents.empty()) jc["parents"] = c.parents;
            jc["cpt"] = c.cpt;
            arr.push_back(std::move(jc));
        }
        doc["chance"] = std::move(arr);
    }
    if (!data.decisions.empty()) {
        json arr = json::array();
        for (const auto& dd : data.decisions) {
            json jd;
            jd["variable"] = dd.variable;
            if (!dd.parents.empty()) jd["parents"] = dd.parents;
            if (!dd.availability.empty()) {
                json av = json::array();
                for (auto x : dd.availability) av.push_back(static_cast<int>(x));
                jd["availability"] = std::move(av);
            }
            arr.push_back(std::move(jd));
        }
        doc["decisions"] = std::move(arr);
    }
    if (data.utility) {
        json ju;
        ju["attributes"] = data.utility->attributes;
        ju["values"] = data.utility->values;
        json jf;
        jf["kind"] = data.utility->utility.kind == UtilityFunction::Kind::Linear ? "linear" : "exponential";
        jf["a"] = data.utility->utility.a;
        jf["b"] = data.utility->utility.b;
        if (data.utility->utility.kind == UtilityFunction::Kind::Exponential)
            jf["rho"] = data.utility->utility.rho;
        ju["utility"] = std::move(jf);
        doc["utility"] = std::move(ju);
    }
    if (!data.metas.empty()) {
        json arr = json::array();
        for (const auto& m : data.metas) {
            json jm;
            jm["id"] = m.id;
            jm["variable"] = m.variable;
            jm["c0"] = m.c0;
            jm["c1"] = m.c1;
            jm["reference"] = m.reference;
            arr.push_back(std::move(jm));
        }
        doc["meta_parameters"] = std::move(arr);
    }
    if (!data.evidence.assignments.empty()) {
        json je = json::object();
        for (const auto& [k, v] : data.evidence.assignments) je[k] = v;
        doc["evidence"] = std::move(je);
    }
    return doc.dump(2) + "\n";
}

Strategy load_strategy(const InfluenceDiagram& d, const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what());
    }
    if (!doc.is_object()) throw ParseError("strategy file must be an object mapping decision ids to choice arrays");
    Strategy s;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        int v = d.find_var(it.key());
        if (v < 0 || d.var(v).kind != VarKind::Decision)
            throw ParseError("'" + it.key() + "' is not a decision variable");
        const auto& spec = *d.decision_spec(v);
        long configs = d.config_count(spec.parents);
        const json& arr = it.value();
        if (!arr.is_array() || static_cast<long>(arr.size()) != configs)
            throw ParseError("strategy for '" + it.key() + "' must list " + std::to_string(configs) + " choices");
        std::vector<int> choices;
        for (size_t i = 0; i < arr.size(); ++i) {
            std::string where = "/" + it.key() + "[" + std::to_string(i) + "]";
            int alt;
            if (arr[i].is_number_integer()) {
                alt = arr[i].get<int>();
            } else {
                alt = d.outcome_index(v, as_string(arr[i], where));
            }
            if (alt < 0 || alt >= d.num_outcomes(v))
                throw ParseError("invalid alternative for '" + it.key() + "'", where);
            choices.push_back(alt);
        }
        s.policy[it.key()] = std::move(choices);
    }
    for (int v : d.decision_order())
        if (!s.policy.count(d.var(v).id))
            throw ParseError("strategy file is missing decision '" + d.var(v).id + "'");
    return s;
}

Strategy load_strategy_file(const InfluenceDiagram& d, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_strategy(d, buf.str());
}

}  // namespace dcirc
