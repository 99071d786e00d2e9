#include "dcirc/circuit.hpp"

#include <algorithm>
#include <sstream>

namespace dcirc {

int DecisionCircuit::indicator(int var, int outcome) const {
    auto it = indicator_of_.find({var, outcome});
    return it == indicator_of_.end() ? -1 : it->second;
}

int DecisionCircuit::parameter(int var, int outcome, long config) const {
    auto it = parameter_of_.find({var, outcome, config});
    return it == parameter_of_.end() ? -1 : it->second;
}

int DecisionCircuit::meta_leaf(int meta_index) const {
    if (meta_index < 0 || meta_index >= static_cast<int>(meta_of_.size())) return -1;
    return meta_of_[meta_index];
}

const std::vector<int>& DecisionCircuit::max_nodes_of(int decision_var) const {
    auto it = max_of_.find(decision_var);
    if (it == max_of_.end()) throw QueryError("variable has no max nodes in this circuit");
    return it->second;
}

CircuitStats circuit_stats(const DecisionCircuit& c) {
    CircuitStats stats;
    stats.nodes = static_cast<long>(c.nodes().size());
    stats.edges = c.num_edges();
    std::vector<long> depth(c.nodes().size(), 0);
    for (size_t i = 0; i < c.nodes().size(); ++i) {
        const CircuitNode& n = c.nodes()[i];
        if (n.kind == NodeKind::Max) stats.max_nodes++;
        long d = 0;
        for (int ch : n.children) d = std::max(d, depth[ch] + 1);
        depth[i] = d;
        stats.depth = std::max(stats.depth, d);
    }
    return stats;
}

namespace {

std::string config_label(const InfluenceDiagram& d, const std::vector<VarId>& parents, long config) {
    auto outcomes = d.config_unrank(parents, config);
    std::string out;
    for (size_t i = 0; i < parents.size(); ++i) {
        if (i) out += ",";
        int v = d.var_index(parents[i]);
        out += parents[i] + "=" + d.var(v).outcomes[outcomes[i]];
    }
    return out;
}

const std::vector<VarId>* parents_of(const InfluenceDiagram& d, int var) {
    if (const auto* c = d.chance_spec(var)) return &c->parents;
    if (const auto* dd = d.decision_spec(var)) return &dd->parents;
    return nullptr;
}

std::string node_label(const InfluenceDiagram& d, const CircuitNode& n) {
    std::ostringstream out;
    switch (n.kind) {
        case NodeKind::Constant:
            out << n.value;
            return out.str();
        case NodeKind::Indicator:
            return "lambda(" + d.var(n.var).id + "=" + d.var(n.var).outcomes[n.outcome] + ")";
        case NodeKind::Parameter: {
            std::string label = "theta(" + d.var(n.var).id + "=" + d.var(n.var).outcomes[n.outcome];
            const auto* parents = parents_of(d, n.var);
            if (parents && !parents->empty()) label += " | " + config_label(d, *parents, n.config);
            return label + ")";
        }
        case NodeKind::Meta:
            return d.metas()[n.meta].id;
        case NodeKind::Sum:
            return "+";
        case NodeKind::Product:
            return "*";
        case NodeKind::Max: {
            std::string label = "max " + d.var(n.var).id;
            const auto* parents = parents_of(d, n.var);
            if (parents && !parents->empty()) label += " | " + config_label(d, *parents, n.config);
            return label;
        }
    }
    return "?";
}

}  // namespace

std::string to_dot(const InfluenceDiagram& d, const DecisionCircuit& c) {
    std::ostringstream out;
    out << "digraph circuit {\n  rankdir=BT;\n";
    for (size_t i = 0; i < c.nodes().size(); ++i) {
        const CircuitNode& n = c.nodes()[i];
        const char* shape = n.children.empty() ? "box" : (n.kind == NodeKind::Max ? "diamond" : "ellipse");
        out << "  n" << i << " [label=\"" << node_label(d, n) << "\", shape=" << shape << "];\n";
    }
    for (size_t i = 0; i < c.nodes().size(); ++i) {
        const CircuitNode& n = c.nodes()[i];
        for (size_t j = 0; j < n.children.size(); ++j) {
            out << "  n" << n.children[j] << " -> n" << i;
            if (n.kind == NodeKind::Max)
                out << " [label=\"" << d.var(n.var).outcomes[n.alts[j]] << "\"]";
            out << ";\n";
        }
    }
    out << "}\n";
    return out.str();
}

}  // namespace dcirc
