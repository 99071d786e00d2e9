#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dcirc/model.hpp"

namespace dcirc {

enum class NodeKind : std::uint8_t { Constant, Indicator, Parameter, Meta, Sum, Product, Max };

// One circuit node. Leaves carry their payload inline:
//   Constant   value
//   Indicator  (var, outcome)                 lambda leaves, all variable kinds
//   Parameter  (var, outcome, config)         theta leaves, chance and decision
//   Meta       (meta, value = reference tau)
// Interior nodes own an ordered child list; max nodes additionally tag each
// child with its alternative index and whether that alternative is available.
struct CircuitNode {
    NodeKind kind = NodeKind::Constant;
    double value = 0.0;
    int var = -1;
    int outcome = -1;
    long config = -1;
    int meta = -1;
    std::vector<int> children;
    std::vector<int> alts;
    std::vector<std::uint8_t> avail;
};

struct CircuitStats {
    long nodes = 0;
    long edges = 0;
    long max_nodes = 0;
    long depth = 0;
};

// Compiled decision circuit. Nodes are stored in topological order (children
// before parents), so an upward sweep is a forward scan and a downward sweep
// a backward scan. Immutable after compilation; safe to share across threads.
class DecisionCircuit {
  public:
    const std::vector<CircuitNode>& nodes() const { return nodes_; }
    const CircuitNode& node(int id) const { return nodes_[id]; }
    int root() const { return root_; }
    long num_edges() const { return edges_; }

    // Leaf lookups; -1 when the diagram does not imply that leaf (e.g. the
    // entry is meta-bound or compiled to a constant).
    int indicator(int var, int outcome) const;
    int parameter(int var, int outcome, long config) const;
    int meta_leaf(int meta_index) const;

    // Max nodes of one decision, indexed by information-set configuration.
    const std::vector<int>& max_nodes_of(int decision_var) const;
    const std::map<int, std::vector<int>>& max_table() const { return max_of_; }

    // The elimination order the circuit was built with (variable indices).
    const std::vector<int>& order() const { return order_; }

  private:
    friend class CircuitBuilder;

    std::vector<CircuitNode> nodes_;
    int root_ = -1;
    long edges_ = 0;
    std::map<std::pair<int, int>, int> indicator_of_;
    std::map<std::tuple<int, int, long>, int> parameter_of_;
    std::vector<int> meta_of_;
    std::map<int, std::vector<int>> max_of_;
    std::vector<int> order_;
};

CircuitStats circuit_stats(const DecisionCircuit& c);

// Graphviz dot rendering with stable node ordering; labels resolve variable
// and outcome names against the diagram the circuit was compiled from.
std::string to_dot(const InfluenceDiagram& d, const DecisionCircuit& c);

}  // namespace dcirc
