#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dcirc/errors.hpp"

namespace dcirc {

using VarId = std::string;

enum class VarKind { Chance, Decision, Utility };

struct Variable {
    VarId id;
    std::string name;  // display label, defaults to id
    VarKind kind = VarKind::Chance;
    std::vector<std::string> outcomes;
};

// Conditional probability table for one chance variable. `cpt` is flat,
// row-major over the ordered parent list (first parent slowest), with the
// variable's own outcomes fastest.
struct ChanceSpec {
    VarId variable;
    std::vector<VarId> parents;
    std::vector<double> cpt;
};

// Decision node with its information set. `availability` follows the same
// indexing as a CPT; entries are 0/1. Empty means "all available".
struct DecisionSpec {
    VarId variable;
    std::vector<VarId> parents;
    std::vector<std::uint8_t> availability;
};

struct UtilityFunction {
    enum class Kind { Linear, Exponential };
    Kind kind = Kind::Linear;
    double a = 1.0;    // scale, must be > 0
    double b = 0.0;    // offset
    double rho = 1.0;  // risk tolerance, exponential only, must be > 0

    // linear: u(v) = a*v + b; exponential: u(v) = -a*exp(-v/rho) + b
    double operator()(double v) const;
    double inverse(double u) const;
    double slope_at(double v) const;  // u'(v)
};

struct UtilitySpec {
    std::vector<VarId> attributes;  // pa(U), ordered
    std::vector<double> values;     // dollars, flat row-major over attributes
    UtilityFunction utility;
};

// Scalar tau in [0,1] driving one chance variable's CPT entries through
// theta = c0 + c1*tau. Coefficient arrays are indexed exactly like the CPT.
struct MetaParameter {
    std::string id;
    VarId variable;
    std::vector<double> c0;
    std::vector<double> c1;
    double reference = 0.0;
};

struct Evidence {
    std::map<VarId, std::string> assignments;
    bool augmented = false;  // true once U=1 has been appended (e')
};

// One alternative index per parent configuration per decision, row-major
// over the decision's full information-set configuration space.
struct Strategy {
    std::map<VarId, std::vector<int>> policy;

    bool operator==(const Strategy&) const = default;
};

struct DiagramData {
    std::vector<Variable> variables;
    std::vector<ChanceSpec> chance;
    std::vector<DecisionSpec> decisions;
    std::optional<UtilitySpec> utility;
    std::vector<MetaParameter> metas;
    Evidence evidence;
};

// Validated influence diagram. Construction runs every structural check;
// instances are immutable afterwards and safe to share between threads.
class InfluenceDiagram {
  public:
    explicit InfluenceDiagram(DiagramData data);

    // -- variables ---------------------------------------------------------
    int num_vars() const { return static_cast<int>(data_.variables.size()); }
    const Variable& var(int idx) const { return data_.variables[idx]; }
    int var_index(const VarId& id) const;        // throws QueryError if unknown
    int find_var(const VarId& id) const;         // -1 if unknown
    int num_outcomes(int idx) const { return static_cast<int>(data_.variables[idx].outcomes.size()); }
    int outcome_index(int var_idx, const std::string& outcome) const;  // -1 if unknown
    const std::vector<int>& topo_order() const { return topo_order_; }

    // -- specs -------------------------------------------------------------
    const ChanceSpec* chance_spec(int var_idx) const;      // null if not chance
    const DecisionSpec* decision_spec(int var_idx) const;  // null if not decision
    bool has_utility() const { return data_.utility.has_value(); }
    const UtilitySpec& utility() const;
    int utility_var() const { return utility_var_; }  // -1 if none
    const std::vector<MetaParameter>& metas() const { return data_.metas; }
    const MetaParameter* meta(const std::string& id) const;  // null if unknown
    const Evidence& evidence() const { return data_.evidence; }

    // Decisions in their validated temporal order.
    const std::vector<int>& decision_order() const { return decision_order_; }

    // -- configuration indexing (row-major, first parent slowest) ----------
    long config_count(const std::vector<VarId>& parents) const;
    long config_count_of(int var_idx) const;  // parent-config count for a chance/decision var
    // Decompose/compose a config index against a parent list.
    std::vector<int> config_unrank(const std::vector<VarId>& parents, long config) const;
    long config_rank(const std::vector<VarId>& parents, const std::vector<int>& outcomes) const;

    // Availability lookup for a decision (defaults to 1 when table empty).
    bool available(int decision_idx, long config, int alternative) const;

    // Observed outcome index per variable, -1 where unobserved.
    std::vector<int> evidence_mask(const Evidence& e) const;

    const DiagramData& data() const { return data_; }

  private:
    void validate();

    DiagramData data_;
    std::map<VarId, int> index_;
    std::vector<int> chance_of_;    // var idx -> index into data_.chance or -1
    std::vector<int> decision_of_;  // var idx -> index into data_.decisions or -1
    int utility_var_ = -1;
    std::vector<int> topo_order_;
    std::vector<int> decision_order_;
};

// True iff the diagram has exactly one decision node and that node has no
// parents; evidence does not affect the answer.
bool is_normal_form(const InfluenceDiagram& d);

// Returns a copy of `d` with meta-parameter `k` applied at value tau:
// every bound CPT entry becomes c0 + c1*tau. The copy is re-validated.
InfluenceDiagram apply_meta(const InfluenceDiagram& d, const std::string& k, double tau);

// Evidence helper: e' = e with U=1 appended. Requires a utility node.
Evidence augment_evidence(const InfluenceDiagram& d, const Evidence& e);

// Canonical outcome labels of the utility node, in order (U=1 first).
inline constexpr const char* kUtilityTrue = "u";
inline constexpr const char* kUtilityFalse = "not_u";

}  // namespace dcirc
