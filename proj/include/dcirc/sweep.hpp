#pragma once

#include <map>

#include "dcirc/circuit.hpp"
#include "dcirc/model.hpp"

namespace dcirc {

enum class Mode { Maximize, Sum };

// Per-leaf value substitutions applied on top of evidence for one sweep:
// strategy gates, meta-parameter settings, or finite-difference probes.
// The circuit itself is never mutated.
using Overrides = std::map<int, double>;

struct SweepState {
    Mode mode = Mode::Sum;
    Evidence evidence;
    Overrides overrides;
    std::vector<double> value;
    std::vector<double> partial;
    std::vector<int> choice;  // max nodes: chosen child position; -1 elsewhere
    bool has_partials = false;
    bool ties = false;  // an exact argmax tie occurred at some max node

    double root_value(const DecisionCircuit& c) const { return value[c.root()]; }
};

// Upward pass: leaves take evidence-consistent indicator values, their stored
// parameter/meta values, then overrides; interiors fold bottom-up. In
// maximize mode each max node records its argmax over available alternatives
// (ties to the lowest alternative index); in sum mode max nodes add.
SweepState evaluate_upward(const InfluenceDiagram& d, const DecisionCircuit& c, const Evidence& e,
                           Mode mode, const Overrides& overrides = {});

// Downward pass filling partial = d(seed value)/d(node value); seed defaults
// to the root. Requires a sum-mode state: with a strategy gated in, treating
// max as sum is exact. Product contributions use per-child sibling products,
// never division, so zero-valued children are handled exactly.
void differentiate_downward(const DecisionCircuit& c, SweepState& s, int seed = -1);

// Overrides pinning the decision parameters to a strategy: 1 on the selected
// alternative per configuration, 0 elsewhere.
Overrides fix_strategy(const InfluenceDiagram& d, const DecisionCircuit& c, const Strategy& s);

// Strategy recorded by a maximize-mode sweep, as full policy tables.
Strategy read_strategy(const InfluenceDiagram& d, const DecisionCircuit& c, const SweepState& s);

struct MeuCeResult {
    double meu = 0.0;
    double ce = 0.0;
    double p_e = 0.0;
    double g_root = 0.0;  // g(e') under the optimal strategy
    Strategy s_star;
    bool ties = false;  // exact argmax tie at some reachable max node
    SweepState state;   // gated sum-mode state at e', with partials
    // Maximize-value lead of each max node's chosen child over its best
    // available competitor (+inf without one, and at non-max nodes). A lead
    // at rounding scale marks a choice that is a coin toss, not a decision.
    std::vector<double> margin;
};

// Full query pipeline: maximize at e' = e + {U=1}, gate the recorded optimal
// strategy, re-evaluate in sum mode, differentiate. The root and the utility
// indicator partials give MEU and P(e); CE inverts the utility function.
MeuCeResult meu_ce(const InfluenceDiagram& d, const DecisionCircuit& c, const Evidence& e,
                   const Overrides& extra = {});

// Fixed-strategy sum-mode state with partials at the given evidence. For a
// normal-form diagram evaluated at e', the partial at any leaf v equals the
// mixed second derivative of the unfixed root through the strategy's gate.
SweepState strategy_gradient(const InfluenceDiagram& d, const DecisionCircuit& c, const Evidence& e,
                             const Strategy& s, const Overrides& extra = {});

// True when max node `node` sits in a reachable information state: nonzero
// root partial (above 1e-12) and a configuration consistent with the state's
// evidence. The indicator of an observed information parent can fall inside
// the branch rather than above the max node, so the partial alone can
// overstate reachability. Requires a differentiated state.
bool max_node_active(const InfluenceDiagram& d, const DecisionCircuit& c, const SweepState& s,
                     int node);

}  // namespace dcirc
