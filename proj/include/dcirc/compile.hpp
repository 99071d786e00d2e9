#pragma once

#include "dcirc/circuit.hpp"
#include "dcirc/model.hpp"

namespace dcirc {

// Compile an influence diagram into a decision circuit by variable
// elimination: chance variables (including the utility node) are summed out,
// decisions are max-eliminated per information-set configuration. An empty
// order means default_order(d).
DecisionCircuit compile(const InfluenceDiagram& d, const std::vector<VarId>& order = {});

// Min-fill order respecting the information constraints; deterministic, ties
// broken by variable index.
std::vector<VarId> default_order(const InfluenceDiagram& d);

// An order is legal when it covers every variable exactly once and each
// decision is eliminated exactly when the variables still standing are its
// information set.
bool is_legal_order(const InfluenceDiagram& d, const std::vector<VarId>& order);

}  // namespace dcirc
