#pragma once

#include <functional>
#include <map>

#include "dcirc/model.hpp"
#include "dcirc/parallel.hpp"

// Brute-force ground truth: strategy enumeration over explicit joint
// distributions. Shares no code with the circuit pipeline on purpose; tests
// compare the two.
namespace dcirc::oracle {

inline constexpr long kStrategyCap = 1000000;
inline constexpr long kJointCap = 1L << 24;
inline constexpr long kInstantiationCap = 4096;

// Dense joint distribution for one fixed strategy, over all non-utility
// variables in topological order.
struct JointTable {
    std::vector<int> vars;
    std::vector<double> mass;
    std::vector<double> value;  // dollars per joint outcome (0 without a utility node)
    std::vector<double> util;   // u(value)
};

JointTable make_joint(const InfluenceDiagram& d, const Strategy& s);

std::vector<Strategy> enumerate_strategies(const InfluenceDiagram& d);

struct EuResult {
    double eu;   // P(U=1 | e, s)
    double p_e;  // P(e | s)
};
EuResult oracle_eu(const InfluenceDiagram& d, const Strategy& s, const Evidence& e);

// P(e | s); usable on chance-only diagrams with an empty strategy.
double oracle_prob(const InfluenceDiagram& d, const Strategy& s, const Evidence& e);
double oracle_prob(const InfluenceDiagram& d, const Evidence& e);

// P(x, e) for every outcome of every chance variable, keyed (variable idx,
// outcome idx). Outcomes contradicting the evidence get 0. Chance-only
// diagrams.
std::map<std::pair<int, int>, double> oracle_marginals(const InfluenceDiagram& d, const Evidence& e);

struct MeuResult {
    double meu = 0.0;
    double ce = 0.0;
    Strategy s_star;
    long s_index = -1;  // index in enumeration order
    double p_e = 0.0;
};
MeuResult oracle_meu(const InfluenceDiagram& d, const Evidence& e, Exec exec = Exec::Parallel);

struct VoiResult {
    double meu_pi = 0.0;
    double voi = 0.0;  // dollars
};
VoiResult oracle_voi(const InfluenceDiagram& d, const Evidence& e, const std::vector<VarId>& vars,
                     Exec exec = Exec::Parallel);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};
Interval oracle_interval(const InfluenceDiagram& d, const Evidence& e, const std::string& k, double step,
                         Exec exec = Exec::Parallel);

double finite_diff(const std::function<double(double)>& fn, double x0, double h);

// Per decision: one flag per information-set configuration, 1 when the
// configuration has positive probability (above 1e-12) given e under s.
std::map<VarId, std::vector<std::uint8_t>> active_configs(const InfluenceDiagram& d, const Strategy& s,
                                                          const Evidence& e);

// Policy equality restricted to configurations active on both sides.
bool agree_on_active(const InfluenceDiagram& da, const Strategy& sa, const InfluenceDiagram& db,
                     const Strategy& sb, const Evidence& e);

}  // namespace dcirc::oracle
