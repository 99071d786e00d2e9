#pragma once

#include <string>
#include <vector>

#include "dcirc/parallel.hpp"
#include "dcirc/sweep.hpp"

namespace dcirc {

// Expected-utility line of one alternative as a function of a meta-parameter.
// Anchors and slopes are scaled by the constant 1/P(e) taken at the reference
// point. When P(e) itself moves with tau the line tracks the scaled numerator
// instead of the true (rational) expected utility; the shared positive
// denominator leaves every argmax comparison intact.
enum class LineSemantics { ExpectedUtility, Numerator };

struct EuLine {
    int alternative = -1;
    int meta = -1;
    double tau0 = 0.0;
    double anchor = 0.0;
    double slope = 0.0;
    LineSemantics semantics = LineSemantics::ExpectedUtility;

    double at(double tau) const { return anchor + (tau - tau0) * slope; }
};

enum class IntervalKind { Exact, Tight, Weak };

// Range of a meta-parameter over which the reference optimal strategy stays
// optimal. delta_plus/delta_minus are the raw offsets from tau0 before
// clamping to [0,1]; they are +/-infinity when no competitor constrains that
// side.
struct AdmissibleInterval {
    int meta = -1;
    double lo = 0.0;
    double hi = 1.0;
    IntervalKind kind = IntervalKind::Exact;
    double delta_plus = 0.0;
    double delta_minus = 0.0;
    bool tie = false;        // an exactly tied line pair was involved
    bool nonconvex = false;  // grid verification found a hole (binary search)
};

struct VoiAnswer {
    std::vector<VarId> vars;
    double meu_pi = 0.0;
    double voi = 0.0;  // dollars
    bool exact = true;
    std::string note;
};

struct PlotSample {
    double tau = 0.0;
    double ce_problem = 0.0;
    double ce_strategy = 0.0;
    std::string opt;  // strategy signature at this sample, empty when invalid
    bool valid = true;
};

struct PlotSeries {
    int meta = -1;
    double epsilon = 0.01;
    std::vector<PlotSample> samples;
};

struct MaxNodeClasses {
    std::vector<int> active;
    std::vector<int> inactive;
};

// Root value (and per-meta slope) of each neighbouring strategy at one max
// node: the strategies that deviate from s* only in that node's choice.
struct NeighbourValues {
    int node = -1;
    std::vector<int> alternatives;
    std::vector<double> value;               // per listed alternative
    std::vector<std::vector<double>> slope;  // [alternative][meta]
};

struct ExtensiveIntervals {
    std::vector<AdmissibleInterval> tight;  // indexed by meta
    std::vector<AdmissibleInterval> weak;
    bool all_active = false;  // no inactive max nodes: both bounds are exact
};

// One line per available alternative of a normal-form diagram's decision.
std::vector<EuLine> eu_lines_normal(const InfluenceDiagram& d, const DecisionCircuit& c,
                                    const Evidence& e, int k);

// Closed-form admissible interval from the lines of one meta-parameter.
AdmissibleInterval admissible_interval_normal(const std::vector<EuLine>& lines);

// Certain-equivalent curves over tau in [0,1] at spacing eps (0 and 1 always
// sampled): the re-optimized problem, a fixed reference strategy (s* at the
// reference point when ref is null), and the argmax strategy per sample.
PlotSeries one_way_plot(const InfluenceDiagram& d, const DecisionCircuit& c, const Evidence& e,
                        int k, double eps = 0.01, const Strategy* ref = nullptr);

std::string plot_csv(const PlotSeries& series);

// Compact policy rendering, e.g. "B:1000;G:0" (decisions in id order, one
// chosen-alternative digit per information-set configuration).
std::string strategy_signature(const Strategy& s);

// Whether two optimization results (as returned by meu_ce) picked the same
// strategy. Compared only at contexts both sides can reach, and a differing
// choice counts only when both sides hold a margin above rounding noise:
// policies at unreachable contexts or inside exact ties are arbitrary
// tie-breaks, not decisions.
bool same_optimum(const InfluenceDiagram& d, const DecisionCircuit& c, const MeuCeResult& a,
                  const MeuCeResult& b);

// Partition of max nodes by reachability in an initial (gated, swept) state;
// see max_node_active for the criterion.
MaxNodeClasses classify_max_nodes(const InfluenceDiagram& d, const DecisionCircuit& c,
                                  const SweepState& state);

// Tight and weak admissible-interval bounds for every meta-parameter of an
// extensive-form (or any) diagram, from per-max-node alternative value lines.
ExtensiveIntervals admissible_intervals_extensive(const InfluenceDiagram& d,
                                                  const DecisionCircuit& c, const Evidence& e);

// Whether ref's strategy is still optimal after moving meta-parameter k to
// tau: its gated root value must match the re-optimized root to rounding
// tolerance. Policy comparison would be blind here whenever a tie upstream
// lets the re-optimizer wander into a branch the reference never reaches.
bool strategy_still_optimal(const InfluenceDiagram& d, const DecisionCircuit& c, const Evidence& e,
                            const MeuCeResult& ref, int k, double tau);

// Endpoint search for the exact admissible interval: expands around tau0
// until the reference strategy stops being optimal, endpoints located within
// eps, then verified on a 0.01 grid.
AdmissibleInterval binary_search_interval(const InfluenceDiagram& d, const DecisionCircuit& c,
                                          const Evidence& e, int k, double eps = 1e-4);

NeighbourValues neighbouring_strategy_values(const InfluenceDiagram& d, const DecisionCircuit& c,
                                             const Evidence& e, int node);

// Value of perfect information on one variable via per-alternative indicator
// partials; normal form only.
VoiAnswer voi_derivative(const InfluenceDiagram& d, const DecisionCircuit& c, const Evidence& e,
                         const VarId& x);

// Value of perfect information on a variable set via one maximize sweep per
// joint instantiation; works on any diagram.
VoiAnswer voi_sweep(const InfluenceDiagram& d, const DecisionCircuit& c, const Evidence& e,
                    const std::vector<VarId>& vars, long cap = 4096, Exec exec = Exec::Parallel);

// Chain rule from an expected-utility slope to a certain-equivalent slope.
double ce_slope(double eu_slope, double ce, const UtilityFunction& u);

}  // namespace dcirc
