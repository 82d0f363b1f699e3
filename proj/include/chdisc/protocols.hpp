#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "chdisc/core.hpp"
#include "chdisc/divergences.hpp"
#include "chdisc/exponents.hpp"

namespace chdisc {

/// How the channel acting on each of the n uses may vary across uses.
///   Iid               — one fixed (unknown) vertex used for every copy.
///   ArbitrarilyVarying — every copy may be any vertex, chosen adaptively by
///                        an adversary who sees the outcome history.
///   SlightlyVarying   — every copy is a vertex and all used channels are
///                        pairwise close in total variation (membership checks
///                        only; no strategy evaluation is offered for this
///                        kind because the pairwise constraint couples the
///                        adversary's choices across time).
enum class FamilyKind { Iid, ArbitrarilyVarying, SlightlyVarying };

/// A hypothesis about how n channel uses are generated: a base vertex set
/// plus a variation discipline across the uses.
struct HypothesisFamily {
  HypothesisSet base;
  FamilyKind kind = FamilyKind::Iid;
  /// Pairwise total-variation tolerance; meaningful only for SlightlyVarying.
  double epsilon = 0.0;

  static HypothesisFamily iid(HypothesisSet base);
  static HypothesisFamily arbitrarily_varying(HypothesisSet base);
  /// epsilon must lie in [0, 1]; the base set must be classical.
  static HypothesisFamily slightly_varying(HypothesisSet base, double epsilon);
};

/// The input fed into one channel use: either a fixed input symbol or a
/// distribution over input symbols (the drawn symbol is retained alongside
/// the channel output, since the tester knows its own randomness).
using InputChoice = std::variant<int, ProbVector>;

/// Finite-state controller form of an adaptive strategy.  The memory state
/// is updated from each observed output symbol; the input for step k depends
/// only on (k, state).  Policies in this form can be evaluated exactly far
/// beyond the dense history cap, because histories that induce the same
/// memory state and the same per-vertex likelihoods can be merged.
struct FsmPolicy {
  int num_states = 1;
  int initial_state = 0;
  /// next(state, output_symbol) -> state after observing the symbol.
  std::function<int(int, int)> next;
  /// choose(step, state) -> input for that step (step is 0-based).
  std::function<InputChoice(int, int)> choose;
};

/// An adaptive discrimination strategy over classical channels: for each
/// step, an input chosen from the outcome history, plus an optional fixed
/// final test over length-n outcome strings.  When no final test is given,
/// evaluation computes the optimal one by linear programming at the chosen
/// type-I level.
struct AdaptivePolicy {
  /// 0 means "any horizon"; a positive value pins the evaluation length.
  int horizon = 0;
  /// input_map(step, history) -> input for that step (history holds the
  /// output symbols observed so far; step == history.size()).
  std::function<InputChoice(int, const std::vector<int>&)> input_map;
  /// Optional finite-state form enabling merged exact evaluation at large n.
  std::optional<FsmPolicy> fsm;
  /// Optional fixed acceptance test over Y^n (entries in [0,1], flattened
  /// row-major with the last step's symbol varying fastest).
  std::optional<TestOperator> final_test;
};

/// A deterministic adversary: for each step, the vertex used for the next
/// sample as a function of the outcomes observed so far.
struct AdversaryPolicy {
  int horizon = 0;
  /// chooser(step, history) -> vertex index; step == history.size().
  std::function<int(int, const std::vector<int>&)> chooser;
  /// Backing table when produced by best-response search: level k holds one
  /// vertex index per length-k history (mixed-radix rank, last symbol
  /// fastest).  Null for user-supplied policies.
  std::shared_ptr<const std::vector<std::vector<int>>> table;
};

/// Worst-case error pair of an evaluated strategy: alpha is the largest
/// probability of rejecting the null across the null family, beta the
/// largest probability of accepting it across the alternative family.
struct ErrorPair {
  double alpha = 0.0;
  double beta = 0.0;
  /// Human-readable description of the maximising members / adversaries.
  std::string worst_case_witness;
};

/// Point estimates with confidence intervals from sampled strategy
/// evaluation (used above the exact-enumeration cap).
struct MonteCarloReport {
  ErrorPair errors;
  double alpha_ci_low = 0.0;
  double alpha_ci_high = 0.0;
  double beta_ci_low = 0.0;
  double beta_ci_high = 0.0;
  long samples = 0;
  /// -(1/n) log2 of the beta point estimate.
  ExtReal exponent = ExtReal::finite(0.0);
};

/// True iff the sequence of channels is admissible for the family: Iid —
/// every element equals one common vertex; ArbitrarilyVarying — every
/// element equals some vertex; SlightlyVarying — every element equals some
/// vertex and every pair of elements is within epsilon in total variation
/// (maximised over inputs).  Channel equality and distances are evaluated
/// entrywise with a 1e-9 tolerance.  Throws DimensionMismatchError when the
/// sequence shape does not match the base set.
bool family_member_check(const HypothesisFamily& fam,
                         const std::vector<ClassicalChannel>& seq);
bool family_member_check(const HypothesisFamily& fam,
                         const std::vector<QuantumChannel>& seq);

/// Exact best adaptive adversary against a fixed acceptance region: the
/// adversary picks, per step and outcome history, the vertex distribution
/// maximising the probability that the final outcome string lands in the
/// region.  Computed by backward induction over the full history tree;
/// requires |Omega|^n <= 4096.  Returns the optimal value and the argmax
/// policy (with its full decision table attached).
std::pair<double, AdversaryPolicy> adversary_best_response(
    const TestOperator& region, const std::vector<ProbVector>& q_vertices,
    int n);

/// A universal acceptance test for adversarially varying null hypotheses:
/// accepts exactly the outcome strings whose empirical type lies within a
/// KL ball around the convex hull of the null vertex set, with the radius
/// chosen as the smallest value whose exact worst-case type-I error (over
/// all adaptive null adversaries) is at most eps.  The construction depends
/// only on the null set; the alternative vertices are validated for shape
/// and otherwise unused.  Requires |Omega|^n <= 4096.
TestOperator universal_adversarial_test(
    const std::vector<ProbVector>& p_vertices,
    const std::vector<ProbVector>& q_vertices, int n, double eps);

/// Evaluates the parallel strategy that feeds copy i the input distribution
/// inputs[i % inputs.size()] (point masses are treated as plain symbols;
/// genuinely randomised inputs keep the drawn symbol in the outcome).  The
/// acceptance test is the optimal level-eps one for the induced n-copy
/// output hypothesis sets; for arbitrarily varying families the worst case
/// over adaptive adversaries is made exact by alternating the test LP with
/// best-response separation.  Returns the worst-case error pair and
/// -(1/n) log2 beta.  Iid families with a finite-state-representable input
/// schedule are evaluated by merged exact induction at any n; otherwise
/// |Y|^n <= 4096 is required.
std::pair<ErrorPair, ExtReal> evaluate_parallel_strategy(
    const HypothesisFamily& s, const HypothesisFamily& t,
    const std::vector<ProbVector>& inputs, int n, double eps);

/// Evaluates one adaptive strategy exactly.  For iid families the history
/// distribution of every vertex is built by forward induction; for
/// arbitrarily varying families the worst case over adaptive adversaries is
/// exact via backward induction against the (possibly LP-optimised) test.
/// The final test is policy.final_test when present, otherwise the optimal
/// level-eps test computed by linear programming.  Policies carrying a
/// finite-state form (with no fixed final test, iid families) are evaluated
/// by merging histories with equal memory state and per-vertex likelihoods,
/// which is exact and extends far beyond the dense |Y|^n <= 4096 cap.
ErrorPair evaluate_adaptive_strategy(const AdaptivePolicy& policy,
                                     const HypothesisFamily& s,
                                     const HypothesisFamily& t, int n,
                                     double eps = 0.05);

/// Sampled evaluation for finite-state policies on iid families: the
/// optimal test is still built exactly on the merged history groups, but
/// alpha and beta are estimated from `samples` independent simulated runs
/// per vertex (acceptance drawn as a Bernoulli trial), with 95% Wilson
/// score confidence intervals.  Run r of a given vertex uses the RNG stream
/// derived from (seed, vertex tag, r), so results are independent of
/// evaluation order.
MonteCarloReport evaluate_adaptive_monte_carlo(
    const AdaptivePolicy& policy, const HypothesisFamily& s,
    const HypothesisFamily& t, int n, double eps = 0.05,
    long samples = 1000000, std::uint64_t seed = 0);

/// Least-squares fit of -log2 beta against n over the window
/// [n_min, n_max].  Requires at least 3 points in the window and every beta
/// in (0, 1].  Returns (slope, r_squared); a perfectly constant sequence
/// fits slope 0 with r_squared 1.
std::pair<double, double> estimate_exponent(
    const std::map<int, double>& beta_by_n, int n_min, int n_max);

/// The built-in two-channel-pair discrimination instance with its canonical
/// adaptive strategy.  The channels have input alphabet {0,1} and output
/// alphabet {0,1,2,3} (two bits, first bit = symbol/2, second bit =
/// symbol%2); the second output bit reveals which pair member is in the box,
/// and the canonical strategy feeds that bit back as every later input.
struct Example12 {
  HypothesisSet s;
  HypothesisSet t;
  AdaptivePolicy canonical;
};
Example12 example12();

}  // namespace chdisc
