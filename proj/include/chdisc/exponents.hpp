#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "chdisc/channel_div.hpp"
#include "chdisc/core.hpp"
#include "chdisc/divergences.hpp"

namespace chdisc {

/// A composite hypothesis: a nonempty finite set of channels of one kind
/// (all classical or all quantum, identical shapes), optionally interpreted
/// as its convex hull.
struct HypothesisSet {
  static HypothesisSet classical_set(std::vector<ClassicalChannel> vertices, bool take_hull);
  static HypothesisSet quantum_set(std::vector<QuantumChannel> vertices, bool take_hull);

  bool is_classical() const { return !classical.empty(); }
  int size() const {
    return static_cast<int>(is_classical() ? classical.size() : quantum.size());
  }

  std::vector<ClassicalChannel> classical;
  std::vector<QuantumChannel> quantum;
  bool take_hull = false;
};

/// Result of an error-exponent computation.
///
/// `value` is the solver's headline number; `lower`/`upper` bracket the true
/// quantity (they coincide with `value` for exact solvers).  Certificates:
/// `input_certificate` is a distribution over input symbols (the diagonal
/// input weights for the finite-set LP, the final adversarial input for the
/// convex minimax); `s_hull_weights`/`t_hull_weights` are the minimizing
/// mixture weights over the two vertex sets; `active_pairs` lists vertex
/// pairs whose constraints are tight at the optimum.  `duality_gap` is
/// primal minus certified dual where a dual is computed (0 otherwise), and
/// `capped` records that an infinity-cap substitution was active at the
/// optimum, so `value` is a cap artifact rather than a certified number.
struct ExponentReport {
  ExtReal value;
  ExtReal lower;
  ExtReal upper;
  std::vector<double> input_certificate;
  std::vector<double> s_hull_weights;
  std::vector<double> t_hull_weights;
  std::vector<std::pair<int, int>> active_pairs;
  double duality_gap = 0.0;
  bool capped = false;
};

/// Upper bound on every discrimination exponent (including adaptive and
/// adversarial ones): the smallest channel divergence between the two sets.
/// Classical sets are handled exactly — minimum over vertex pairs, or over
/// mixtures via minimize_convex_on_simplices when a hull flag is set (the
/// objective is jointly convex, so hull minima are genuine).  Quantum sets
/// return the bracket from regularized_bracket minimized over vertex pairs.
ExponentReport worst_case_iid_exponent(const HypothesisSet& s, const HypothesisSet& t,
                                       int restarts = 32, std::uint64_t seed = 0);

/// Exact Stein exponent for parallel strategies against two finite sets of
/// classical channels.  Solves the linear program
///   max t  s.t.  sum_x q_x KL(E_i(.|x) || F_j(.|x)) >= t for every pair,
///                q a distribution over inputs,
/// whose optimal q describes the best diagonal (classically correlated)
/// input.  Infinite KL entries are replaced by the cap 1e6 and the solve is
/// repeated at 10x the cap; `capped` is set when a capped entry sits in an
/// active constraint or the two solves disagree beyond 1e-6 relative.
ExponentReport parallel_exponent_finite_classical(const HypothesisSet& s,
                                                  const HypothesisSet& t);

/// Stein exponent for convex (hull-flagged) classical sets:
///   min over mixtures (E, F) of max over inputs x of KL(E(.|x) || F(.|x)).
/// The primal minimizes the jointly convex objective over the product of
/// hull simplices; a dual exchange loop alternates a linear program over
/// input distributions against the active mixture pairs with a best-response
/// hull minimization, certifying the minimax value from below.  The report
/// carries primal (`value`, `upper`), certified dual (`lower`), the final
/// input distribution, and `duality_gap` = primal - dual.
ExponentReport convex_classical_exponent(const HypothesisSet& s, const HypothesisSet& t,
                                         int restarts = 32, std::uint64_t seed = 0);

/// Exact finite-n composite hypothesis-testing exponent: over tests M with
/// type-I error at most eps against every member of s_n, minimize the worst
/// acceptance probability under t_n; returns -log2 of that minimum and the
/// optimal test.  This is the brute-force oracle for validating exponent
/// formulas at small n.  Alphabet size is capped at 4096.
std::pair<ExtReal, TestOperator> composite_test_exponent_exact(
    const std::vector<ProbVector>& s_n, const std::vector<ProbVector>& t_n, double eps);

/// Finite-level bracket on the regularized hull exponent: the channel
/// divergence minimized over the convex hulls of the n-fold tensor products
/// of the vertices, divided by n, for n in {1, 2}.  Classical sets are
/// computed exactly (deterministic inputs suffice); quantum sets produce a
/// bracket whose lower end uses pure-state ascent and whose upper end is the
/// min over product-vertex pairs of the channel max-relative entropy.
/// Hull flags are respected; n > 2 is refused.
ExponentReport level_n_hull_bracket(const HypothesisSet& s, const HypothesisSet& t, int n,
                                    int restarts = 32, std::uint64_t seed = 0);

}  // namespace chdisc
