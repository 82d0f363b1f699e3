#pragma once

#include <cstdint>
#include <optional>

#include "chdisc/core.hpp"

namespace chdisc {

/// A nonnegative extended real: either a finite value or +infinity.  Keeps
/// the infinity case explicit instead of threading IEEE infinities through
/// arithmetic.
class ExtReal {
 public:
  ExtReal() : ExtReal(0.0, false) {}
  static ExtReal finite(double v) { return ExtReal(v, false); }
  static ExtReal infinity() { return ExtReal(0.0, true); }

  bool is_infinite() const { return inf_; }
  /// Finite value; +inf as a double when infinite.
  double value() const {
    return inf_ ? std::numeric_limits<double>::infinity() : v_;
  }

  friend bool operator==(const ExtReal& a, const ExtReal& b) {
    return a.inf_ == b.inf_ && (a.inf_ || a.v_ == b.v_);
  }

 private:
  ExtReal(double v, bool inf) : v_(v), inf_(inf) {}
  double v_;
  bool inf_;
};

/// Binary entropy h(e) = -e log2 e - (1-e) log2(1-e), with h(0) = h(1) = 0.
double binary_entropy(double eps);

/// Kullback-Leibler divergence in bits.  +infinity exactly when some symbol
/// has p-mass above 1e-12 but q-mass at or below 1e-12; terms with
/// p(x) <= 1e-12 contribute zero (0 log 0 = 0).
ExtReal kl_divergence(const ProbVector& p, const ProbVector& q);

/// Umegaki relative entropy D(rho||sigma) in bits via spectral
/// decomposition.  The support of sigma is detected at tol::kSupport relative
/// to its largest eigenvalue; rho-mass on the complement beyond
/// tol::kKernelLeak yields +infinity, smaller leakage is projected away.
ExtReal quantum_relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma);

/// Max-relative entropy: log2 of the largest eigenvalue of
/// sigma^{-1/2} rho sigma^{-1/2} on the support of sigma; +infinity when rho
/// leaks outside that support beyond tol::kKernelLeak.
ExtReal dmax(const DensityMatrix& rho, const DensityMatrix& sigma);

/// An optimal Neyman-Pearson test achieving type-I error exactly eps.
struct NpTest {
  double threshold = 0.0;  ///< likelihood ratio at the boundary (+inf possible)
  double gamma = 0.0;      ///< acceptance probability on the boundary part
  TestOperator test;       ///< the achieving test
  double achieved_alpha = 0.0;
  double achieved_beta = 0.0;
};

struct DhResult {
  ExtReal value;  ///< -log2 of the optimal type-II error
  NpTest test;
};

/// Hypothesis-testing relative entropy, classical case, by exact
/// likelihood-ratio ordering with a fractionally included boundary symbol.
/// Requires 0 <= eps < 1.
DhResult dh_classical(const ProbVector& p, const ProbVector& q, double eps);

/// Hypothesis-testing relative entropy, quantum case.  Scans tests
/// M(t, gamma) = P_+(t) + gamma Pi_0(t) built from the eigenspaces of
/// rho - t sigma over the finite breakpoint set of generalized eigenvalues,
/// choosing gamma so that Tr(M rho) = 1 - eps exactly.
DhResult dh_quantum(const DensityMatrix& rho, const DensityMatrix& sigma, double eps);

struct MeasuredLowerResult {
  double value = 0.0;  ///< certified achievable lower bound (may be +inf)
  Povm povm;           ///< measurement achieving it
};

/// Certified lower bound on the measured relative entropy: the best KL
/// divergence of measurement outcome distributions over a candidate family of
/// rank-one projective measurements (joint-eigenbasis seeds plus local ascent
/// over unitaries) and two-outcome Neyman-Pearson projectors.  Always a true
/// lower bound of the measured and hence the Umegaki relative entropy.
MeasuredLowerResult measured_relative_entropy_lower(const DensityMatrix& rho,
                                                    const DensityMatrix& sigma,
                                                    int restarts = 32,
                                                    std::uint64_t seed = 0);

}  // namespace chdisc
