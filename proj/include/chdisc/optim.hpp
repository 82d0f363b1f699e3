#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

#include "chdisc/core.hpp"

namespace chdisc {

// --- linear programming ---------------------------------------------------

/// A dense linear program: optimize objective . x subject to lhs x <= rhs
/// and x >= 0.  Equality constraints are encoded as two opposite
/// inequalities by the caller.
struct LinearProgram {
  enum class Sense { kMaximize, kMinimize };
  Sense sense = Sense::kMaximize;
  RealVector objective;
  Eigen::MatrixXd lhs;
  RealVector rhs;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

struct LpResult {
  LpStatus status = LpStatus::kIterationLimit;
  double value = 0.0;
  RealVector x;
  long iterations = 0;
};

/// Two-phase dense tableau simplex with Bland's anti-cycling pivot rule.
/// Deterministic; suited to the small/medium programs this library builds
/// (up to a few thousand variables).
LpResult solve_lp(const LinearProgram& lp);

// --- convex minimization over products of simplices -----------------------

/// Domain: concatenation of probability simplices with the given block sizes.
struct SimplexDomain {
  std::vector<int> blocks;
  int total() const {
    int t = 0;
    for (int b : blocks) t += b;
    return t;
  }
};

using Objective = std::function<double(const RealVector&)>;
using Subgradient = std::function<RealVector(const RealVector&)>;

struct ConvexOptions {
  int restarts = 32;
  int max_iter = 10000;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  std::vector<RealVector> initial_points;  ///< extra deterministic starts
};

struct ConvexReport {
  double value = 0.0;
  RealVector x;
  long iterations = 0;
  double frank_wolfe_gap = 0.0;  ///< last certified gap (0 when not certified)
  bool converged = false;
};

/// Minimizes a convex objective over a product of simplices.  Runs
/// Frank-Wolfe (step 2/(k+2), duality gap tracked), falls back to projected
/// subgradient steps c/sqrt(k) with Polyak averaging for nonsmooth
/// objectives, and finishes with a pairwise mass-transfer line-search polish.
/// The objective may return +infinity outside its effective domain; starts
/// are kept in the relative interior.
ConvexReport minimize_convex_on_simplices(const Objective& f, const Subgradient& g,
                                          const SimplexDomain& domain,
                                          const ConvexOptions& options = {});

/// Euclidean projection onto the probability simplex.
RealVector project_to_simplex(const RealVector& v);

// --- smooth ascent on the complex unit sphere ------------------------------

using SphereObjective = std::function<double(const Eigen::VectorXcd&)>;
/// Gradient convention: the callback returns df/d(conj psi); the ascent
/// update is psi <- normalize(psi + eta * grad).
using SphereGradient = std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>;

struct SphereOptions {
  int restarts = 32;
  int max_iter = 10000;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  std::vector<Eigen::VectorXcd> initial_points;  ///< extra deterministic starts
};

struct SphereReport {
  double value = 0.0;
  Eigen::VectorXcd psi;
  long iterations = 0;
  bool converged = false;
};

/// Maximizes a smooth objective over unit vectors in C^dim by projected
/// gradient ascent with backtracking line search and random restarts.
/// An objective value of +infinity at any iterate stops the search and is
/// reported as the value together with the iterate that witnessed it.
SphereReport maximize_on_sphere(const SphereObjective& f, const SphereGradient& grad,
                                int dim, const SphereOptions& options = {});

}  // namespace chdisc
