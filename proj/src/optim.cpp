#include "chdisc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "chdisc/errors.hpp"
#include "chdisc/rng.hpp"

namespace chdisc {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kReducedCostTol = 1e-9;
constexpr long kMaxPivots = 200000;

/// Dense simplex tableau.  Columns: n structural, m slacks, a artificials,
/// then the right-hand side.  One basic variable per active row.
struct Tableau {
  Eigen::MatrixXd t;            // m x (cols) constraint rows
  RealVector obj;               // reduced costs, length cols-1
  double value = 0.0;           // current objective value
  std::vector<int> basis;       // basic variable per row
  std::vector<bool> active;     // redundant rows are deactivated
  std::vector<bool> banned;     // columns barred from entering
  int rows = 0;
  int cols = 0;                 // number of variable columns (excl. rhs)

  double rhs(int i) const { return t(i, cols); }

  void pivot(int r, int e) {
    t.row(r) /= t(r, e);
    for (int i = 0; i < rows; ++i) {
      if (i == r || !active[i]) continue;
      const double f = t(i, e);
      if (f != 0.0) t.row(i) -= f * t.row(r);
    }
    const double fo = obj(e);
    if (fo != 0.0) {
      value += fo * t(r, cols);
      obj -= fo * t.row(r).head(cols).transpose();
    }
    basis[r] = e;
  }

  /// Bland's rule: smallest eligible entering column, smallest basic index on
  /// ratio ties.  Returns kOptimal/kUnbounded/kIterationLimit.
  LpStatus run(long& iterations) {
    while (iterations < kMaxPivots) {
      int enter = -1;
      for (int j = 0; j < cols; ++j) {
        if (!banned[j] && obj(j) > kReducedCostTol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return LpStatus::kOptimal;
      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows; ++i) {
        if (!active[i] || t(i, enter) <= kPivotTol) continue;
        const double ratio = rhs(i) / t(i, enter);
        if (ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 && (leave < 0 || basis[i] < basis[leave]))) {
          best_ratio = ratio;
          leave = i;
        }
      }
      if (leave < 0) return LpStatus::kUnbounded;
      pivot(leave, enter);
      ++iterations;
    }
    return LpStatus::kIterationLimit;
  }
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp) {
  const int n = static_cast<int>(lp.objective.size());
  const int m = static_cast<int>(lp.rhs.size());
  if (lp.lhs.rows() != m || lp.lhs.cols() != n) {
    throw DimensionMismatchError("solve_lp: constraint matrix shape mismatch");
  }
  const bool maximize = lp.sense == LinearProgram::Sense::kMaximize;
  RealVector c = maximize ? lp.objective : RealVector(-lp.objective);

  // Count artificials: one per negative right-hand side.
  int num_art = 0;
  for (int i = 0; i < m; ++i) {
    if (lp.rhs(i) < 0.0) ++num_art;
  }

  Tableau tab;
  tab.rows = m;
  tab.cols = n + m + num_art;
  tab.t = Eigen::MatrixXd::Zero(m, tab.cols + 1);
  tab.basis.resize(m);
  tab.active.assign(m, true);
  tab.banned.assign(tab.cols, false);

  int art = 0;
  for (int i = 0; i < m; ++i) {
    if (lp.rhs(i) >= 0.0) {
      tab.t.row(i).head(n) = lp.lhs.row(i);
      tab.t(i, n + i) = 1.0;  // slack
      tab.t(i, tab.cols) = lp.rhs(i);
      tab.basis[i] = n + i;
    } else {
      tab.t.row(i).head(n) = -lp.lhs.row(i);
      tab.t(i, n + i) = -1.0;  // surplus
      tab.t(i, n + m + art) = 1.0;
      tab.t(i, tab.cols) = -lp.rhs(i);
      tab.basis[i] = n + m + art;
      ++art;
    }
  }

  LpResult result;
  result.x = RealVector::Zero(n);

  if (num_art > 0) {
    // Phase 1: maximize -(sum of artificials); feasible iff the optimum is 0.
    tab.obj = RealVector::Zero(tab.cols);
    tab.value = 0.0;
    for (int i = 0; i < m; ++i) {
      if (tab.basis[i] >= n + m) {
        tab.obj += tab.t.row(i).head(tab.cols).transpose();
        tab.value -= tab.t(i, tab.cols);
      }
    }
    for (int j = n + m; j < tab.cols; ++j) tab.obj(j) = 0.0;  // priced out above
    const LpStatus s1 = tab.run(result.iterations);
    if (s1 == LpStatus::kIterationLimit) {
      result.status = s1;
      return result;
    }
    const double scale = 1.0 + lp.rhs.cwiseAbs().maxCoeff();
    if (tab.value < -1e-8 * scale) {
      result.status = LpStatus::kInfeasible;
      return result;
    }
    // Drive remaining basic artificials out; rows that cannot pivot are
    // redundant and get deactivated.
    for (int i = 0; i < m; ++i) {
      if (tab.basis[i] < n + m) continue;
      int piv = -1;
      for (int j = 0; j < n + m; ++j) {
        if (std::abs(tab.t(i, j)) > 1e-9) {
          piv = j;
          break;
        }
      }
      if (piv >= 0) {
        tab.pivot(i, piv);
      } else {
        tab.active[i] = false;
      }
    }
    for (int j = n + m; j < tab.cols; ++j) tab.banned[j] = true;
  }

  // Phase 2 with the real objective, priced out against the current basis.
  tab.obj = RealVector::Zero(tab.cols);
  tab.obj.head(n) = c;
  tab.value = 0.0;
  for (int i = 0; i < m; ++i) {
    if (!tab.active[i]) continue;
    const int b = tab.basis[i];
    const double cb = (b < n) ? c(b) : 0.0;
    if (cb != 0.0) {
      tab.value += cb * tab.t(i, tab.cols);
      tab.obj -= cb * tab.t.row(i).head(tab.cols).transpose();
    }
  }
  for (int j = n + m; j < tab.cols; ++j) tab.banned[j] = true;

  const LpStatus s2 = tab.run(result.iterations);
  result.status = s2;
  if (s2 != LpStatus::kOptimal) return result;

  for (int i = 0; i < m; ++i) {
    if (tab.active[i] && tab.basis[i] < n) result.x(tab.basis[i]) = tab.t(i, tab.cols);
  }
  result.value = maximize ? tab.value : -tab.value;
  return result;
}

// --- convex minimization over products of simplices ------------------------

RealVector project_to_simplex(const RealVector& v) {
  const int n = static_cast<int>(v.size());
  // The projection is invariant under adding a constant to every entry, so
  // shift the maximum to zero and clamp the rest into a window where the
  // threshold recursion below cannot lose precision to cancellation.
  const double shift = v.maxCoeff();
  RealVector w(n);
  for (int i = 0; i < n; ++i) w(i) = std::max(v(i) - shift, -1e6);
  std::vector<double> u(w.data(), w.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0;
  double tau = -1.0;
  for (int k = 0; k < n; ++k) {
    cum += u[k];
    const double cand = (cum - 1.0) / (k + 1);
    if (u[k] - cand > 0.0) tau = cand;
  }
  RealVector out(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    out(i) = std::max(w(i) - tau, 0.0);
    total += out(i);
  }
  if (total <= 0.0) {
    out.setZero();
    int arg = 0;
    v.maxCoeff(&arg);
    out(arg) = 1.0;
    return out;
  }
  return RealVector(out / total);
}

namespace {

RealVector project_blocks(const RealVector& v, const SimplexDomain& dom) {
  RealVector out(v.size());
  int off = 0;
  for (int b : dom.blocks) {
    out.segment(off, b) = project_to_simplex(v.segment(off, b));
    off += b;
  }
  return out;
}

RealVector random_interior_point(const SimplexDomain& dom, std::mt19937_64& rng) {
  std::exponential_distribution<double> exp1(1.0);
  RealVector x(dom.total());
  int off = 0;
  for (int b : dom.blocks) {
    double sum = 0.0;
    for (int i = 0; i < b; ++i) {
      x(off + i) = exp1(rng) + 1e-6;
      sum += x(off + i);
    }
    x.segment(off, b) /= sum;
    off += b;
  }
  return x;
}

RealVector barycenter(const SimplexDomain& dom) {
  RealVector x(dom.total());
  int off = 0;
  for (int b : dom.blocks) {
    x.segment(off, b).setConstant(1.0 / b);
    off += b;
  }
  return x;
}

/// Golden-section minimization of a convex 1-d function on [lo, hi].
double golden_min(const std::function<double(double)>& phi, double lo, double hi,
                  double* arg) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = phi(c), fd = phi(d);
  for (int it = 0; it < 80 && (b - a) > 1e-12 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = phi(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = phi(d);
    }
  }
  const double mid = 0.5 * (a + b);
  const double fm = phi(mid);
  *arg = mid;
  return fm;
}

}  // namespace

ConvexReport minimize_convex_on_simplices(const Objective& f, const Subgradient& g,
                                          const SimplexDomain& domain,
                                          const ConvexOptions& options) {
  if (domain.blocks.empty() || domain.total() <= 0) {
    throw SolverPreconditionError("minimize_convex_on_simplices: empty domain");
  }
  const int dim = domain.total();

  ConvexReport best;
  best.value = std::numeric_limits<double>::infinity();
  best.x = barycenter(domain);
  long total_iter = 0;

  std::vector<RealVector> starts;
  starts.push_back(barycenter(domain));
  for (const auto& p : options.initial_points) {
    if (static_cast<int>(p.size()) == dim) starts.push_back(project_blocks(p, domain));
  }
  for (int r = static_cast<int>(starts.size()); r < options.restarts; ++r) {
    auto rng = make_rng(options.seed, static_cast<std::uint64_t>(r));
    starts.push_back(random_interior_point(domain, rng));
  }

  const int fw_iters = std::max(50, options.max_iter / 3);
  const int sg_iters = std::max(50, options.max_iter / 3);

  for (const auto& start : starts) {
    RealVector x = start;
    double fx = f(x);
    RealVector local_best_x = x;
    double local_best = fx;
    double last_gap = std::numeric_limits<double>::infinity();

    // Frank-Wolfe with the per-block vertex oracle and an exact line search
    // along each toward-vertex direction (a fixed 2/(k+2) schedule leaves a
    // long tail on flat valleys).
    for (int k = 0; k < fw_iters; ++k) {
      if (!std::isfinite(fx)) break;
      const RealVector gr = g(x);
      RealVector s = RealVector::Zero(dim);
      int off = 0;
      double gap = 0.0;
      for (int b : domain.blocks) {
        int arg = 0;
        gr.segment(off, b).minCoeff(&arg);
        s(off + arg) = 1.0;
        gap += gr.segment(off, b).dot(x.segment(off, b)) - gr(off + arg);
        off += b;
      }
      last_gap = gap;
      ++total_iter;
      if (gap <= options.tol) break;
      const RealVector dir = s - x;
      double gamma = 0.0;
      const double fstep = golden_min([&](double t) { return f(x + t * dir); }, 0.0, 1.0, &gamma);
      if (fstep >= fx - 1e-15) break;
      x += gamma * dir;
      fx = fstep;
      if (fx < local_best) {
        local_best = fx;
        local_best_x = x;
      }
    }

    // Projected subgradient with Polyak averaging handles nonsmooth
    // objectives (pointwise maxima) where Frank-Wolfe stalls.
    x = local_best_x;
    RealVector avg = x;
    {
      const double c0 = 0.25 * (1.0 + std::abs(local_best));
      for (int k = 0; k < sg_iters; ++k) {
        // Normalized direction: floored log-ratio subgradients can spike by
        // many orders of magnitude near support boundaries, and a raw step
        // would overshoot the simplex by a factor the projection then has to
        // absorb.
        RealVector gr = g(x);
        const double gn = gr.norm();
        if (gn > 1e-12) gr /= gn;
        x = project_blocks(x - (c0 / std::sqrt(k + 1.0)) * gr, domain);
        avg = (static_cast<double>(k + 1) * avg + x) / static_cast<double>(k + 2);
        ++total_iter;
        if ((k & 31) == 31) {
          const double fa = f(avg);
          if (fa < local_best) {
            local_best = fa;
            local_best_x = avg;
          }
          const double fxx = f(x);
          if (fxx < local_best) {
            local_best = fxx;
            local_best_x = x;
          }
        }
      }
      const double fxx = f(x);
      if (fxx < local_best) {
        local_best = fxx;
        local_best_x = x;
      }
      const double fa = f(avg);
      if (fa < local_best) {
        local_best = fa;
        local_best_x = avg;
      }
    }

    // Pairwise mass-transfer polish: exact line searches between coordinate
    // pairs within each block until stationary.
    x = local_best_x;
    double fcur = local_best;
    for (int sweep = 0; sweep < 40; ++sweep) {
      double improved = 0.0;
      int off = 0;
      for (int b : domain.blocks) {
        for (int i = 0; i < b; ++i) {
          for (int j = i + 1; j < b; ++j) {
            const double lo = -x(off + i), hi = x(off + j);
            if (hi - lo < 1e-14) continue;
            auto phi = [&](double delta) {
              RealVector y = x;
              y(off + i) += delta;
              y(off + j) -= delta;
              return f(y);
            };
            double argd = 0.0;
            const double fm = golden_min(phi, lo, hi, &argd);
            ++total_iter;
            if (fm < fcur - 1e-14) {
              improved += fcur - fm;
              fcur = fm;
              x(off + i) += argd;
              x(off + j) -= argd;
            }
          }
        }
        off += b;
      }
      if (improved <= options.tol * 1e-2) break;
    }
    if (fcur < local_best) {
      local_best = fcur;
      local_best_x = x;
    }

    if (local_best < best.value) {
      best.value = local_best;
      best.x = local_best_x;
      best.frank_wolfe_gap = std::isfinite(last_gap) ? last_gap : 0.0;
    }
  }

  best.iterations = total_iter;
  best.converged = std::isfinite(best.value);
  return best;
}

// --- smooth ascent on the complex unit sphere -------------------------------

SphereReport maximize_on_sphere(const SphereObjective& f, const SphereGradient& grad,
                                int dim, const SphereOptions& options) {
  if (dim <= 0) throw SolverPreconditionError("maximize_on_sphere: bad dimension");

  std::vector<Eigen::VectorXcd> starts;
  for (const auto& p : options.initial_points) {
    if (p.size() == dim && p.norm() > 1e-12) starts.push_back(p.normalized());
  }
  for (int r = static_cast<int>(starts.size()); r < options.restarts; ++r) {
    auto rng = make_rng(options.seed ^ 0x5bd1e995u, static_cast<std::uint64_t>(r));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXcd psi(dim);
    for (int i = 0; i < dim; ++i) psi(i) = Complex(gauss(rng), gauss(rng));
    starts.push_back(psi.normalized());
  }

  SphereReport best;
  best.value = -std::numeric_limits<double>::infinity();
  best.psi = starts.front();
  long total_iter = 0;

  for (const auto& start : starts) {
    Eigen::VectorXcd psi = start;
    double fv = f(psi);
    if (std::isinf(fv) && fv > 0) {
      best.value = fv;
      best.psi = psi;
      best.iterations = total_iter;
      best.converged = true;
      return best;
    }
    double eta = 0.5;
    int stall = 0;
    for (int it = 0; it < options.max_iter && stall < 60 && eta > 1e-12; ++it) {
      const Eigen::VectorXcd gr = grad(psi);
      Eigen::VectorXcd cand = psi + eta * gr;
      const double nrm = cand.norm();
      if (nrm < 1e-12) {
        eta *= 0.5;
        ++stall;
        continue;
      }
      cand /= nrm;
      const double fc = f(cand);
      ++total_iter;
      if (std::isinf(fc) && fc > 0) {
        best.value = fc;
        best.psi = cand;
        best.iterations = total_iter;
        best.converged = true;
        return best;
      }
      if (fc > fv + 1e-14) {
        psi = cand;
        fv = fc;
        eta = std::min(eta * 1.5, 8.0);
        stall = 0;
      } else {
        eta *= 0.5;
        ++stall;
      }
    }
    if (fv > best.value) {
      best.value = fv;
      best.psi = psi;
      best.converged = true;
    }
  }
  best.iterations = total_iter;
  return best;
}

}  // namespace chdisc
