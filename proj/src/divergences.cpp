#include "chdisc/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "chdisc/errors.hpp"
#include "chdisc/rng.hpp"

namespace chdisc {

namespace {

constexpr double kMassThreshold = 1e-12;  // p/q mass treated as zero in KL

double xlog2x(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

}  // namespace

double binary_entropy(double eps) {
  if (eps < 0.0 || eps > 1.0) {
    throw SolverPreconditionError("binary_entropy: argument outside [0, 1]");
  }
  return -xlog2x(eps) - xlog2x(1.0 - eps);
}

ExtReal kl_divergence(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size()) {
    throw DimensionMismatchError("kl_divergence: alphabet size mismatch");
  }
  double sum = 0.0;
  for (int x = 0; x < p.size(); ++x) {
    if (p[x] <= kMassThreshold) continue;
    if (q[x] <= kMassThreshold) return ExtReal::infinity();
    sum += p[x] * std::log2(p[x] / q[x]);
  }
  return ExtReal::finite(sum);
}

ExtReal quantum_relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) {
    throw DimensionMismatchError("quantum_relative_entropy: dimension mismatch");
  }
  const EigResult es = hermitian_eig(sigma.matrix());
  const double sigma_max = es.values.cwiseAbs().maxCoeff();
  const double support_thr = tol::kSupport * std::max(sigma_max, 1e-300);

  double leak = 0.0;
  double cross = 0.0;  // -Tr(rho log2 sigma) over the support of sigma
  for (int j = 0; j < sigma.dim(); ++j) {
    const double mu = es.values(j);
    const double w = std::max(
        0.0, (es.vectors.col(j).adjoint() * rho.matrix() * es.vectors.col(j))(0, 0).real());
    if (mu <= support_thr) {
      leak += w;
    } else {
      cross -= w * std::log2(mu);
    }
  }
  if (leak > tol::kKernelLeak) return ExtReal::infinity();

  const EigResult er = hermitian_eig(rho.matrix());
  double ent = 0.0;  // Tr(rho log2 rho)
  for (int i = 0; i < rho.dim(); ++i) ent += xlog2x(std::max(0.0, er.values(i)));
  return ExtReal::finite(ent + cross);
}

ExtReal dmax(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) {
    throw DimensionMismatchError("dmax: dimension mismatch");
  }
  const EigResult es = hermitian_eig(sigma.matrix());
  const double sigma_max = es.values.cwiseAbs().maxCoeff();
  const double support_thr = tol::kSupport * std::max(sigma_max, 1e-300);

  std::vector<int> supp;
  double leak = 0.0;
  for (int j = 0; j < sigma.dim(); ++j) {
    if (es.values(j) > support_thr) {
      supp.push_back(j);
    } else {
      leak += std::max(
          0.0, (es.vectors.col(j).adjoint() * rho.matrix() * es.vectors.col(j))(0, 0).real());
    }
  }
  if (leak > tol::kKernelLeak) return ExtReal::infinity();
  if (supp.empty()) return ExtReal::infinity();

  const int r = static_cast<int>(supp.size());
  Matrix v(sigma.dim(), r);
  RealVector inv_sqrt(r);
  for (int k = 0; k < r; ++k) {
    v.col(k) = es.vectors.col(supp[k]);
    inv_sqrt(k) = 1.0 / std::sqrt(es.values(supp[k]));
  }
  const Matrix compressed = inv_sqrt.asDiagonal() * (v.adjoint() * rho.matrix() * v).eval() *
                            inv_sqrt.asDiagonal();
  const EigResult ec = hermitian_eig(compressed);
  const double lead = std::max(ec.values.maxCoeff(), 1e-300);
  return ExtReal::finite(std::log2(lead));
}

// --- classical hypothesis-testing relative entropy --------------------------

DhResult dh_classical(const ProbVector& p, const ProbVector& q, double eps) {
  if (p.size() != q.size()) {
    throw DimensionMismatchError("dh_classical: alphabet size mismatch");
  }
  if (eps < 0.0 || eps >= 1.0) {
    throw SolverPreconditionError("dh_classical: eps must lie in [0, 1)");
  }
  const int d = p.size();

  // Order symbols by likelihood ratio p/q, largest first; q = 0 symbols with
  // positive p-mass come first (infinite ratio); ties resolve by ascending
  // index.  The achieved type-II error does not depend on the tie order.
  std::vector<int> order;
  for (int x = 0; x < d; ++x) {
    if (p[x] > kMassThreshold) order.push_back(x);
  }
  auto ratio = [&](int x) {
    return q[x] <= kMassThreshold ? std::numeric_limits<double>::infinity() : p[x] / q[x];
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double ra = ratio(a), rb = ratio(b);
    if (ra != rb) return ra > rb;
    return a < b;
  });

  const double target = 1.0 - eps;
  RealVector m = RealVector::Zero(d);
  double cum_p = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double threshold = order.empty() ? 0.0 : ratio(order.front());
  for (int x : order) {
    if (cum_p + p[x] <= target + 1e-15) {
      m(x) = 1.0;
      cum_p += p[x];
      beta += q[x];
      threshold = ratio(x);
      if (cum_p >= target - 1e-15) break;
    } else {
      gamma = (target - cum_p) / p[x];
      m(x) = gamma;
      beta += gamma * q[x];
      cum_p = target;
      threshold = ratio(x);
      break;
    }
  }

  NpTest test{threshold, gamma, TestOperator(m), 1.0 - cum_p, beta};
  if (beta <= 0.0) {
    return DhResult{ExtReal::infinity(), std::move(test)};
  }
  return DhResult{ExtReal::finite(-std::log2(beta)), std::move(test)};
}

// --- quantum hypothesis-testing relative entropy ----------------------------

namespace {

/// Breakpoints of the spectrum of rho - t sigma: the finite generalized
/// eigenvalues of the pencil (rho, sigma).  Computed by deflating the common
/// kernel and mapping eigenvalues mu of
/// (rho+sigma)^{-1/2} rho (rho+sigma)^{-1/2} through t = mu / (1 - mu);
/// mu ~ 1 corresponds to directions where sigma vanishes (no finite
/// crossing).
std::vector<double> pencil_breakpoints(const Matrix& rho, const Matrix& sigma) {
  const Eigen::Index d = rho.rows();
  const EigResult eb = hermitian_eig(rho + sigma);
  const double lead = eb.values.cwiseAbs().maxCoeff();
  const double thr = tol::kSupport * std::max(lead, 1e-300);

  std::vector<int> keep;
  for (int j = 0; j < d; ++j) {
    if (eb.values(j) > thr) keep.push_back(j);
  }
  if (keep.empty()) return {};

  const int r = static_cast<int>(keep.size());
  Matrix v(d, r);
  RealVector inv_sqrt(r);
  for (int k = 0; k < r; ++k) {
    v.col(k) = eb.vectors.col(keep[k]);
    inv_sqrt(k) = 1.0 / std::sqrt(eb.values(keep[k]));
  }
  const Matrix c = inv_sqrt.asDiagonal() * (v.adjoint() * rho * v).eval() *
                   inv_sqrt.asDiagonal();
  const EigResult ec = hermitian_eig(c);

  std::vector<double> ts;
  for (int k = 0; k < r; ++k) {
    const double mu = std::clamp(ec.values(k), 0.0, 1.0);
    if (mu < 1.0 - 1e-12) {
      ts.push_back(mu / (1.0 - mu));
    }
  }
  std::sort(ts.begin(), ts.end());
  // Deduplicate nearly identical crossings.
  std::vector<double> out;
  for (double t : ts) {
    if (out.empty() || t - out.back() > 1e-12 * (1.0 + std::abs(t))) out.push_back(t);
  }
  return out;
}

struct SplitTraces {
  double a_plus, a_zero, b_plus, b_zero;
  Matrix p_plus, pi_zero;  // projectors
};

/// Eigenspace split of rho - t sigma into strictly positive part and kernel,
/// with the rho/sigma masses of each part.
SplitTraces split_at(const Matrix& rho, const Matrix& sigma, double t) {
  const Matrix h = rho - t * sigma;
  const EigResult eh = hermitian_eig(h);
  const double scale = rho.cwiseAbs().maxCoeff() + std::abs(t) * sigma.cwiseAbs().maxCoeff();
  const double delta = 1e-9 * std::max(scale, 1e-300);
  const Eigen::Index d = rho.rows();
  Matrix p_plus = Matrix::Zero(d, d);
  Matrix pi_zero = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const auto vv = (eh.vectors.col(i) * eh.vectors.col(i).adjoint()).eval();
    if (eh.values(i) > delta) {
      p_plus += vv;
    } else if (eh.values(i) > -delta) {
      pi_zero += vv;
    }
  }
  SplitTraces s;
  s.a_plus = std::max(0.0, (p_plus * rho).trace().real());
  s.a_zero = std::max(0.0, (pi_zero * rho).trace().real());
  s.b_plus = std::max(0.0, (p_plus * sigma).trace().real());
  s.b_zero = std::max(0.0, (pi_zero * sigma).trace().real());
  s.p_plus = std::move(p_plus);
  s.pi_zero = std::move(pi_zero);
  return s;
}

}  // namespace

DhResult dh_quantum(const DensityMatrix& rho, const DensityMatrix& sigma, double eps) {
  if (rho.dim() != sigma.dim()) {
    throw DimensionMismatchError("dh_quantum: dimension mismatch");
  }
  if (eps < 0.0 || eps >= 1.0) {
    throw SolverPreconditionError("dh_quantum: eps must lie in [0, 1)");
  }
  const Matrix& r = rho.matrix();
  const Matrix& s = sigma.matrix();
  const double target = 1.0 - eps;
  const double slack = 1e-10;

  // If the kernel of sigma already carries enough rho-mass, a scaled kernel
  // projector accepts with type-II error exactly zero.
  {
    const EigResult es = hermitian_eig(s);
    const double thr = tol::kSupport * std::max(es.values.cwiseAbs().maxCoeff(), 1e-300);
    Matrix ker = Matrix::Zero(rho.dim(), rho.dim());
    for (int j = 0; j < rho.dim(); ++j) {
      if (es.values(j) <= thr) ker += es.vectors.col(j) * es.vectors.col(j).adjoint();
    }
    const double cov = (ker * r).trace().real();
    if (cov >= target - slack) {
      const double scalec = cov > 0.0 ? std::min(1.0, target / cov) : 0.0;
      NpTest test{std::numeric_limits<double>::infinity(), 0.0,
                  TestOperator(Matrix(scalec * ker)), eps, 0.0};
      return DhResult{ExtReal::infinity(), std::move(test)};
    }
  }

  const std::vector<double> breaks = pencil_breakpoints(r, s);

  double best_beta = std::numeric_limits<double>::infinity();
  double best_t = 0.0, best_gamma = 0.0, best_alpha = 0.0;
  Matrix best_m;

  auto consider = [&](double t) {
    const SplitTraces sp = split_at(r, s, t);
    if (sp.a_plus > target + slack) return;
    if (sp.a_plus + sp.a_zero < target - slack) return;
    const double gamma =
        sp.a_zero > 1e-14 ? std::clamp((target - sp.a_plus) / sp.a_zero, 0.0, 1.0) : 0.0;
    const double beta = sp.b_plus + gamma * sp.b_zero;
    if (beta < best_beta) {
      best_beta = beta;
      best_t = t;
      best_gamma = gamma;
      best_alpha = 1.0 - (sp.a_plus + gamma * sp.a_zero);
      best_m = sp.p_plus + gamma * sp.pi_zero;
    }
  };

  // Breakpoint candidates (gamma interpolates across each kernel jump).
  consider(0.0);
  for (double t : breaks) consider(t);

  // Between breakpoints the positive eigenspace rotates continuously, so the
  // acceptance mass a_plus(t) varies continuously and monotonically; the
  // optimal threshold may sit strictly between crossings.  Locate it by
  // bisection on a_plus(t) = 1 - eps over each bracketing sample interval.
  std::vector<double> samples{0.0};
  for (std::size_t i = 0; i < breaks.size(); ++i) {
    if (i > 0) samples.push_back(0.5 * (breaks[i - 1] + breaks[i]));
    samples.push_back(breaks[i]);
  }
  const double t_hi = breaks.empty() ? 1.0 : 2.0 * breaks.back() + 1.0;
  samples.push_back(t_hi);
  auto coverage = [&](double t) { return split_at(r, s, t).a_plus; };
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    double lo = samples[i], hi = samples[i + 1];
    double clo = coverage(lo), chi = coverage(hi);
    if (!(clo >= target - slack && chi <= target + slack)) continue;
    if (clo - target < slack || target - chi < slack) continue;  // endpoints already handled
    for (int it = 0; it < 80 && hi - lo > 1e-14 * (1.0 + hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (coverage(mid) >= target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    consider(lo);
    consider(hi);
  }

  if (!std::isfinite(best_beta)) {
    // Fall back to the trivial always-accept test; only reachable through
    // degenerate numerics since a_plus(0) = 1 >= 1 - eps.
    best_beta = 1.0;
    best_m = Matrix::Identity(rho.dim(), rho.dim());
    best_alpha = 0.0;
    best_t = 0.0;
    best_gamma = 0.0;
  }

  NpTest test{best_t, best_gamma, TestOperator(std::move(best_m)), best_alpha, best_beta};
  if (best_beta <= 1e-14) {
    return DhResult{ExtReal::infinity(), std::move(test)};
  }
  return DhResult{ExtReal::finite(-std::log2(best_beta)), std::move(test)};
}

// --- measured relative entropy lower bound ----------------------------------

namespace {

double measured_kl_of_basis(const Matrix& u, const Matrix& rho, const Matrix& sigma) {
  const int d = static_cast<int>(u.rows());
  RealVector p(d), q(d);
  for (int i = 0; i < d; ++i) {
    p(i) = std::max(0.0, (u.col(i).adjoint() * rho * u.col(i))(0, 0).real());
    q(i) = std::max(0.0, (u.col(i).adjoint() * sigma * u.col(i))(0, 0).real());
  }
  p /= p.sum();
  q /= q.sum();
  const ExtReal v = kl_divergence(ProbVector(p), ProbVector(q));
  return v.value();
}

Matrix random_unitary(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
  }
  const Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ();
}

Matrix unitary_step(const Matrix& u, double step, std::mt19937_64& rng) {
  const int d = static_cast<int>(u.rows());
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix h(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) h(i, j) = Complex(gauss(rng), gauss(rng));
  }
  h = (0.5 * (h + h.adjoint().eval())).eval();
  h /= std::max(1e-12, h.norm());
  const EigResult eh = hermitian_eig(h);
  Matrix rot = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    rot += std::exp(Complex(0.0, -step * eh.values(i))) * eh.vectors.col(i) *
           eh.vectors.col(i).adjoint();
  }
  return rot * u;
}

}  // namespace

MeasuredLowerResult measured_relative_entropy_lower(const DensityMatrix& rho,
                                                    const DensityMatrix& sigma,
                                                    int restarts, std::uint64_t seed) {
  if (rho.dim() != sigma.dim()) {
    throw DimensionMismatchError("measured_relative_entropy_lower: dimension mismatch");
  }
  const int d = rho.dim();
  const Matrix& r = rho.matrix();
  const Matrix& s = sigma.matrix();

  double best = -std::numeric_limits<double>::infinity();
  Matrix best_u;
  std::vector<Matrix> best_two_outcome;

  auto consider_basis = [&](const Matrix& u) {
    const double v = measured_kl_of_basis(u, r, s);
    if (v > best) {
      best = v;
      best_u = u;
      best_two_outcome.clear();
    }
    return v;
  };

  // Deterministic seeds.  The eigenbasis of rho + pi*sigma simultaneously
  // diagonalizes commuting pairs (any residual degenerate block has both
  // operators proportional to the identity there, so the choice of basis
  // within it does not change the outcome distributions).
  consider_basis(hermitian_eig(r + 3.14159265358979323846 * s).vectors);
  consider_basis(hermitian_eig(r).vectors);
  consider_basis(hermitian_eig(s).vectors);

  // Two-outcome Neyman-Pearson projectors at each pencil breakpoint.
  for (double t : pencil_breakpoints(r, s)) {
    const SplitTraces sp = split_at(r, s, t);
    const double pr = std::clamp(sp.a_plus, 0.0, 1.0);
    const double qr_ = std::clamp(sp.b_plus, 0.0, 1.0);
    const ExtReal v = kl_divergence(ProbVector(std::vector<double>{pr, 1.0 - pr}),
                                    ProbVector(std::vector<double>{qr_, 1.0 - qr_}));
    if (v.value() > best) {
      best = v.value();
      best_two_outcome = {sp.p_plus, Matrix(Matrix::Identity(d, d) - sp.p_plus)};
    }
  }

  // Local ascent over the unitary group from random starts.
  for (int rs = 0; rs < restarts; ++rs) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(rs));
    Matrix u = rs == 0 && best_two_outcome.empty() && best_u.size() > 0
                   ? best_u
                   : random_unitary(d, rng);
    double cur = measured_kl_of_basis(u, r, s);
    double step = 0.3;
    int fails = 0;
    for (int it = 0; it < 300 && step > 1e-5; ++it) {
      const Matrix cand = unitary_step(u, step, rng);
      const double v = measured_kl_of_basis(cand, r, s);
      if (v > cur + 1e-13) {
        u = cand;
        cur = v;
        fails = 0;
      } else if (++fails >= 8) {
        step *= 0.7;
        fails = 0;
      }
    }
    if (cur > best) {
      best = cur;
      best_u = u;
      best_two_outcome.clear();
    }
  }

  std::vector<Matrix> elements;
  if (!best_two_outcome.empty()) {
    elements = best_two_outcome;
  } else {
    for (int i = 0; i < d; ++i) elements.push_back(best_u.col(i) * best_u.col(i).adjoint());
  }
  return MeasuredLowerResult{best, Povm(std::move(elements))};
}

}  // namespace chdisc
