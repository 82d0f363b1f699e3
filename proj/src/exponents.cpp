#include "chdisc/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "chdisc/errors.hpp"
#include "chdisc/optim.hpp"
#include "chdisc/rng.hpp"

namespace chdisc {

namespace {

constexpr double kLn2 = 0.693147180559945309417232121458;
constexpr double kInfCap = 1e6;       // substitute for infinite divergence entries
constexpr double kMassEps = 1e-15;    // mass below this contributes nothing
constexpr double kValueFloor = 1e-300;
constexpr double kGradFloor = 1e-18;   // milder floor inside log-ratio gradients
constexpr double kMassThresholdNu = 1e-12;  // input weights below this are inactive

void check_same_shape_classical(const std::vector<ClassicalChannel>& a,
                                const std::vector<ClassicalChannel>& b,
                                const char* where) {
  if (a.front().input_size() != b.front().input_size() ||
      a.front().output_size() != b.front().output_size()) {
    throw DimensionMismatchError(std::string(where) + ": channel shapes differ between sets");
  }
}

// ---------------------------------------------------------------------------
// Convex machinery for classical hull problems.  Points live on a product of
// two simplices: weights w over the first vertex set and v over the second.
// The working objective uses floored logarithms so the optimizer sees finite
// values with informative gradients near support boundaries; final reported
// numbers are always re-evaluated with exact extended-real semantics.
// ---------------------------------------------------------------------------

struct HullPairProblem {
  const std::vector<ClassicalChannel>* sv;
  const std::vector<ClassicalChannel>* tv;
  RealVector nu;  // size 0: maximize over inputs; otherwise fixed input weights

  int ks() const { return static_cast<int>(sv->size()); }
  int kt() const { return static_cast<int>(tv->size()); }
  int inputs() const { return sv->front().input_size(); }
  int outputs() const { return sv->front().output_size(); }

  void mixed_rows(const RealVector& x, int xi, RealVector* p, RealVector* q) const {
    *p = RealVector::Zero(outputs());
    *q = RealVector::Zero(outputs());
    for (int i = 0; i < ks(); ++i) p->noalias() += x(i) * (*sv)[i].row(xi).entries();
    for (int j = 0; j < kt(); ++j) q->noalias() += x(ks() + j) * (*tv)[j].row(xi).entries();
  }

  // Floored per-input divergence; optionally accumulates the gradient with
  // weight `scale` into `grad`.
  double per_input(const RealVector& x, int xi, double scale, RealVector* grad) const {
    RealVector p, q;
    mixed_rows(x, xi, &p, &q);
    double val = 0.0;
    for (int y = 0; y < outputs(); ++y) {
      if (p(y) > kMassEps) {
        val += p(y) * (std::log2(std::max(p(y), kValueFloor)) -
                       std::log2(std::max(q(y), kValueFloor)));
      }
      if (grad != nullptr) {
        const double pf = std::max(p(y), kGradFloor);
        const double qf = std::max(q(y), kGradFloor);
        const double lr = std::log2(pf) - std::log2(qf);
        for (int i = 0; i < ks(); ++i) {
          (*grad)(i) += scale * (*sv)[i].prob(y, xi) * (lr + 1.0 / kLn2);
        }
        const double qd = -p(y) / (qf * kLn2);
        for (int j = 0; j < kt(); ++j) {
          (*grad)(ks() + j) += scale * (*tv)[j].prob(y, xi) * qd;
        }
      }
    }
    return std::max(val, 0.0);
  }

  double value(const RealVector& x) const {
    if (nu.size() > 0) {
      double v = 0.0;
      for (int xi = 0; xi < inputs(); ++xi) {
        if (nu(xi) > kMassThresholdNu) v += nu(xi) * per_input(x, xi, 0.0, nullptr);
      }
      return v;
    }
    double v = 0.0;
    for (int xi = 0; xi < inputs(); ++xi) v = std::max(v, per_input(x, xi, 0.0, nullptr));
    return v;
  }

  RealVector subgrad(const RealVector& x) const {
    RealVector g = RealVector::Zero(ks() + kt());
    if (nu.size() > 0) {
      for (int xi = 0; xi < inputs(); ++xi) {
        if (nu(xi) > kMassThresholdNu) per_input(x, xi, nu(xi), &g);
      }
      return g;
    }
    int best = 0;
    double bv = -1.0;
    for (int xi = 0; xi < inputs(); ++xi) {
      double v = per_input(x, xi, 0.0, nullptr);
      if (v > bv) {
        bv = v;
        best = xi;
      }
    }
    per_input(x, best, 1.0, &g);
    return g;
  }

  // Frank-Wolfe optimality gap at x: an upper bound on value(x) - min value.
  double fw_gap(const RealVector& x) const {
    RealVector g = subgrad(x);
    double gap = 0.0;
    int off = 0;
    for (int block : {ks(), kt()}) {
      double dot = 0.0, mn = std::numeric_limits<double>::infinity();
      for (int i = 0; i < block; ++i) {
        dot += g(off + i) * x(off + i);
        mn = std::min(mn, g(off + i));
      }
      gap += dot - mn;
      off += block;
    }
    return std::max(gap, 0.0);
  }

  // Exact extended-real evaluation at x (mixtures renormalized to absorb
  // optimizer dust before the strict ProbVector constructor sees them).
  ExtReal exact(const RealVector& x) const {
    double acc = 0.0;
    for (int xi = 0; xi < inputs(); ++xi) {
      RealVector p, q;
      mixed_rows(x, xi, &p, &q);
      ProbVector pp(RealVector(p.cwiseMax(0.0) / std::max(p.cwiseMax(0.0).sum(), 1e-300)));
      ProbVector qq(RealVector(q.cwiseMax(0.0) / std::max(q.cwiseMax(0.0).sum(), 1e-300)));
      ExtReal d = kl_divergence(pp, qq);
      if (nu.size() > 0) {
        if (nu(xi) > kMassThresholdNu) {
          if (d.is_infinite()) return ExtReal::infinity();
          acc += nu(xi) * d.value();
        }
      } else {
        if (d.is_infinite()) return ExtReal::infinity();
        acc = std::max(acc, d.value());
      }
    }
    return ExtReal::finite(acc);
  }
};

struct HullMinOutcome {
  RealVector w, v;     // weights over the full vertex sets
  ExtReal exact = ExtReal::finite(0.0);
  double working = 0.0;  // floored objective at the optimum
  double fw_gap = 0.0;   // certified optimality gap of the working objective
};

// Cutting-plane polish (Kelley's method) seeded with the iterate found by the
// first-order solve.  Each round solves a small LP over the collected
// linearizations, evaluates the true objective at the LP argmin, and stops
// once the model gap drops below `target`.  The incumbent only ever improves,
// so the polish can tighten the first-order result but never degrade it.
void kelley_refine(const HullPairProblem& prob, const SimplexDomain& domain, RealVector* x,
                   double* fx, int max_cuts, double target) {
  const int dim = domain.total();
  struct Cut {
    double offset;  // g . x_k - f_k
    RealVector g;
  };
  std::vector<Cut> cuts;
  auto add_cut = [&](const RealVector& pt) {
    const double f = prob.value(pt);
    RealVector g = prob.subgrad(pt);
    cuts.push_back({g.dot(pt) - f, std::move(g)});
    return f;
  };
  RealVector best = *x;
  double best_f = add_cut(*x);
  for (int round = 0; round < max_cuts; ++round) {
    LinearProgram lp;
    lp.sense = LinearProgram::Sense::kMinimize;
    const int rows_n = static_cast<int>(cuts.size());
    const int eq_rows = 2 * static_cast<int>(domain.blocks.size());
    lp.objective = RealVector::Zero(dim + 1);
    lp.objective(dim) = 1.0;
    lp.lhs = Eigen::MatrixXd::Zero(rows_n + eq_rows, dim + 1);
    lp.rhs = RealVector::Zero(rows_n + eq_rows);
    for (int r = 0; r < rows_n; ++r) {
      for (int i = 0; i < dim; ++i) lp.lhs(r, i) = cuts[r].g(i);
      lp.lhs(r, dim) = -1.0;
      lp.rhs(r) = cuts[r].offset;
    }
    int off = 0, row = rows_n;
    for (int block : domain.blocks) {
      for (int i = 0; i < block; ++i) {
        lp.lhs(row, off + i) = 1.0;
        lp.lhs(row + 1, off + i) = -1.0;
      }
      lp.rhs(row) = 1.0;
      lp.rhs(row + 1) = -1.0;
      off += block;
      row += 2;
    }
    LpResult sol = solve_lp(lp);
    if (sol.status != LpStatus::kOptimal) break;
    const double model = sol.x(dim);  // lower bound on the cut model's minimum
    RealVector cand = sol.x.head(dim).cwiseMax(0.0);
    off = 0;
    for (int block : domain.blocks) {
      const double mass = cand.segment(off, block).sum();
      if (mass > 0.0) cand.segment(off, block) /= mass;
      off += block;
    }
    const double f = add_cut(cand);
    if (f < best_f) {
      best_f = f;
      best = cand;
    }
    if (best_f - model <= target) break;
  }
  *x = best;
  *fx = best_f;
}

// Minimizes the (max-over-inputs or nu-weighted) mixture divergence over the
// allowed weights: full simplex on hull-flagged sides, single vertices
// otherwise (handled by enumerating that side).
HullMinOutcome hull_minimize(const std::vector<ClassicalChannel>& sv,
                             const std::vector<ClassicalChannel>& tv, bool s_hull, bool t_hull,
                             const RealVector& nu, int restarts, std::uint64_t seed) {
  const int ks = static_cast<int>(sv.size());
  const int kt = static_cast<int>(tv.size());
  std::vector<int> s_choices, t_choices;  // -1 = full hull block
  if (s_hull) {
    s_choices.push_back(-1);
  } else {
    for (int i = 0; i < ks; ++i) s_choices.push_back(i);
  }
  if (t_hull) {
    t_choices.push_back(-1);
  } else {
    for (int j = 0; j < kt; ++j) t_choices.push_back(j);
  }

  HullMinOutcome best;
  bool have = false;
  int combo = 0;
  for (int sc : s_choices) {
    for (int tc : t_choices) {
      std::vector<ClassicalChannel> ssub = (sc < 0) ? sv : std::vector<ClassicalChannel>{sv[sc]};
      std::vector<ClassicalChannel> tsub = (tc < 0) ? tv : std::vector<ClassicalChannel>{tv[tc]};
      HullPairProblem prob{&ssub, &tsub, nu};
      SimplexDomain domain{{static_cast<int>(ssub.size()), static_cast<int>(tsub.size())}};

      ConvexOptions options;
      options.restarts = restarts;
      options.max_iter = 3000;
      options.tol = 1e-10;
      options.seed = derive_stream(seed, static_cast<std::uint64_t>(combo));
      if (static_cast<long>(ssub.size()) * static_cast<long>(tsub.size()) <= 16) {
        for (size_t i = 0; i < ssub.size(); ++i) {
          for (size_t j = 0; j < tsub.size(); ++j) {
            RealVector corner = RealVector::Zero(domain.total());
            corner(static_cast<int>(i)) = 1.0;
            corner(static_cast<int>(ssub.size() + j)) = 1.0;
            options.initial_points.push_back(std::move(corner));
          }
        }
      }

      ConvexReport rep = minimize_convex_on_simplices(
          [&prob](const RealVector& x) { return prob.value(x); },
          [&prob](const RealVector& x) { return prob.subgrad(x); }, domain, options);

      RealVector xr = rep.x;
      double fr = prob.value(xr);
      if (domain.total() > 2) kelley_refine(prob, domain, &xr, &fr, 60, 1e-9);

      RealVector w = RealVector::Zero(ks), v = RealVector::Zero(kt);
      if (sc < 0) {
        w = xr.head(ks);
      } else {
        w(sc) = 1.0;
      }
      if (tc < 0) {
        v = xr.tail(kt);
      } else {
        v(tc) = 1.0;
      }
      HullMinOutcome cand;
      cand.w = w;
      cand.v = v;
      cand.working = fr;
      cand.exact = prob.exact(xr);
      cand.fw_gap = prob.fw_gap(xr);
      if (!have || cand.exact.value() < best.exact.value() ||
          (cand.exact.value() == best.exact.value() && cand.working < best.working)) {
        best = cand;
        have = true;
      }
      ++combo;
    }
  }
  return best;
}

// Exact per-input divergence profile of a fixed mixture pair, with infinite
// entries replaced by the cap (recorded through *saw_cap).
RealVector capped_profile(const std::vector<ClassicalChannel>& sv,
                          const std::vector<ClassicalChannel>& tv, const RealVector& w,
                          const RealVector& v, bool* saw_cap) {
  HullPairProblem prob{&sv, &tv, RealVector()};
  const int x_count = sv.front().input_size();
  RealVector point(sv.size() + tv.size());
  point.head(sv.size()) = w;
  point.tail(tv.size()) = v;
  RealVector d(x_count);
  for (int xi = 0; xi < x_count; ++xi) {
    RealVector p, q;
    prob.mixed_rows(point, xi, &p, &q);
    ProbVector pp(RealVector(p.cwiseMax(0.0) / std::max(p.cwiseMax(0.0).sum(), 1e-300)));
    ProbVector qq(RealVector(q.cwiseMax(0.0) / std::max(q.cwiseMax(0.0).sum(), 1e-300)));
    ExtReal e = kl_divergence(pp, qq);
    if (e.is_infinite()) {
      d(xi) = kInfCap;
      if (saw_cap != nullptr) *saw_cap = true;
    } else {
      d(xi) = e.value();
    }
  }
  return d;
}

// Mixture of quantum channels as a single channel: concatenated Kraus lists
// scaled by the square roots of the (renormalized) weights.
QuantumChannel mix_quantum(const std::vector<QuantumChannel>& verts, const RealVector& w) {
  RealVector wn = w.cwiseMax(0.0);
  wn /= std::max(wn.sum(), 1e-300);
  std::vector<Matrix> kraus;
  for (size_t i = 0; i < verts.size(); ++i) {
    if (wn(static_cast<int>(i)) <= 1e-14) continue;
    const double root = std::sqrt(wn(static_cast<int>(i)));
    for (const Matrix& k : verts[i].kraus()) kraus.push_back(root * k);
  }
  return QuantumChannel(verts.front().in_dim(), verts.front().out_dim(), std::move(kraus));
}

// Envelope subgradient of (w, v) -> D(sum_i w_i P_i || sum_j v_j Q_j) at the
// fixed witness input: P_i, Q_j are the vertex outputs on the witness, and
// the derivative of the relative entropy uses the spectral calculus of the
// mixed outputs (divided-difference factors for the log of the second
// argument).  Components in either kernel are dropped; they vanish at
// feasible points.
RealVector quantum_envelope_subgrad(const std::vector<QuantumChannel>& sv,
                                    const std::vector<QuantumChannel>& tv, const RealVector& x,
                                    const DensityMatrix& witness) {
  const int ks = static_cast<int>(sv.size());
  const int kt = static_cast<int>(tv.size());
  const int ref = sv.front().in_dim();
  auto lift_apply = [&](const QuantumChannel& c) {
    QuantumChannel lifted = tensor(QuantumChannel::identity(ref), c);
    return apply_channel(lifted, witness).matrix();
  };
  const int dim = ref * sv.front().out_dim();
  Matrix p = Matrix::Zero(dim, dim), q = Matrix::Zero(dim, dim);
  std::vector<Matrix> ps(ks), qs(kt);
  RealVector wn = x.head(ks).cwiseMax(0.0);
  wn /= std::max(wn.sum(), 1e-300);
  RealVector vn = x.tail(kt).cwiseMax(0.0);
  vn /= std::max(vn.sum(), 1e-300);
  for (int i = 0; i < ks; ++i) {
    ps[i] = lift_apply(sv[i]);
    p += wn(i) * ps[i];
  }
  for (int j = 0; j < kt; ++j) {
    qs[j] = lift_apply(tv[j]);
    q += vn(j) * qs[j];
  }
  EigResult ep = hermitian_eig(p);
  EigResult eq = hermitian_eig(q);
  const double thr_p = 1e-12 * std::max(ep.values.maxCoeff(), 1e-300);
  const double thr_q = 1e-12 * std::max(eq.values.maxCoeff(), 1e-300);
  Matrix logp = Matrix::Zero(dim, dim), logq = Matrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    if (ep.values(i) > thr_p) {
      logp += std::log2(ep.values(i)) * ep.vectors.col(i) * ep.vectors.col(i).adjoint();
    }
    if (eq.values(i) > thr_q) {
      logq += std::log2(eq.values(i)) * eq.vectors.col(i) * eq.vectors.col(i).adjoint();
    }
  }
  Matrix p_tilde = eq.vectors.adjoint() * p * eq.vectors;
  Matrix g_tilde = Matrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    if (eq.values(i) <= thr_q) continue;
    for (int j = 0; j < dim; ++j) {
      if (eq.values(j) <= thr_q) continue;
      const double a = eq.values(i), b = eq.values(j);
      const double phi = (std::abs(a - b) > 1e-12 * std::max(a, b))
                             ? (std::log(a) - std::log(b)) / (a - b)
                             : 2.0 / (a + b);
      g_tilde(i, j) = p_tilde(i, j) * phi;
    }
  }
  Matrix fre = eq.vectors * g_tilde * eq.vectors.adjoint();
  RealVector g = RealVector::Zero(ks + kt);
  for (int i = 0; i < ks; ++i) {
    g(i) = ((logp + Matrix::Identity(dim, dim) / kLn2 - logq) * ps[i]).trace().real();
  }
  for (int j = 0; j < kt; ++j) {
    g(ks + j) = -(fre * qs[j]).trace().real() / kLn2;
  }
  return g;
}

}  // namespace

HypothesisSet HypothesisSet::classical_set(std::vector<ClassicalChannel> vertices,
                                           bool take_hull) {
  if (vertices.empty()) {
    throw InvariantViolationError("HypothesisSet: vertex list must be nonempty");
  }
  for (const ClassicalChannel& c : vertices) {
    if (c.input_size() != vertices.front().input_size() ||
        c.output_size() != vertices.front().output_size()) {
      throw DimensionMismatchError("HypothesisSet: vertices have mixed shapes");
    }
  }
  HypothesisSet s;
  s.classical = std::move(vertices);
  s.take_hull = take_hull;
  return s;
}

HypothesisSet HypothesisSet::quantum_set(std::vector<QuantumChannel> vertices, bool take_hull) {
  if (vertices.empty()) {
    throw InvariantViolationError("HypothesisSet: vertex list must be nonempty");
  }
  for (const QuantumChannel& c : vertices) {
    if (c.in_dim() != vertices.front().in_dim() || c.out_dim() != vertices.front().out_dim()) {
      throw DimensionMismatchError("HypothesisSet: vertices have mixed shapes");
    }
  }
  HypothesisSet s;
  s.quantum = std::move(vertices);
  s.take_hull = take_hull;
  return s;
}

ExponentReport worst_case_iid_exponent(const HypothesisSet& s, const HypothesisSet& t,
                                       int restarts, std::uint64_t seed) {
  if (s.is_classical() != t.is_classical()) {
    throw DimensionMismatchError("worst_case_iid_exponent: sets of different kinds");
  }
  ExponentReport report;
  if (s.is_classical()) {
    check_same_shape_classical(s.classical, t.classical, "worst_case_iid_exponent");
    if (!s.take_hull && !t.take_hull) {
      ExtReal best = ExtReal::infinity();
      int bi = 0, bj = 0;
      for (size_t i = 0; i < s.classical.size(); ++i) {
        for (size_t j = 0; j < t.classical.size(); ++j) {
          ExtReal d = classical_channel_divergence(s.classical[i], t.classical[j]);
          if (d.value() < best.value()) {
            best = d;
            bi = static_cast<int>(i);
            bj = static_cast<int>(j);
          }
        }
      }
      report.value = report.lower = report.upper = best;
      report.s_hull_weights.assign(s.classical.size(), 0.0);
      report.t_hull_weights.assign(t.classical.size(), 0.0);
      report.s_hull_weights[bi] = 1.0;
      report.t_hull_weights[bj] = 1.0;
      report.active_pairs.emplace_back(bi, bj);
      return report;
    }
    HullMinOutcome out = hull_minimize(s.classical, t.classical, s.take_hull, t.take_hull,
                                       RealVector(), restarts, seed);
    report.value = report.lower = report.upper = out.exact;
    report.s_hull_weights.assign(out.w.data(), out.w.data() + out.w.size());
    report.t_hull_weights.assign(out.v.data(), out.v.data() + out.v.size());
    return report;
  }

  // Quantum: minimum over vertex pairs of the regularized bracket.  The lower
  // ends and upper ends are minimized separately; both remain valid bounds on
  // the minimal regularized divergence.
  if (s.quantum.front().in_dim() != t.quantum.front().in_dim() ||
      s.quantum.front().out_dim() != t.quantum.front().out_dim()) {
    throw DimensionMismatchError("worst_case_iid_exponent: channel shapes differ between sets");
  }
  ExtReal lo = ExtReal::infinity(), up = ExtReal::infinity();
  int bi = 0, bj = 0;
  std::uint64_t k = 0;
  for (size_t i = 0; i < s.quantum.size(); ++i) {
    for (size_t j = 0; j < t.quantum.size(); ++j, ++k) {
      ChannelDivReport b =
          regularized_bracket(s.quantum[i], t.quantum[j], restarts, derive_stream(seed, k));
      if (b.lower.value() < lo.value()) {
        lo = b.lower;
        bi = static_cast<int>(i);
        bj = static_cast<int>(j);
      }
      if (b.upper.value() < up.value()) up = b.upper;
    }
  }
  report.value = lo;
  report.lower = lo;
  report.upper = up;
  report.s_hull_weights.assign(s.quantum.size(), 0.0);
  report.t_hull_weights.assign(t.quantum.size(), 0.0);
  report.s_hull_weights[bi] = 1.0;
  report.t_hull_weights[bj] = 1.0;
  report.active_pairs.emplace_back(bi, bj);
  return report;
}

ExponentReport parallel_exponent_finite_classical(const HypothesisSet& s,
                                                  const HypothesisSet& t) {
  if (!s.is_classical() || !t.is_classical()) {
    throw SolverPreconditionError(
        "parallel_exponent_finite_classical: expects classical channel sets");
  }
  if (s.take_hull || t.take_hull) {
    throw SolverPreconditionError(
        "parallel_exponent_finite_classical: expects finite sets, not hulls");
  }
  check_same_shape_classical(s.classical, t.classical, "parallel_exponent_finite_classical");

  const int x_count = s.classical.front().input_size();
  const int ks = static_cast<int>(s.classical.size());
  const int kt = static_cast<int>(t.classical.size());
  const int pairs = ks * kt;

  std::vector<RealVector> d(pairs, RealVector::Zero(x_count));
  std::vector<std::vector<bool>> inf_entry(pairs, std::vector<bool>(x_count, false));
  bool has_inf = false;
  for (int i = 0; i < ks; ++i) {
    for (int j = 0; j < kt; ++j) {
      const int pidx = i * kt + j;
      for (int xi = 0; xi < x_count; ++xi) {
        ExtReal e = kl_divergence(s.classical[i].row(xi), t.classical[j].row(xi));
        if (e.is_infinite()) {
          inf_entry[pidx][xi] = true;
          has_inf = true;
        } else {
          d[pidx](xi) = e.value();
        }
      }
    }
  }

  auto solve_with_cap = [&](double cap) -> LpResult {
    LinearProgram lp;
    lp.sense = LinearProgram::Sense::kMaximize;
    lp.objective = RealVector::Zero(x_count + 1);
    lp.objective(x_count) = 1.0;
    lp.lhs = Eigen::MatrixXd::Zero(pairs + 2, x_count + 1);
    lp.rhs = RealVector::Zero(pairs + 2);
    for (int p = 0; p < pairs; ++p) {
      for (int xi = 0; xi < x_count; ++xi) {
        lp.lhs(p, xi) = -(inf_entry[p][xi] ? cap : d[p](xi));
      }
      lp.lhs(p, x_count) = 1.0;
    }
    for (int xi = 0; xi < x_count; ++xi) {
      lp.lhs(pairs, xi) = 1.0;
      lp.lhs(pairs + 1, xi) = -1.0;
    }
    lp.rhs(pairs) = 1.0;
    lp.rhs(pairs + 1) = -1.0;
    return solve_lp(lp);
  };

  LpResult base = solve_with_cap(kInfCap);
  if (base.status != LpStatus::kOptimal) {
    throw SolverPreconditionError("parallel_exponent_finite_classical: LP did not solve");
  }
  bool capped = false;
  if (has_inf) {
    LpResult wide = solve_with_cap(10.0 * kInfCap);
    if (std::abs(wide.value - base.value) > 1e-6 * std::max(1.0, std::abs(base.value))) {
      capped = true;
    }
  }

  RealVector q = base.x.head(x_count);
  const double tstar = base.value;
  ExponentReport report;
  report.value = report.lower = report.upper = ExtReal::finite(tstar);
  report.input_certificate.assign(q.data(), q.data() + x_count);
  for (int i = 0; i < ks; ++i) {
    for (int j = 0; j < kt; ++j) {
      const int pidx = i * kt + j;
      double lhs = 0.0;
      for (int xi = 0; xi < x_count; ++xi) {
        lhs += q(xi) * (inf_entry[pidx][xi] ? kInfCap : d[pidx](xi));
      }
      if (lhs <= tstar + 1e-7 * std::max(1.0, tstar)) {
        report.active_pairs.emplace_back(i, j);
        for (int xi = 0; xi < x_count; ++xi) {
          // A capped entry can only influence the optimum through positive
          // input weight on its symbol.
          if (inf_entry[pidx][xi] && q(xi) > 1e-9) capped = true;
        }
      }
    }
  }
  report.capped = capped;
  return report;
}

ExponentReport convex_classical_exponent(const HypothesisSet& s, const HypothesisSet& t,
                                         int restarts, std::uint64_t seed) {
  if (!s.is_classical() || !t.is_classical()) {
    throw SolverPreconditionError("convex_classical_exponent: expects classical channel sets");
  }
  if (!s.take_hull || !t.take_hull) {
    throw SolverPreconditionError("convex_classical_exponent: expects hull-flagged sets");
  }
  check_same_shape_classical(s.classical, t.classical, "convex_classical_exponent");

  const auto& sv = s.classical;
  const auto& tv = t.classical;
  const int x_count = sv.front().input_size();
  const int ks = static_cast<int>(sv.size());
  const int kt = static_cast<int>(tv.size());

  HullMinOutcome primal = hull_minimize(sv, tv, true, true, RealVector(), restarts, seed);
  const double primal_capped = std::min(primal.exact.value(), kInfCap);

  bool saw_cap = false;
  std::vector<RealVector> rows;  // per-input divergence profiles of active mixtures
  rows.push_back(capped_profile(sv, tv, primal.w, primal.v, &saw_cap));
  for (int i = 0; i < ks; ++i) {
    for (int j = 0; j < kt; ++j) {
      RealVector w = RealVector::Zero(ks), v = RealVector::Zero(kt);
      w(i) = 1.0;
      v(j) = 1.0;
      rows.push_back(capped_profile(sv, tv, w, v, &saw_cap));
    }
  }

  double dual_best = 0.0;
  RealVector nu_best = RealVector::Constant(x_count, 1.0 / x_count);
  for (int iter = 0; iter < 60; ++iter) {
    LinearProgram lp;
    lp.sense = LinearProgram::Sense::kMaximize;
    const int rows_n = static_cast<int>(rows.size());
    lp.objective = RealVector::Zero(x_count + 1);
    lp.objective(x_count) = 1.0;
    lp.lhs = Eigen::MatrixXd::Zero(rows_n + 2, x_count + 1);
    lp.rhs = RealVector::Zero(rows_n + 2);
    for (int r = 0; r < rows_n; ++r) {
      for (int xi = 0; xi < x_count; ++xi) lp.lhs(r, xi) = -rows[r](xi);
      lp.lhs(r, x_count) = 1.0;
    }
    for (int xi = 0; xi < x_count; ++xi) {
      lp.lhs(rows_n, xi) = 1.0;
      lp.lhs(rows_n + 1, xi) = -1.0;
    }
    lp.rhs(rows_n) = 1.0;
    lp.rhs(rows_n + 1) = -1.0;
    LpResult sol = solve_lp(lp);
    if (sol.status != LpStatus::kOptimal) break;
    RealVector nu = sol.x.head(x_count).cwiseMax(0.0);
    for (int xi = 0; xi < x_count; ++xi) {
      if (nu(xi) <= kMassThresholdNu) nu(xi) = 0.0;
    }
    nu /= std::max(nu.sum(), 1e-300);
    const double tstar = sol.value;

    HullMinOutcome br = hull_minimize(sv, tv, true, true, nu, std::max(8, restarts / 2),
                                      derive_stream(seed, 1000 + iter));
    // Certified value of this adversarial input: achieved value minus the
    // optimality gap of the inner minimization.  An infinite best response
    // means the inner solve stalled at a support boundary; it certifies
    // nothing and must not contaminate the dual.
    if (!br.exact.is_infinite()) {
      const double certified = std::max(0.0, br.exact.value() - std::max(br.fw_gap, 0.0));
      if (certified > dual_best) {
        dual_best = certified;
        nu_best = nu;
      }
      if (tstar - br.exact.value() <= 5e-5 * std::max(1.0, std::abs(tstar))) break;
    }
    rows.push_back(capped_profile(sv, tv, br.w, br.v, &saw_cap));
  }

  ExponentReport report;
  report.value = primal.exact;
  report.upper = primal.exact;
  report.lower = ExtReal::finite(dual_best);
  report.duality_gap = primal_capped - dual_best;
  report.input_certificate.assign(nu_best.data(), nu_best.data() + x_count);
  report.s_hull_weights.assign(primal.w.data(), primal.w.data() + ks);
  report.t_hull_weights.assign(primal.v.data(), primal.v.data() + kt);
  report.capped = saw_cap && primal.exact.is_infinite();
  return report;
}

std::pair<ExtReal, TestOperator> composite_test_exponent_exact(
    const std::vector<ProbVector>& s_n, const std::vector<ProbVector>& t_n, double eps) {
  if (s_n.empty() || t_n.empty()) {
    throw InvariantViolationError("composite_test_exponent_exact: empty hypothesis set");
  }
  if (eps < 0.0 || eps >= 1.0) {
    throw InvariantViolationError("composite_test_exponent_exact: eps must lie in [0, 1)");
  }
  const int d = s_n.front().size();
  for (const ProbVector& p : s_n) {
    if (p.size() != d) throw DimensionMismatchError("composite_test_exponent_exact: alphabets");
  }
  for (const ProbVector& q : t_n) {
    if (q.size() != d) throw DimensionMismatchError("composite_test_exponent_exact: alphabets");
  }
  if (d > 4096) {
    throw SizeCapError("composite_test_exponent_exact: alphabet exceeds 4096 symbols");
  }

  // A zero second-kind error is possible exactly when accepting everything
  // outside the union support of the alternate set already satisfies the
  // type-I constraint for every null member.
  std::vector<bool> alt_support(d, false);
  for (const ProbVector& q : t_n) {
    for (int x = 0; x < d; ++x) {
      if (q[x] > 0.0) alt_support[x] = true;
    }
  }
  bool zero_feasible = true;
  for (const ProbVector& p : s_n) {
    double missed = 0.0;
    for (int x = 0; x < d; ++x) {
      if (alt_support[x]) missed += p[x];
    }
    if (missed > eps + 1e-12) {
      zero_feasible = false;
      break;
    }
  }
  if (zero_feasible) {
    RealVector m = RealVector::Zero(d);
    for (int x = 0; x < d; ++x) m(x) = alt_support[x] ? 0.0 : 1.0;
    return {ExtReal::infinity(), TestOperator(m)};
  }

  // Variables: M(0..d-1), t.  Minimize t subject to
  //   sum_x sigma(x) M(x) <= t            for every alternate member,
  //   sum_x rho(x) M(x) >= 1 - eps        for every null member,
  //   M(x) <= 1.
  const int rows = static_cast<int>(t_n.size() + s_n.size()) + d;
  LinearProgram lp;
  lp.sense = LinearProgram::Sense::kMinimize;
  lp.objective = RealVector::Zero(d + 1);
  lp.objective(d) = 1.0;
  lp.lhs = Eigen::MatrixXd::Zero(rows, d + 1);
  lp.rhs = RealVector::Zero(rows);
  int r = 0;
  for (const ProbVector& q : t_n) {
    for (int x = 0; x < d; ++x) lp.lhs(r, x) = q[x];
    lp.lhs(r, d) = -1.0;
    lp.rhs(r) = 0.0;
    ++r;
  }
  for (const ProbVector& p : s_n) {
    for (int x = 0; x < d; ++x) lp.lhs(r, x) = -p[x];
    lp.rhs(r) = eps - 1.0;
    ++r;
  }
  for (int x = 0; x < d; ++x) {
    lp.lhs(r, x) = 1.0;
    lp.rhs(r) = 1.0;
    ++r;
  }
  LpResult sol = solve_lp(lp);
  if (sol.status != LpStatus::kOptimal) {
    throw SolverPreconditionError("composite_test_exponent_exact: LP did not solve");
  }
  const double beta = std::max(sol.value, kValueFloor);
  RealVector m = sol.x.head(d).cwiseMax(0.0).cwiseMin(1.0);
  return {ExtReal::finite(-std::log2(beta)), TestOperator(m)};
}

ExponentReport level_n_hull_bracket(const HypothesisSet& s, const HypothesisSet& t, int n,
                                    int restarts, std::uint64_t seed) {
  if (n != 1 && n != 2) {
    throw SolverPreconditionError("level_n_hull_bracket: only levels 1 and 2 are supported");
  }
  if (s.is_classical() != t.is_classical()) {
    throw DimensionMismatchError("level_n_hull_bracket: sets of different kinds");
  }

  if (s.is_classical()) {
    check_same_shape_classical(s.classical, t.classical, "level_n_hull_bracket");
    auto blow_up = [n](const std::vector<ClassicalChannel>& verts) {
      if (n == 1) return verts;
      std::vector<ClassicalChannel> out;
      for (const ClassicalChannel& a : verts) {
        for (const ClassicalChannel& b : verts) out.push_back(tensor(a, b));
      }
      return out;
    };
    std::vector<ClassicalChannel> sn = blow_up(s.classical);
    std::vector<ClassicalChannel> tn = blow_up(t.classical);
    HullMinOutcome out =
        hull_minimize(sn, tn, s.take_hull, t.take_hull, RealVector(), restarts, seed);
    ExponentReport report;
    ExtReal scaled = out.exact.is_infinite() ? ExtReal::infinity()
                                             : ExtReal::finite(out.exact.value() / n);
    report.value = report.lower = report.upper = scaled;
    report.s_hull_weights.assign(out.w.data(), out.w.data() + out.w.size());
    report.t_hull_weights.assign(out.v.data(), out.v.data() + out.v.size());
    return report;
  }

  // Quantum: lower end by pure-state ascent on mixtures of the product
  // vertices (a minimum of lower bounds stays below the bracketed minimum),
  // upper end by the min over product-vertex pairs of the channel
  // max-relative entropy.
  if (s.quantum.front().in_dim() != t.quantum.front().in_dim() ||
      s.quantum.front().out_dim() != t.quantum.front().out_dim()) {
    throw DimensionMismatchError("level_n_hull_bracket: channel shapes differ between sets");
  }
  auto blow_up_q = [n](const std::vector<QuantumChannel>& verts) {
    if (n == 1) return verts;
    std::vector<QuantumChannel> out;
    for (const QuantumChannel& a : verts) {
      for (const QuantumChannel& b : verts) out.push_back(tensor(a, b));
    }
    return out;
  };
  std::vector<QuantumChannel> sn = blow_up_q(s.quantum);
  std::vector<QuantumChannel> tn = blow_up_q(t.quantum);
  const long out_total = long(sn.front().in_dim()) * sn.front().out_dim();
  if (out_total > 16) {
    throw SizeCapError("level_n_hull_bracket: product channel dimensions exceed the cap");
  }

  const int ks = static_cast<int>(sn.size());
  const int kt = static_cast<int>(tn.size());
  const int inner_restarts = std::max(4, restarts / 8);

  // Enumerate vertices on non-hull sides; run the mixture minimization only
  // over hull-flagged blocks (trivial single-point blocks otherwise).
  std::vector<int> s_choices, t_choices;
  if (s.take_hull) {
    s_choices.push_back(-1);
  } else {
    for (int i = 0; i < ks; ++i) s_choices.push_back(i);
  }
  if (t.take_hull) {
    t_choices.push_back(-1);
  } else {
    for (int j = 0; j < kt; ++j) t_choices.push_back(j);
  }

  double best_val = std::numeric_limits<double>::infinity();
  bool best_inf = true;
  RealVector best_w = RealVector::Zero(ks), best_v = RealVector::Zero(kt);
  int combo = 0;
  for (int sc : s_choices) {
    for (int tc : t_choices) {
      std::vector<QuantumChannel> ssub = (sc < 0) ? sn : std::vector<QuantumChannel>{sn[sc]};
      std::vector<QuantumChannel> tsub = (tc < 0) ? tn : std::vector<QuantumChannel>{tn[tc]};
      const int bs = static_cast<int>(ssub.size()), bt = static_cast<int>(tsub.size());
      SimplexDomain domain{{bs, bt}};
      auto lower_at = [&](const RealVector& x) {
        QuantumChannel e = mix_quantum(ssub, x.head(bs));
        QuantumChannel f = mix_quantum(tsub, x.tail(bt));
        return quantum_channel_divergence_lower(e, f, inner_restarts, derive_stream(seed, 77));
      };
      ConvexOptions options;
      options.restarts = std::max(2, restarts / 8);
      options.max_iter = 60;
      options.tol = 1e-7;
      options.seed = derive_stream(seed, 300 + combo);
      ConvexReport rep = minimize_convex_on_simplices(
          [&](const RealVector& x) { return lower_at(x).lower.value(); },
          [&](const RealVector& x) {
            ChannelDivReport at = lower_at(x);
            if (at.lower.is_infinite()) return RealVector::Zero(bs + bt).eval();
            return quantum_envelope_subgrad(ssub, tsub, x,
                                            std::get<DensityMatrix>(at.witness_state));
          },
          domain, options);
      if (rep.value < best_val || (best_inf && !std::isinf(rep.value))) {
        best_val = rep.value;
        best_inf = std::isinf(rep.value);
        best_w.setZero();
        best_v.setZero();
        if (sc < 0) {
          best_w = rep.x.head(bs);
        } else {
          best_w(sc) = 1.0;
        }
        if (tc < 0) {
          best_v = rep.x.tail(bt);
        } else {
          best_v(tc) = 1.0;
        }
      }
      ++combo;
    }
  }

  ExtReal lower = best_inf ? ExtReal::infinity() : ExtReal::finite(std::max(best_val, 0.0) / n);
  ExtReal upper = ExtReal::infinity();
  for (const QuantumChannel& a : sn) {
    for (const QuantumChannel& b : tn) {
      ExtReal dm = dmax_channel(a, b);
      if (dm.value() / n < upper.value()) {
        upper = dm.is_infinite() ? ExtReal::infinity() : ExtReal::finite(dm.value() / n);
      }
    }
  }
  ExponentReport report;
  report.value = lower;
  report.lower = lower;
  report.upper = upper;
  report.s_hull_weights.assign(best_w.data(), best_w.data() + ks);
  report.t_hull_weights.assign(best_v.data(), best_v.data() + kt);
  return report;
}

}  // namespace chdisc
