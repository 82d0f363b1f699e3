// Acceptance gate: one self-contained check per shipped guarantee, each
// printing a single [PASS]/[FAIL] line with the measured values and runtime.
// The process exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chdisc/channel_div.hpp"
#include "chdisc/core.hpp"
#include "chdisc/divergences.hpp"
#include "chdisc/exponents.hpp"
#include "chdisc/protocols.hpp"

namespace {

using chdisc::ClassicalChannel;
using chdisc::DensityMatrix;
using chdisc::ExtReal;
using chdisc::HypothesisFamily;
using chdisc::HypothesisSet;
using chdisc::Matrix;
using chdisc::ProbVector;
using chdisc::QuantumChannel;
using chdisc::RealVector;

struct Outcome {
  bool pass = false;
  std::string detail;
};

ProbVector random_prob(std::mt19937_64& rng, int d, double floor = 0.0) {
  std::uniform_real_distribution<double> u(floor, 1.0);
  RealVector v(d);
  for (int i = 0; i < d; ++i) v(i) = u(rng);
  v /= v.sum();
  return ProbVector(v);
}

ClassicalChannel random_channel(std::mt19937_64& rng, int nin, int nout,
                                double floor = 0.0) {
  std::vector<ProbVector> rows;
  for (int x = 0; x < nin; ++x) rows.push_back(random_prob(rng, nout, floor));
  return ClassicalChannel(rows);
}

Matrix random_complex(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      m(i, j) = std::complex<double>(g(rng), g(rng));
  return m;
}

DensityMatrix random_density(std::mt19937_64& rng, int d,
                             double mix_identity = 0.0) {
  Matrix g = random_complex(rng, d, d);
  Matrix m = g * g.adjoint();
  m /= m.trace().real();
  if (mix_identity > 0.0)
    m = (1.0 - mix_identity) * m +
        mix_identity * Matrix::Identity(d, d) / static_cast<double>(d);
  return DensityMatrix(Matrix((m + m.adjoint()) / 2.0));
}

Matrix random_unitary(std::mt19937_64& rng, int d) {
  Matrix g = random_complex(rng, d, d);
  Matrix h = (g + g.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  return es.eigenvectors();
}

QuantumChannel random_quantum_channel(std::mt19937_64& rng, int din, int dout,
                                      int num_kraus) {
  // Trace preservation needs the Kraus Gram sum to be invertible, which
  // requires at least ceil(din/dout) operators.
  num_kraus = std::max(num_kraus, (din + dout - 1) / dout);
  std::vector<Matrix> ks;
  Matrix sum = Matrix::Zero(din, din);
  for (int i = 0; i < num_kraus; ++i) {
    ks.push_back(random_complex(rng, dout, din));
    sum += ks.back().adjoint() * ks.back();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(sum);
  Matrix inv_sqrt = es.operatorInverseSqrt();
  for (Matrix& k : ks) k = k * inv_sqrt;
  return QuantumChannel(din, dout, ks);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// --- criterion 1: built-in instance worst-case iid exponent ---------------

Outcome criterion1() {
  chdisc::Example12 ex = chdisc::example12();
  chdisc::ExponentReport rep = chdisc::worst_case_iid_exponent(ex.s, ex.t);
  const double target = std::log2(4.0 / 3.0) / 2.0;
  Outcome o;
  if (rep.value.is_infinite()) {
    o.detail = "value reported infinite";
    return o;
  }
  const double err = std::abs(rep.value.value() - target);
  o.pass = err <= 1e-9;
  o.detail = "worst-case iid exponent " + fmt(rep.value.value()) +
             ", target " + fmt(target) + ", |err| " + fmt(err) + " (tol 1e-9)";
  return o;
}

// --- criterion 2: built-in instance parallel exponent ---------------------

Outcome criterion2() {
  chdisc::Example12 ex = chdisc::example12();
  chdisc::ExponentReport par =
      chdisc::parallel_exponent_finite_classical(ex.s, ex.t);
  chdisc::ExponentReport iid = chdisc::worst_case_iid_exponent(ex.s, ex.t);
  const double target = std::log2(4.0 / 3.0) / 4.0;
  Outcome o;
  if (par.value.is_infinite() || iid.value.is_infinite()) {
    o.detail = "a report came back infinite";
    return o;
  }
  const double verr = std::abs(par.value.value() - target);
  double werr = 1.0;
  if (par.input_certificate.size() == 2)
    werr = std::max(std::abs(par.input_certificate[0] - 0.5),
                    std::abs(par.input_certificate[1] - 0.5));
  const double ratio = iid.value.value() / par.value.value();
  const double rerr = std::abs(ratio - 2.0);
  o.pass = verr <= 1e-6 && werr <= 1e-6 && rerr <= 1e-6;
  o.detail = "parallel exponent " + fmt(par.value.value()) + " (|err| " +
             fmt(verr) + "), weights off by " + fmt(werr) +
             ", adaptive/parallel ratio " + fmt(ratio) + " (all tol 1e-6)";
  return o;
}

// --- criterion 3: adaptive-vs-parallel finite-n gap -----------------------

Outcome criterion3() {
  chdisc::Example12 ex = chdisc::example12();
  HypothesisFamily s = HypothesisFamily::iid(ex.s);
  HypothesisFamily t = HypothesisFamily::iid(ex.t);
  const double eps = 0.05;
  const std::vector<ProbVector> alternating = {ProbVector::point_mass(2, 0),
                                               ProbVector::point_mass(2, 1)};

  std::map<int, double> beta_adaptive;
  std::map<int, double> beta_parallel;
  bool dominance = true;
  int first_violation = -1;
  for (int n = 4; n <= 16; ++n) {
    chdisc::ErrorPair a =
        chdisc::evaluate_adaptive_strategy(ex.canonical, s, t, n, eps);
    auto [p, pexp] =
        chdisc::evaluate_parallel_strategy(s, t, alternating, n, eps);
    if (!(a.beta < p.beta) && dominance) {
      dominance = false;
      first_violation = n;
    }
    if (n % 2 == 0) {
      beta_adaptive[n] = a.beta;
      beta_parallel[n] = p.beta;
    }
  }
  auto [sa, ra] = chdisc::estimate_exponent(beta_adaptive, 8, 16);
  auto [sp, rp] = chdisc::estimate_exponent(beta_parallel, 8, 16);
  const bool band_a = sa >= 0.15 && sa <= 0.22;
  const bool band_p = sp >= 0.07 && sp <= 0.12;

  Outcome o;
  o.pass = band_a && band_p && dominance;
  std::ostringstream d;
  d << "adaptive slope " << fmt(sa) << " (r2 " << fmt(ra) << ") vs band "
    << "[0.15,0.22] " << (band_a ? "ok" : "OUT") << "; parallel slope "
    << fmt(sp) << " (r2 " << fmt(rp) << ") vs band [0.07,0.12] "
    << (band_p ? "ok" : "OUT") << "; adaptive beats parallel at every n in "
    << "4..16: " << (dominance ? "yes" : "NO");
  if (!dominance) d << " (first violation n=" << first_violation << ")";
  o.detail = d.str();
  return o;
}

// --- criterion 4: exact-oracle equivalences -------------------------------

Outcome criterion4() {
  std::mt19937_64 rng(2024);
  const double epss[3] = {0.0, 0.1, 0.5};
  double worst_classical = 0.0;
  int classical_fail = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int d = 2 + rep % 5;
    const double eps = epss[rep % 3];
    ProbVector p = random_prob(rng, d);
    ProbVector q = random_prob(rng, d);
    ExtReal dh = chdisc::dh_classical(p, q, eps).value;
    ExtReal oracle = chdisc::composite_test_exponent_exact({p}, {q}, eps).first;
    if (dh.is_infinite() != oracle.is_infinite()) {
      ++classical_fail;
      continue;
    }
    if (!dh.is_infinite()) {
      const double err = std::abs(dh.value() - oracle.value());
      worst_classical = std::max(worst_classical, err);
      if (err > 1e-9) ++classical_fail;
    }
  }

  double worst_quantum = 0.0;
  int quantum_fail = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int d = 2 + rep % 3;
    const double eps = epss[rep % 3];
    Matrix u = random_unitary(rng, d);
    ProbVector a = random_prob(rng, d);
    ProbVector b = random_prob(rng, d);
    Matrix rho = u * a.entries().asDiagonal() * u.adjoint();
    Matrix sigma = u * b.entries().asDiagonal() * u.adjoint();
    ExtReal dq = chdisc::dh_quantum(DensityMatrix(Matrix((rho + rho.adjoint()) / 2.0)),
                                    DensityMatrix(Matrix((sigma + sigma.adjoint()) / 2.0)),
                                    eps)
                     .value;
    ExtReal dc = chdisc::dh_classical(a, b, eps).value;
    if (dq.is_infinite() != dc.is_infinite()) {
      ++quantum_fail;
      continue;
    }
    if (!dq.is_infinite()) {
      const double err = std::abs(dq.value() - dc.value());
      worst_quantum = std::max(worst_quantum, err);
      if (err > 1e-9) ++quantum_fail;
    }
  }

  Outcome o;
  o.pass = classical_fail == 0 && quantum_fail == 0;
  o.detail = "200 singleton oracle matches (worst err " + fmt(worst_classical) +
             ", fails " + std::to_string(classical_fail) +
             "); 200 commuting-pair matches (worst err " + fmt(worst_quantum) +
             ", fails " + std::to_string(quantum_fail) + "); tol 1e-9";
  return o;
}

// --- criterion 5: one-shot bound with the entropy correction --------------

Outcome criterion5() {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> ueps(0.01, 0.9);
  double worst_slack = std::numeric_limits<double>::infinity();
  int fails = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int d = 2 + rep % 5;
    const double eps = ueps(rng);
    ProbVector p = random_prob(rng, d, 1e-3);
    ProbVector q = random_prob(rng, d, 1e-3);
    const double kl = chdisc::kl_divergence(p, q).value();
    const double dh = chdisc::dh_classical(p, q, eps).value.value();
    const double bound = (kl + chdisc::binary_entropy(eps)) / (1.0 - eps);
    const double slack = bound - dh;
    worst_slack = std::min(worst_slack, slack);
    if (slack < -1e-9) ++fails;
  }
  double worst_slack_q = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < 1000; ++rep) {
    const double eps = ueps(rng);
    DensityMatrix rho = random_density(rng, 2, 0.02);
    DensityMatrix sigma = random_density(rng, 2, 0.02);
    const double dq = chdisc::quantum_relative_entropy(rho, sigma).value();
    const double dh = chdisc::dh_quantum(rho, sigma, eps).value.value();
    const double bound = (dq + chdisc::binary_entropy(eps)) / (1.0 - eps);
    const double slack = bound - dh;
    worst_slack_q = std::min(worst_slack_q, slack);
    if (slack < -1e-9) ++fails;
  }
  Outcome o;
  o.pass = fails == 0;
  o.detail = "1000 classical + 1000 qubit instances; min slack classical " +
             fmt(worst_slack) + ", qubit " + fmt(worst_slack_q) +
             ", violations " + std::to_string(fails) + " (tol -1e-9)";
  return o;
}

// --- criterion 6: convex minimax agrees with dual and hull bound ----------

Outcome criterion6() {
  std::mt19937_64 rng(66);
  double worst_gap = 0.0;
  double worst_hull = 0.0;
  int fails = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const int ks = 2 + rep % 2;
    const int kt = 2 + (rep / 2) % 2;
    const int nin = 2 + (rep / 4) % 2;
    const int nout = 2 + (rep / 8) % 2;
    HypothesisSet s = [&] {
      std::vector<ClassicalChannel> v;
      for (int i = 0; i < ks; ++i)
        v.push_back(random_channel(rng, nin, nout, 0.02));
      return HypothesisSet::classical_set(v, true);
    }();
    HypothesisSet t = [&] {
      std::vector<ClassicalChannel> v;
      for (int i = 0; i < kt; ++i)
        v.push_back(random_channel(rng, nin, nout, 0.02));
      return HypothesisSet::classical_set(v, true);
    }();
    chdisc::ExponentReport conv =
        chdisc::convex_classical_exponent(s, t, 8, 1000 + rep);
    chdisc::ExponentReport hull =
        chdisc::worst_case_iid_exponent(s, t, 8, 2000 + rep);
    if (conv.value.is_infinite() || hull.value.is_infinite()) {
      ++fails;
      continue;
    }
    const double gap = std::abs(conv.duality_gap);
    const double hd = std::abs(conv.value.value() - hull.value.value());
    worst_gap = std::max(worst_gap, gap);
    worst_hull = std::max(worst_hull, hd);
    if (gap > 1e-3 || hd > 1e-3) ++fails;
  }
  Outcome o;
  o.pass = fails == 0;
  o.detail = "50 convex instances; worst duality gap " + fmt(worst_gap) +
             ", worst |convex - hull-iid| " + fmt(worst_hull) +
             ", failures " + std::to_string(fails) + " (tol 1e-3)";
  return o;
}

// --- criterion 7: universal-test exponent trend ---------------------------

Outcome criterion7() {
  // Two nearby one-parameter (binary) hypothesis intervals per instance.  At
  // error level 0.1 the acceptance region must stay wide at short horizons,
  // so the measured exponent starts below the asymptotic value and climbs
  // toward it as the horizon grows; close intervals keep the per-step
  // log-likelihood spread small enough that the n = 12 value lands near the
  // limit.
  std::mt19937_64 rng(7001);
  std::uniform_real_distribution<double> hi(0.52, 0.60);
  std::uniform_real_distribution<double> lo(0.40, 0.48);
  const double eps = 0.1;
  const std::vector<int> lengths = {6, 8, 10, 12};

  int gap_fails = 0;
  int mono_fails = 0;
  double worst_gap = 0.0;
  double worst_drop = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    double a1 = hi(rng), a2 = hi(rng), b1 = lo(rng), b2 = lo(rng);
    std::vector<ProbVector> p_verts = {
        ProbVector(RealVector{{a1, 1.0 - a1}}),
        ProbVector(RealVector{{a2, 1.0 - a2}})};
    std::vector<ProbVector> q_verts = {
        ProbVector(RealVector{{b1, 1.0 - b1}}),
        ProbVector(RealVector{{b2, 1.0 - b2}})};

    double min_pair = std::numeric_limits<double>::infinity();
    for (const ProbVector& p : p_verts)
      for (const ProbVector& q : q_verts)
        min_pair =
            std::min(min_pair, chdisc::kl_divergence(p, q).value());

    std::vector<double> expo;
    for (int n : lengths) {
      chdisc::TestOperator region =
          chdisc::universal_adversarial_test(p_verts, q_verts, n, eps);
      auto [beta, policy] =
          chdisc::adversary_best_response(region, q_verts, n);
      expo.push_back(beta <= 0.0 ? std::numeric_limits<double>::infinity()
                                 : -std::log2(beta) / n);
    }
    const double gap = std::abs(expo.back() - min_pair);
    worst_gap = std::max(worst_gap, gap);
    if (gap > 0.08) ++gap_fails;
    for (size_t i = 1; i < expo.size(); ++i) {
      const double drop = expo[i - 1] - expo[i];
      worst_drop = std::max(worst_drop, drop);
      if (drop > 1e-9) {
        ++mono_fails;
        break;
      }
    }
  }
  Outcome o;
  o.pass = gap_fails == 0 && mono_fails == 0;
  o.detail = "10 nearby binary instances at level 0.1; worst |exponent(12)"
             " - min-pair divergence| " + fmt(worst_gap) + " (tol 0.08, fails " +
             std::to_string(gap_fails) + "); worst monotonicity drop over n in "
             "{6,8,10,12} " + fmt(worst_drop) + " (tol 1e-9, fails " +
             std::to_string(mono_fails) + ")";
  return o;
}

// --- criterion 8: data processing for the three divergences ---------------

Outcome criterion8() {
  std::mt19937_64 rng(88);
  int fails = 0;
  double worst = 0.0;
  auto note = [&](const ExtReal& before, const ExtReal& after) {
    if (before.is_infinite()) return;  // any processed value is admissible
    if (after.is_infinite()) {
      ++fails;
      return;
    }
    const double excess = after.value() - before.value();
    worst = std::max(worst, excess);
    if (excess > 1e-8) ++fails;
  };

  for (int rep = 0; rep < 1000; ++rep) {
    const int d = 2 + rep % 3;
    const int dout = 2 + (rep / 3) % 3;
    ProbVector p = random_prob(rng, d, rep % 5 == 0 ? 0.0 : 1e-4);
    ProbVector q = random_prob(rng, d, 1e-4);
    ClassicalChannel w = random_channel(rng, d, dout);
    note(chdisc::kl_divergence(p, q),
         chdisc::kl_divergence(chdisc::apply_channel(w, p),
                               chdisc::apply_channel(w, q)));
  }
  for (int rep = 0; rep < 1000; ++rep) {
    const int d = 2 + rep % 2;
    const int dout = 2 + (rep / 2) % 2;
    DensityMatrix rho = random_density(rng, d, 0.02);
    DensityMatrix sigma = random_density(rng, d, 0.02);
    QuantumChannel e = random_quantum_channel(rng, d, dout, 1 + rep % 3);
    note(chdisc::quantum_relative_entropy(rho, sigma),
         chdisc::quantum_relative_entropy(chdisc::apply_channel(e, rho),
                                          chdisc::apply_channel(e, sigma)));
  }
  for (int rep = 0; rep < 1000; ++rep) {
    const int d = 2 + rep % 2;
    const int dout = 2 + (rep / 2) % 2;
    DensityMatrix rho = random_density(rng, d, 0.02);
    DensityMatrix sigma = random_density(rng, d, 0.02);
    QuantumChannel e = random_quantum_channel(rng, d, dout, 1 + rep % 3);
    note(chdisc::dmax(rho, sigma),
         chdisc::dmax(chdisc::apply_channel(e, rho),
                      chdisc::apply_channel(e, sigma)));
  }
  Outcome o;
  o.pass = fails == 0;
  o.detail = "1000 triples each for relative entropy, quantum relative "
             "entropy, and max-divergence; worst processed-minus-original " +
             fmt(worst) + ", violations " + std::to_string(fails) +
             " (tol 1e-8)";
  return o;
}

// --- criterion 9: composite vs pairwise bound; hull-grid defect bound -----

Outcome criterion9() {
  std::mt19937_64 rng(99);
  int fails16 = 0;
  double worst16 = -std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 2 + rep % 3;
    const int ks = 1 + rep % 3;
    const int kt = 1 + (rep / 3) % 3;
    const double eps = rep % 2 == 0 ? 0.1 : 0.3;
    std::vector<ProbVector> s;
    std::vector<ProbVector> t;
    for (int i = 0; i < ks; ++i) s.push_back(random_prob(rng, d, 0.01));
    for (int i = 0; i < kt; ++i) t.push_back(random_prob(rng, d, 0.01));
    ExtReal comp = chdisc::composite_test_exponent_exact(s, t, eps).first;
    double min_pair = std::numeric_limits<double>::infinity();
    for (const ProbVector& p : s)
      for (const ProbVector& q : t) {
        ExtReal dh = chdisc::dh_classical(p, q, eps).value;
        if (!dh.is_infinite()) min_pair = std::min(min_pair, dh.value());
      }
    if (std::isinf(min_pair)) continue;  // bound vacuous
    if (comp.is_infinite()) {
      ++fails16;
      continue;
    }
    const double excess = comp.value() - min_pair;
    worst16 = std::max(worst16, excess);
    if (excess > 1e-9) ++fails16;
  }

  int fails26 = 0;
  double worst26 = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 2 + rep % 3;
    const int k = 2 + rep % 2;
    ProbVector sigma = random_prob(rng, d, 0.01);
    std::vector<ProbVector> verts;
    for (int i = 0; i < k; ++i) verts.push_back(random_prob(rng, d, 0.01));
    double vertex_min = std::numeric_limits<double>::infinity();
    for (const ProbVector& v : verts)
      vertex_min = std::min(vertex_min, chdisc::kl_divergence(v, sigma).value());
    double grid_min = std::numeric_limits<double>::infinity();
    if (k == 2) {
      for (int i = 0; i <= 100; ++i) {
        const double lam = i / 100.0;
        RealVector mix =
            lam * verts[0].entries() + (1 - lam) * verts[1].entries();
        grid_min = std::min(grid_min,
                            chdisc::kl_divergence(ProbVector(mix), sigma).value());
      }
    } else {
      for (int i = 0; i <= 30; ++i)
        for (int j = 0; i + j <= 30; ++j) {
          const double a = i / 30.0, b = j / 30.0;
          RealVector mix = a * verts[0].entries() + b * verts[1].entries() +
                           (1 - a - b) * verts[2].entries();
          grid_min = std::min(
              grid_min, chdisc::kl_divergence(ProbVector(mix), sigma).value());
        }
    }
    const double deficit = vertex_min - grid_min;  // how far the hull dips
    const double allowed = std::log2(d + 1.0) + 1e-6;
    worst26 = std::max(worst26, deficit - allowed);
    if (deficit > allowed) ++fails26;
  }

  Outcome o;
  o.pass = fails16 == 0 && fails26 == 0;
  o.detail = "composite-vs-pairwise: worst excess " + fmt(worst16) +
             " (tol 1e-9, fails " + std::to_string(fails16) +
             "); hull-grid dip minus allowance: worst " + fmt(worst26) +
             " (fails " + std::to_string(fails26) + ")";
  return o;
}

// --- criterion 10: regularized bracket vs embedded classical value --------

Outcome criterion10() {
  std::mt19937_64 rng(1010);
  int fails = 0;
  double worst_lower = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < 50; ++rep) {
    ClassicalChannel e = random_channel(rng, 2, 2, 0.05);
    ClassicalChannel f = random_channel(rng, 2, 2, 0.05);
    const double cls = chdisc::classical_channel_divergence(e, f).value();
    chdisc::ChannelDivReport rep_q = chdisc::regularized_bracket(
        chdisc::embed_classical(e), chdisc::embed_classical(f), 4, 3000 + rep);
    if (rep_q.lower.is_infinite()) continue;
    const double margin = rep_q.lower.value() - cls;
    worst_lower = std::min(worst_lower, margin);
    const bool ordered = rep_q.upper.is_infinite() ||
                         rep_q.upper.value() >= rep_q.lower.value() - 1e-12;
    if (margin < -1e-4 || !ordered) ++fails;
  }
  Outcome o;
  o.pass = fails == 0;
  o.detail = "50 embedded 2x2 pairs; min (bracket lower - classical value) " +
             fmt(worst_lower) + " (tol -1e-4), ordering violations counted in "
             "fails = " + std::to_string(fails);
  return o;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Entry> entries = {
      {1, 1.0, criterion1},   {2, 1.0, criterion2},   {3, 120.0, criterion3},
      {4, 30.0, criterion4},  {5, 30.0, criterion5},  {6, 120.0, criterion6},
      {7, 180.0, criterion7}, {8, 60.0, criterion8},  {9, 60.0, criterion9},
      {10, 120.0, criterion10},
  };
  bool all_pass = true;
  for (const Entry& e : entries) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail = std::string("unexpected exception: ") + ex.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const bool in_budget = seconds < e.budget_seconds;
    const bool pass = o.pass && in_budget;
    all_pass = all_pass && pass;
    std::printf("[%s] criterion %d: %s [%.2fs%s budget %.0fs]\n",
                pass ? "PASS" : "FAIL", e.id, o.detail.c_str(), seconds,
                in_budget ? "," : ", OVER", e.budget_seconds);
  }
  std::fflush(stdout);
  return all_pass ? 0 : 1;
}
