#include "chdisc/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "chdisc/errors.hpp"
#include "chdisc/optim.hpp"
#include "chdisc/rng.hpp"

namespace chdisc {

namespace {

constexpr long kDenseCap = 4096;
constexpr long kGroupCap = 200000;
constexpr double kEq = 1e-9;

bool same_shape(const ClassicalChannel& a, const ClassicalChannel& b) {
  return a.input_size() == b.input_size() && a.output_size() == b.output_size();
}

bool channels_equal(const ClassicalChannel& a, const ClassicalChannel& b) {
  if (!same_shape(a, b)) return false;
  for (int x = 0; x < a.input_size(); ++x)
    for (int y = 0; y < a.output_size(); ++y)
      if (std::abs(a.prob(y, x) - b.prob(y, x)) > kEq) return false;
  return true;
}

/// Largest over inputs of the total-variation distance between output rows.
double channel_tv(const ClassicalChannel& a, const ClassicalChannel& b) {
  double worst = 0.0;
  for (int x = 0; x < a.input_size(); ++x) {
    double acc = 0.0;
    for (int y = 0; y < a.output_size(); ++y)
      acc += std::abs(a.prob(y, x) - b.prob(y, x));
    worst = std::max(worst, 0.5 * acc);
  }
  return worst;
}

bool quantum_equal(const QuantumChannel& a, const QuantumChannel& b) {
  if (a.in_dim() != b.in_dim() || a.out_dim() != b.out_dim()) return false;
  Matrix d = choi_state(a).matrix() - choi_state(b).matrix();
  return d.cwiseAbs().maxCoeff() <= kEq;
}

/// Output distribution of one channel use under a (possibly randomised)
/// input, as a plain vector over the output alphabet.
RealVector input_row(const ClassicalChannel& ch, const InputChoice& c) {
  RealVector out = RealVector::Zero(ch.output_size());
  if (std::holds_alternative<int>(c)) {
    const int x = std::get<int>(c);
    if (x < 0 || x >= ch.input_size())
      throw DimensionMismatchError("input symbol out of range for channel");
    for (int y = 0; y < ch.output_size(); ++y) out(y) = ch.prob(y, x);
    return out;
  }
  const ProbVector& nu = std::get<ProbVector>(c);
  if (nu.size() != ch.input_size())
    throw DimensionMismatchError("input distribution size does not match channel");
  for (int x = 0; x < ch.input_size(); ++x) {
    const double w = nu[x];
    if (w <= 0.0) continue;
    for (int y = 0; y < ch.output_size(); ++y) out(y) += w * ch.prob(y, x);
  }
  return out;
}

long checked_power(long base, int n, long cap, const char* what) {
  long total = 1;
  for (int k = 0; k < n; ++k) {
    total *= base;
    if (total > cap) {
      std::ostringstream msg;
      msg << what << ": " << base << "^" << n << " exceeds the cap of " << cap;
      throw SizeCapError(msg.str());
    }
  }
  return total;
}

long product_capped(const std::vector<int>& alph, long cap, const char* what) {
  long total = 1;
  for (int a : alph) {
    total *= a;
    if (total > cap) {
      std::ostringstream msg;
      msg << what << ": history space exceeds the cap of " << cap;
      throw SizeCapError(msg.str());
    }
  }
  return total;
}

std::vector<int> decode_history(const std::vector<int>& alph, int k, long rank) {
  std::vector<int> h(k);
  for (int i = k - 1; i >= 0; --i) {
    h[i] = static_cast<int>(rank % alph[i]);
    rank /= alph[i];
  }
  return h;
}

/// Distribution over the full per-step product space induced by one
/// next-symbol kernel (row-major, last step fastest).
RealVector forward_distribution(
    const std::vector<int>& alph, long total,
    const std::function<RealVector(int, const std::vector<int>&)>& step_dist) {
  RealVector out = RealVector::Zero(total);
  std::vector<int> hist;
  std::function<void(int, long, double)> rec = [&](int k, long rank, double prob) {
    if (prob <= 0.0) return;
    if (k == static_cast<int>(alph.size())) {
      out(rank) += prob;
      return;
    }
    RealVector d = step_dist(k, hist);
    for (int y = 0; y < alph[k]; ++y) {
      if (d(y) <= 0.0) continue;
      hist.push_back(y);
      rec(k + 1, rank * alph[k] + y, prob * d(y));
      hist.pop_back();
    }
  };
  rec(0, 0, 1.0);
  return out;
}

/// Exact best response of an adversary who, at every step and history, may
/// pick any of the candidate next-symbol kernels to maximise the expected
/// final value.  Returns the optimum and fills the per-level argmax table.
double best_response_value(
    const std::vector<int>& alph, const RealVector& final_values,
    const std::function<std::vector<RealVector>(int, const std::vector<int>&)>&
        candidates,
    std::shared_ptr<std::vector<std::vector<int>>>* table_out) {
  const int n = static_cast<int>(alph.size());
  auto table = std::make_shared<std::vector<std::vector<int>>>(n);
  RealVector values = final_values;
  for (int k = n - 1; k >= 0; --k) {
    long level = 1;
    for (int i = 0; i < k; ++i) level *= alph[i];
    RealVector next = RealVector::Zero(level);
    (*table)[k].assign(level, 0);
    for (long r = 0; r < level; ++r) {
      std::vector<int> hist = decode_history(alph, k, r);
      std::vector<RealVector> cands = candidates(k, hist);
      double best = -std::numeric_limits<double>::infinity();
      int best_j = 0;
      for (int j = 0; j < static_cast<int>(cands.size()); ++j) {
        double s = 0.0;
        for (int y = 0; y < alph[k]; ++y)
          s += cands[j](y) * values(r * alph[k] + y);
        if (s > best) {
          best = s;
          best_j = j;
        }
      }
      next(r) = best;
      (*table)[k][r] = best_j;
    }
    values = next;
  }
  if (table_out) *table_out = table;
  return values(0);
}

long history_rank(const std::vector<int>& alph, const std::vector<int>& h) {
  long r = 0;
  for (int i = 0; i < static_cast<int>(h.size()); ++i) r = r * alph[i] + h[i];
  return r;
}

ProbVector to_prob(const RealVector& mass) {
  RealVector v = mass.cwiseMax(0.0);
  const double total = v.sum();
  if (total <= 0.0)
    throw InvariantViolationError("history distribution has no mass");
  return ProbVector(RealVector(v / total));
}

struct EvalContext {
  std::vector<ClassicalChannel> s_verts;
  std::vector<ClassicalChannel> t_verts;
  FamilyKind s_kind = FamilyKind::Iid;
  FamilyKind t_kind = FamilyKind::Iid;
  int omega_in = 0;
  int omega_out = 0;
};

EvalContext make_context(const HypothesisFamily& s, const HypothesisFamily& t) {
  if (!s.base.is_classical() || !t.base.is_classical())
    throw SolverPreconditionError(
        "strategy evaluation supports classical channel families only");
  if (s.kind == FamilyKind::SlightlyVarying ||
      t.kind == FamilyKind::SlightlyVarying)
    throw SolverPreconditionError(
        "slightly varying families support membership checks only; "
        "strategy evaluation is not offered for them");
  EvalContext ctx;
  ctx.s_verts = s.base.classical;
  ctx.t_verts = t.base.classical;
  ctx.s_kind = s.kind;
  ctx.t_kind = t.kind;
  const ClassicalChannel& ref = ctx.s_verts.front();
  ctx.omega_in = ref.input_size();
  ctx.omega_out = ref.output_size();
  for (const auto& v : ctx.s_verts)
    if (!same_shape(v, ref))
      throw DimensionMismatchError("null vertices have mixed shapes");
  for (const auto& v : ctx.t_verts)
    if (!same_shape(v, ref))
      throw DimensionMismatchError(
          "null and alternative vertices have different shapes");
  return ctx;
}

void check_eps(double eps) {
  if (!(eps >= 0.0) || eps >= 1.0)
    throw InvariantViolationError("type-I level must lie in [0, 1)");
}

/// ---------------------------------------------------------------------
/// Merged exact induction.  Histories are grouped by (controller state,
/// exact per-vertex likelihood vector); every history in a group has the
/// same probability under every vertex, so an optimal acceptance test can
/// be taken constant on groups and the final linear program shrinks from
/// |Y|^n variables to one per group.
/// ---------------------------------------------------------------------

struct LumpedLevels {
  // Per level: parallel arrays over groups.
  std::vector<std::vector<int>> state;                 // controller state
  std::vector<std::vector<std::vector<double>>> prof;  // per-vertex likelihood
  std::vector<std::vector<double>> count;              // #histories in group
  // trans[k][g*alphabet + y] -> group index at level k+1, or -1 when the
  // symbol has zero probability under every vertex.
  std::vector<std::vector<int>> trans;
  std::vector<int> alphabet;  // per-step symbol count
};

/// Canonical key for one likelihood entry.  Products that are equal as real
/// numbers can differ by a few ulps when the factors are multiplied in a
/// different order, so grouping on raw doubles would keep almost every
/// history separate; quantizing the mantissa to 41 bits (relative quantum
/// ~4.5e-13, far above accumulated rounding noise and far below any
/// threshold the final test resolves) restores the merge.
long long quantize_likelihood(double v) {
  if (v == 0.0) return 0;
  int e = 0;
  const double m = std::frexp(v, &e);
  long long qm = llround(std::ldexp(m, 41));
  if (qm == (1LL << 41)) {
    qm >>= 1;
    ++e;
  }
  return (qm << 16) | static_cast<long long>(e + 32768);
}

LumpedLevels lumped_run(
    int n, int num_vertices, int initial_state,
    const std::function<int(int)>& alphabet_at,
    const std::function<std::vector<RealVector>(int, int)>& factors_at,
    const std::function<int(int, int, int)>& next_state) {
  LumpedLevels out;
  out.state.resize(n + 1);
  out.prof.resize(n + 1);
  out.count.resize(n + 1);
  out.trans.resize(n);
  out.alphabet.resize(n);
  out.state[0] = {initial_state};
  out.prof[0] = {std::vector<double>(num_vertices, 1.0)};
  out.count[0] = {1.0};
  for (int k = 0; k < n; ++k) {
    const int alpha = alphabet_at(k);
    out.alphabet[k] = alpha;
    const int groups = static_cast<int>(out.state[k].size());
    out.trans[k].assign(static_cast<size_t>(groups) * alpha, -1);
    std::map<std::pair<int, std::vector<long long>>, int> index;
    for (int g = 0; g < groups; ++g) {
      const std::vector<RealVector> fac = factors_at(k, out.state[k][g]);
      for (int y = 0; y < alpha; ++y) {
        std::vector<double> np(num_vertices);
        bool alive = false;
        for (int v = 0; v < num_vertices; ++v) {
          np[v] = out.prof[k][g][v] * fac[v](y);
          if (np[v] != 0.0) alive = true;
        }
        if (!alive) continue;
        const int ns = next_state(k, out.state[k][g], y);
        std::vector<long long> qp(num_vertices);
        for (int v = 0; v < num_vertices; ++v)
          qp[v] = quantize_likelihood(np[v]);
        auto key = std::make_pair(ns, std::move(qp));
        auto it = index.find(key);
        int idx;
        if (it == index.end()) {
          idx = static_cast<int>(out.state[k + 1].size());
          index.emplace(std::move(key), idx);
          out.state[k + 1].push_back(ns);
          out.prof[k + 1].push_back(std::move(np));
          out.count[k + 1].push_back(0.0);
          if (idx + 1 > kGroupCap)
            throw SizeCapError(
                "merged history induction exceeded the group cap");
        } else {
          idx = it->second;
        }
        out.count[k + 1][idx] += out.count[k][g];
        out.trans[k][static_cast<size_t>(g) * alpha + y] = idx;
      }
    }
  }
  return out;
}

/// Per-vertex masses over the final groups (each sums to 1).
std::vector<RealVector> lumped_masses(const LumpedLevels& lv, int num_vertices,
                                      int n) {
  const int groups = static_cast<int>(lv.state[n].size());
  std::vector<RealVector> masses(num_vertices, RealVector::Zero(groups));
  for (int v = 0; v < num_vertices; ++v)
    for (int g = 0; g < groups; ++g)
      masses[v](g) = lv.prof[n][g][v] * lv.count[n][g];
  return masses;
}

struct LumpedEvaluation {
  LumpedLevels levels;
  std::vector<RealVector> masses;  // s vertices then t vertices
  RealVector test;                 // acceptance per final group
  ErrorPair errors;
  ExtReal exponent = ExtReal::finite(0.0);
};

LumpedEvaluation lumped_evaluate(
    const EvalContext& ctx, int n, double eps, int num_states,
    int initial_state, const std::function<int(int)>& alphabet_at,
    const std::function<std::vector<RealVector>(int, int)>& factors_at,
    const std::function<int(int, int, int)>& next_state) {
  (void)num_states;
  const int ks = static_cast<int>(ctx.s_verts.size());
  const int kt = static_cast<int>(ctx.t_verts.size());
  LumpedEvaluation ev;
  ev.levels = lumped_run(n, ks + kt, initial_state, alphabet_at, factors_at,
                         next_state);
  ev.masses = lumped_masses(ev.levels, ks + kt, n);
  std::vector<ProbVector> p_list;
  std::vector<ProbVector> q_list;
  for (int i = 0; i < ks; ++i) p_list.push_back(to_prob(ev.masses[i]));
  for (int j = 0; j < kt; ++j) q_list.push_back(to_prob(ev.masses[ks + j]));

  // At long horizons the group masses span many orders of magnitude, which
  // both bloats the final LP and degrades its dense tableau.  Groups are
  // excluded from the optimization (test forced to reject them) while the
  // excluded mass stays below 1e-12 per hypothesis; the level is tightened
  // by the excluded null mass so the reported errors remain conservative.
  // Every reported number stays within 2e-12 of the untruncated optimum.
  const int d = static_cast<int>(ev.masses.front().size());
  RealVector total_mass = RealVector::Zero(d);
  for (const RealVector& m : ev.masses) total_mass += m;
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return total_mass(a) < total_mass(b); });
  std::vector<char> dropped(d, 0);
  RealVector dropped_mass = RealVector::Zero(ks + kt);
  constexpr double kDropBudget = 1e-12;
  for (int idx : order) {
    bool fits = true;
    for (int v = 0; v < ks + kt; ++v)
      if (dropped_mass(v) + ev.masses[v](idx) > kDropBudget) {
        fits = false;
        break;
      }
    if (!fits) break;
    dropped[idx] = 1;
    for (int v = 0; v < ks + kt; ++v) dropped_mass(v) += ev.masses[v](idx);
  }
  std::vector<int> kept;
  kept.reserve(d);
  for (int y = 0; y < d; ++y)
    if (!dropped[y]) kept.push_back(y);

  ExtReal val = ExtReal::finite(0.0);
  if (static_cast<int>(kept.size()) == d) {
    auto [v0, test] = composite_test_exponent_exact(p_list, q_list, eps);
    val = v0;
    ev.test = test.classical();
  } else {
    double eps_red = eps;
    for (int i = 0; i < ks; ++i) eps_red = std::min(eps_red, eps - dropped_mass(i));
    eps_red = std::max(eps_red, 0.0);
    std::vector<ProbVector> p_red;
    std::vector<ProbVector> q_red;
    const int dk = static_cast<int>(kept.size());
    for (int v = 0; v < ks + kt; ++v) {
      RealVector m(dk);
      for (int y = 0; y < dk; ++y) m(y) = ev.masses[v](kept[y]);
      (v < ks ? p_red : q_red).push_back(to_prob(m));
    }
    auto [v0, test] = composite_test_exponent_exact(p_red, q_red, eps_red);
    val = v0;
    ev.test = RealVector::Zero(d);
    for (int y = 0; y < dk; ++y) ev.test(kept[y]) = test.classical()(y);
  }
  double alpha = 0.0;
  int ai = 0;
  for (int i = 0; i < ks; ++i) {
    const double a =
        1.0 - p_list[i].entries().dot(ev.test);
    if (a > alpha) {
      alpha = a;
      ai = i;
    }
  }
  double beta = 0.0;
  int bj = 0;
  for (int j = 0; j < kt; ++j) {
    const double b = q_list[j].entries().dot(ev.test);
    if (b > beta) {
      beta = b;
      bj = j;
    }
  }
  std::ostringstream wit;
  wit << "alpha: null vertex " << ai << "; beta: alternative vertex " << bj;
  ev.errors = ErrorPair{std::clamp(alpha, 0.0, 1.0), std::clamp(beta, 0.0, 1.0),
                        wit.str()};
  if (val.is_infinite() || beta <= 0.0)
    ev.exponent = ExtReal::infinity();
  else
    ev.exponent = ExtReal::finite(-std::log2(beta) / n);
  return ev;
}

/// ---------------------------------------------------------------------
/// Dense evaluation over the explicit history space (black-box policies and
/// arbitrarily varying families).
/// ---------------------------------------------------------------------

using StepInput = std::function<InputChoice(int, const std::vector<int>&)>;

/// Worst-case error pair for a fixed test, with adversarial sides resolved
/// by exact best response.  `alph` holds per-step symbol counts; `dists`
/// gives, per step and history, one next-symbol kernel per vertex.
struct SideEval {
  double value = 0.0;     // worst acceptance-functional value
  std::string witness;
};

SideEval worst_side_fixed_test(
    const std::vector<int>& alph, long total, const RealVector& functional,
    FamilyKind kind, int num_vertices,
    const std::function<std::vector<RealVector>(int, const std::vector<int>&)>&
        cands,
    const char* side_name) {
  SideEval ev;
  if (kind == FamilyKind::Iid) {
    for (int v = 0; v < num_vertices; ++v) {
      RealVector dist = forward_distribution(
          alph, total, [&](int k, const std::vector<int>& h) {
            return cands(k, h)[v];
          });
      const double val = dist.dot(functional);
      if (v == 0 || val > ev.value) {
        ev.value = val;
        std::ostringstream wit;
        wit << side_name << " vertex " << v;
        ev.witness = wit.str();
      }
    }
  } else {
    ev.value = best_response_value(alph, functional, cands, nullptr);
    std::ostringstream wit;
    wit << "adaptive adversary over " << side_name << " vertices";
    ev.witness = wit.str();
  }
  return ev;
}

/// Joint evaluation with an optimal level-eps test obtained by alternating
/// the exact test LP with best-response separation for adversarial sides.
std::pair<ErrorPair, double> dense_optimal_test_eval(
    const EvalContext& ctx, const std::vector<int>& alph, long total,
    double eps,
    const std::function<std::vector<RealVector>(int, const std::vector<int>&)>&
        s_cands,
    const std::function<std::vector<RealVector>(int, const std::vector<int>&)>&
        t_cands) {
  const int ks = static_cast<int>(ctx.s_verts.size());
  const int kt = static_cast<int>(ctx.t_verts.size());
  std::vector<ProbVector> p_rows;
  std::vector<ProbVector> q_rows;
  for (int v = 0; v < ks; ++v)
    p_rows.push_back(to_prob(forward_distribution(
        alph, total,
        [&](int k, const std::vector<int>& h) { return s_cands(k, h)[v]; })));
  for (int v = 0; v < kt; ++v)
    q_rows.push_back(to_prob(forward_distribution(
        alph, total,
        [&](int k, const std::vector<int>& h) { return t_cands(k, h)[v]; })));

  RealVector test;
  double alpha = 0.0;
  double beta = 0.0;
  std::string wa;
  std::string wb;
  const int kMaxRounds = 200;
  for (int round = 0; round < kMaxRounds; ++round) {
    auto [val, test_op] = composite_test_exponent_exact(p_rows, q_rows, eps);
    test = test_op.classical();
    const RealVector reject = RealVector::Ones(test.size()) - test;
    bool again = false;

    if (ctx.s_kind == FamilyKind::ArbitrarilyVarying) {
      std::shared_ptr<std::vector<std::vector<int>>> table;
      const double a = best_response_value(alph, reject, s_cands, &table);
      if (a > eps + 1e-9) {
        p_rows.push_back(to_prob(forward_distribution(
            alph, total, [&](int k, const std::vector<int>& h) {
              return s_cands(k, h)[(*table)[k][history_rank(alph, h)]];
            })));
        again = true;
      } else {
        alpha = a;
        wa = "adaptive adversary over null vertices";
      }
    } else {
      alpha = 0.0;
      for (int v = 0; v < ks; ++v) {
        const double a = 1.0 - p_rows[v].entries().dot(test);
        if (v == 0 || a > alpha) {
          alpha = a;
          std::ostringstream wit;
          wit << "null vertex " << v;
          wa = wit.str();
        }
      }
    }

    if (ctx.t_kind == FamilyKind::ArbitrarilyVarying) {
      std::shared_ptr<std::vector<std::vector<int>>> table;
      const double b = best_response_value(alph, test, t_cands, &table);
      double lp_beta = val.is_infinite() ? 0.0 : std::exp2(-val.value());
      if (b > lp_beta + 1e-9) {
        q_rows.push_back(to_prob(forward_distribution(
            alph, total, [&](int k, const std::vector<int>& h) {
              return t_cands(k, h)[(*table)[k][history_rank(alph, h)]];
            })));
        again = true;
      } else {
        beta = b;
        wb = "adaptive adversary over alternative vertices";
      }
    } else {
      beta = 0.0;
      for (int v = 0; v < kt; ++v) {
        const double b = q_rows[v].entries().dot(test);
        if (v == 0 || b > beta) {
          beta = b;
          std::ostringstream wit;
          wit << "alternative vertex " << v;
          wb = wit.str();
        }
      }
    }

    if (!again) break;
    if (round + 1 == kMaxRounds)
      throw SolverPreconditionError(
          "adversarial test synthesis did not converge");
  }
  ErrorPair pair{std::clamp(alpha, 0.0, 1.0), std::clamp(beta, 0.0, 1.0),
                 "alpha: " + wa + "; beta: " + wb};
  return {pair, beta};
}

std::function<std::vector<RealVector>(int, const std::vector<int>&)>
policy_candidates(const std::vector<ClassicalChannel>& verts,
                  const StepInput& input_at) {
  return [&verts, input_at](int k, const std::vector<int>& h) {
    const InputChoice c = input_at(k, h);
    std::vector<RealVector> out;
    out.reserve(verts.size());
    for (const auto& v : verts) out.push_back(input_row(v, c));
    return out;
  };
}

double wilson_low(double phat, long nsamp) {
  const double z = 1.959963984540054;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nsamp;
  const double center = phat + z2 / (2.0 * nsamp);
  const double half =
      z * std::sqrt(phat * (1.0 - phat) / nsamp + z2 / (4.0 * nsamp * nsamp));
  return std::clamp((center - half) / denom, 0.0, 1.0);
}

double wilson_high(double phat, long nsamp) {
  const double z = 1.959963984540054;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nsamp;
  const double center = phat + z2 / (2.0 * nsamp);
  const double half =
      z * std::sqrt(phat * (1.0 - phat) / nsamp + z2 / (4.0 * nsamp * nsamp));
  return std::clamp((center + half) / denom, 0.0, 1.0);
}

void validate_policy_for_n(const AdaptivePolicy& policy, int n) {
  if (n < 1) throw InvariantViolationError("horizon must be at least 1");
  if (policy.horizon > 0 && policy.horizon != n)
    throw DimensionMismatchError(
        "policy horizon does not match the requested length");
  if (!policy.input_map && !policy.fsm)
    throw InvariantViolationError("policy specifies no input rule");
}

StepInput resolve_input_map(const AdaptivePolicy& policy) {
  if (policy.input_map) return policy.input_map;
  const FsmPolicy fsm = *policy.fsm;
  return [fsm](int step, const std::vector<int>& h) {
    int m = fsm.initial_state;
    for (size_t i = 0; i < h.size(); ++i) m = fsm.next(m, h[i]);
    return fsm.choose(step, m);
  };
}

}  // namespace

HypothesisFamily HypothesisFamily::iid(HypothesisSet base) {
  HypothesisFamily f;
  f.base = std::move(base);
  f.kind = FamilyKind::Iid;
  return f;
}

HypothesisFamily HypothesisFamily::arbitrarily_varying(HypothesisSet base) {
  HypothesisFamily f;
  f.base = std::move(base);
  f.kind = FamilyKind::ArbitrarilyVarying;
  return f;
}

HypothesisFamily HypothesisFamily::slightly_varying(HypothesisSet base,
                                                    double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw InvariantViolationError(
        "slightly varying tolerance must lie in [0, 1]");
  if (!base.is_classical())
    throw SolverPreconditionError(
        "slightly varying families are defined for classical channels");
  HypothesisFamily f;
  f.base = std::move(base);
  f.kind = FamilyKind::SlightlyVarying;
  f.epsilon = epsilon;
  return f;
}

bool family_member_check(const HypothesisFamily& fam,
                         const std::vector<ClassicalChannel>& seq) {
  if (!fam.base.is_classical())
    throw DimensionMismatchError(
        "classical sequence checked against a quantum family");
  const auto& verts = fam.base.classical;
  for (const auto& ch : seq)
    if (!same_shape(ch, verts.front()))
      throw DimensionMismatchError("sequence element shape mismatch");
  if (seq.empty()) return true;
  auto matches_some_vertex = [&](const ClassicalChannel& ch) {
    for (const auto& v : verts)
      if (channels_equal(ch, v)) return true;
    return false;
  };
  switch (fam.kind) {
    case FamilyKind::Iid: {
      for (const auto& v : verts) {
        bool all = true;
        for (const auto& ch : seq)
          if (!channels_equal(ch, v)) {
            all = false;
            break;
          }
        if (all) return true;
      }
      return false;
    }
    case FamilyKind::ArbitrarilyVarying: {
      for (const auto& ch : seq)
        if (!matches_some_vertex(ch)) return false;
      return true;
    }
    case FamilyKind::SlightlyVarying: {
      for (const auto& ch : seq)
        if (!matches_some_vertex(ch)) return false;
      for (size_t i = 0; i < seq.size(); ++i)
        for (size_t j = i + 1; j < seq.size(); ++j)
          if (channel_tv(seq[i], seq[j]) > fam.epsilon + 1e-12) return false;
      return true;
    }
  }
  return false;
}

bool family_member_check(const HypothesisFamily& fam,
                         const std::vector<QuantumChannel>& seq) {
  if (fam.base.is_classical())
    throw DimensionMismatchError(
        "quantum sequence checked against a classical family");
  if (fam.kind == FamilyKind::SlightlyVarying)
    throw SolverPreconditionError(
        "slightly varying membership is defined for classical channels");
  const auto& verts = fam.base.quantum;
  for (const auto& ch : seq)
    if (ch.in_dim() != verts.front().in_dim() ||
        ch.out_dim() != verts.front().out_dim())
      throw DimensionMismatchError("sequence element shape mismatch");
  if (seq.empty()) return true;
  if (fam.kind == FamilyKind::Iid) {
    for (const auto& v : verts) {
      bool all = true;
      for (const auto& ch : seq)
        if (!quantum_equal(ch, v)) {
          all = false;
          break;
        }
      if (all) return true;
    }
    return false;
  }
  for (const auto& ch : seq) {
    bool found = false;
    for (const auto& v : verts)
      if (quantum_equal(ch, v)) {
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

std::pair<double, AdversaryPolicy> adversary_best_response(
    const TestOperator& region, const std::vector<ProbVector>& q_vertices,
    int n) {
  if (!region.is_classical())
    throw SolverPreconditionError(
        "adversary search needs a classical acceptance region");
  if (q_vertices.empty())
    throw InvariantViolationError("adversary needs at least one vertex");
  if (n < 1) throw InvariantViolationError("horizon must be at least 1");
  const int omega = q_vertices.front().size();
  for (const auto& q : q_vertices)
    if (q.size() != omega)
      throw DimensionMismatchError("adversary vertices have mixed sizes");
  const long total =
      checked_power(omega, n, kDenseCap, "adversary best response");
  if (region.classical().size() != total)
    throw DimensionMismatchError(
        "acceptance region size does not match the history space");

  std::vector<int> alph(n, omega);
  std::vector<RealVector> rows;
  rows.reserve(q_vertices.size());
  for (const auto& q : q_vertices) rows.push_back(q.entries());
  std::shared_ptr<std::vector<std::vector<int>>> table;
  const double value = best_response_value(
      alph, region.classical(),
      [&rows](int, const std::vector<int>&) { return rows; }, &table);

  AdversaryPolicy pol;
  pol.horizon = n;
  pol.table = table;
  pol.chooser = [table, omega](int step, const std::vector<int>& h) {
    long r = 0;
    for (int sym : h) r = r * omega + sym;
    return (*table)[step][r];
  };
  return {value, pol};
}

TestOperator universal_adversarial_test(
    const std::vector<ProbVector>& p_vertices,
    const std::vector<ProbVector>& q_vertices, int n, double eps) {
  if (p_vertices.empty() || q_vertices.empty())
    throw InvariantViolationError("vertex sets must be nonempty");
  check_eps(eps);
  const int omega = p_vertices.front().size();
  for (const auto& p : p_vertices)
    if (p.size() != omega)
      throw DimensionMismatchError("null vertices have mixed sizes");
  for (const auto& q : q_vertices)
    if (q.size() != omega)
      throw DimensionMismatchError(
          "alternative vertices do not match the null alphabet");
  const long total =
      checked_power(omega, n, kDenseCap, "universal adversarial test");

  // KL distance from an empirical type to the convex hull of the null set.
  const int kp = static_cast<int>(p_vertices.size());
  auto type_distance = [&](const RealVector& type_hat) -> double {
    for (int y = 0; y < omega; ++y) {
      if (type_hat(y) <= 0.0) continue;
      bool covered = false;
      for (const auto& p : p_vertices)
        if (p[y] > 0.0) covered = true;
      if (!covered) return std::numeric_limits<double>::infinity();
    }
    if (kp == 1)
      return kl_divergence(ProbVector(type_hat), p_vertices.front()).value();
    auto mix_at = [&](const RealVector& w) {
      RealVector mix = RealVector::Zero(omega);
      for (int i = 0; i < kp; ++i) mix += w(i) * p_vertices[i].entries();
      return mix;
    };
    Objective f = [&](const RealVector& w) {
      RealVector mix = mix_at(w);
      double acc = 0.0;
      for (int y = 0; y < omega; ++y) {
        if (type_hat(y) <= 0.0) continue;
        const double m = std::max(mix(y), 1e-300);
        acc += type_hat(y) * std::log2(type_hat(y) / m);
      }
      return acc;
    };
    Subgradient g = [&](const RealVector& w) {
      RealVector mix = mix_at(w);
      RealVector grad = RealVector::Zero(kp);
      constexpr double kLn2 = 0.6931471805599453;
      for (int i = 0; i < kp; ++i)
        for (int y = 0; y < omega; ++y) {
          if (type_hat(y) <= 0.0) continue;
          const double m = std::max(mix(y), 1e-300);
          grad(i) -= type_hat(y) * p_vertices[i][y] / (m * kLn2);
        }
      return grad;
    };
    ConvexOptions opt;
    opt.restarts = 6;
    opt.max_iter = 2000;
    opt.tol = 1e-10;
    opt.seed = 17;
    SimplexDomain dom{{kp}};
    ConvexReport rep = minimize_convex_on_simplices(f, g, dom, opt);
    return std::max(rep.value, 0.0);
  };

  // Distance of every history's type, memoised per type.
  std::map<std::vector<int>, double> dist_by_type;
  std::vector<double> hist_dist(total);
  std::vector<int> alph(n, omega);
  for (long r = 0; r < total; ++r) {
    std::vector<int> h = decode_history(alph, n, r);
    std::vector<int> counts(omega, 0);
    for (int sym : h) ++counts[sym];
    auto it = dist_by_type.find(counts);
    if (it == dist_by_type.end()) {
      RealVector type_hat(omega);
      for (int y = 0; y < omega; ++y)
        type_hat(y) = static_cast<double>(counts[y]) / n;
      it = dist_by_type.emplace(counts, type_distance(type_hat)).first;
    }
    hist_dist[r] = it->second;
  }

  std::vector<double> radii;
  for (const auto& [type, d] : dist_by_type)
    if (std::isfinite(d)) radii.push_back(d);
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end(),
                          [](double a, double b) { return b - a < 1e-12; }),
              radii.end());

  auto region_at = [&](double r) {
    RealVector m = RealVector::Zero(total);
    for (long i = 0; i < total; ++i)
      if (hist_dist[i] <= r + 1e-12) m(i) = 1.0;
    return m;
  };
  auto worst_alpha = [&](const RealVector& m) {
    RealVector reject = RealVector::Ones(total) - m;
    return adversary_best_response(TestOperator(reject), p_vertices, n).first;
  };

  // Smallest radius whose exact worst-case type-I error is within eps.
  int lo = 0;
  int hi = static_cast<int>(radii.size()) - 1;
  if (hi < 0)
    throw InvariantViolationError("null set admits no typical histories");
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (worst_alpha(region_at(radii[mid])) <= eps)
      hi = mid;
    else
      lo = mid + 1;
  }
  RealVector m = region_at(radii[lo]);
  if (worst_alpha(m) > eps) m = region_at(radii.back());
  return TestOperator(m);
}

std::pair<ErrorPair, ExtReal> evaluate_parallel_strategy(
    const HypothesisFamily& s, const HypothesisFamily& t,
    const std::vector<ProbVector>& inputs, int n, double eps) {
  if (n < 1) throw InvariantViolationError("horizon must be at least 1");
  check_eps(eps);
  if (inputs.empty())
    throw InvariantViolationError("parallel strategy needs at least one input");
  EvalContext ctx = make_context(s, t);
  for (const auto& nu : inputs)
    if (nu.size() != ctx.omega_in)
      throw DimensionMismatchError(
          "input distribution size does not match the channel input alphabet");

  // Per copy: a point-mass input keeps the bare output alphabet; a genuinely
  // randomised input retains the drawn symbol, enlarging the alphabet to
  // (input, output) pairs.
  const int kv = static_cast<int>(ctx.s_verts.size() + ctx.t_verts.size());
  std::vector<int> alph(n);
  std::vector<std::vector<RealVector>> copy_rows(n);  // [copy][vertex]
  auto vertex_at = [&](int v) -> const ClassicalChannel& {
    const int ks = static_cast<int>(ctx.s_verts.size());
    return v < ks ? ctx.s_verts[v] : ctx.t_verts[v - ks];
  };
  for (int i = 0; i < n; ++i) {
    const ProbVector& nu = inputs[i % inputs.size()];
    int arg = 0;
    double top = 0.0;
    for (int x = 0; x < nu.size(); ++x)
      if (nu[x] > top) {
        top = nu[x];
        arg = x;
      }
    const bool point = top >= 1.0 - 1e-12;
    alph[i] = point ? ctx.omega_out : ctx.omega_in * ctx.omega_out;
    copy_rows[i].reserve(kv);
    for (int v = 0; v < kv; ++v) {
      const ClassicalChannel& ch = vertex_at(v);
      if (point) {
        copy_rows[i].push_back(input_row(ch, InputChoice(arg)));
      } else {
        RealVector joint = RealVector::Zero(alph[i]);
        for (int x = 0; x < ctx.omega_in; ++x)
          for (int y = 0; y < ctx.omega_out; ++y)
            joint(x * ctx.omega_out + y) = nu[x] * ch.prob(y, x);
        copy_rows[i].push_back(joint);
      }
    }
  }

  long total = 1;
  bool dense_ok = true;
  for (int i = 0; i < n; ++i) {
    total *= alph[i];
    if (total > kDenseCap) {
      dense_ok = false;
      break;
    }
  }

  const int ks = static_cast<int>(ctx.s_verts.size());
  // A parallel schedule is trivially finite-state, so iid-vs-iid instances
  // always go through the merged induction: it is exact at any horizon and
  // keeps the final linear program at one variable per likelihood class
  // instead of one per outcome string.
  if (ctx.s_kind == FamilyKind::Iid && ctx.t_kind == FamilyKind::Iid) {
    LumpedEvaluation ev = lumped_evaluate(
        ctx, n, eps, 1, 0, [&](int k) { return alph[k]; },
        [&](int k, int) { return copy_rows[k]; },
        [](int, int, int) { return 0; });
    return {ev.errors, ev.exponent};
  }
  if (!dense_ok) {
    throw SizeCapError(
        "adversarial parallel evaluation above the dense history cap is "
        "not supported");
  }

  auto s_cands = [&](int k, const std::vector<int>&) {
    return std::vector<RealVector>(copy_rows[k].begin(),
                                   copy_rows[k].begin() + ks);
  };
  auto t_cands = [&](int k, const std::vector<int>&) {
    return std::vector<RealVector>(copy_rows[k].begin() + ks,
                                   copy_rows[k].end());
  };
  auto [pair, beta] =
      dense_optimal_test_eval(ctx, alph, total, eps, s_cands, t_cands);
  ExtReal expo = beta <= 0.0 ? ExtReal::infinity()
                             : ExtReal::finite(-std::log2(beta) / n);
  return {pair, expo};
}

ErrorPair evaluate_adaptive_strategy(const AdaptivePolicy& policy,
                                     const HypothesisFamily& s,
                                     const HypothesisFamily& t, int n,
                                     double eps) {
  validate_policy_for_n(policy, n);
  check_eps(eps);
  EvalContext ctx = make_context(s, t);
  const int ks = static_cast<int>(ctx.s_verts.size());
  const int kt = static_cast<int>(ctx.t_verts.size());

  const bool can_merge = policy.fsm.has_value() && !policy.final_test &&
                         ctx.s_kind == FamilyKind::Iid &&
                         ctx.t_kind == FamilyKind::Iid;
  if (can_merge) {
    const FsmPolicy& fsm = *policy.fsm;
    auto factors = [&](int k, int state) {
      const InputChoice c = fsm.choose(k, state);
      std::vector<RealVector> rows;
      rows.reserve(ks + kt);
      for (const auto& v : ctx.s_verts) rows.push_back(input_row(v, c));
      for (const auto& v : ctx.t_verts) rows.push_back(input_row(v, c));
      return rows;
    };
    LumpedEvaluation ev = lumped_evaluate(
        ctx, n, eps, fsm.num_states, fsm.initial_state,
        [&](int) { return ctx.omega_out; }, factors,
        [&](int, int state, int y) { return fsm.next(state, y); });
    return ev.errors;
  }

  const long total = checked_power(ctx.omega_out, n, kDenseCap,
                                   "adaptive strategy evaluation");
  std::vector<int> alph(n, ctx.omega_out);
  StepInput input_at = resolve_input_map(policy);
  auto s_cands = policy_candidates(ctx.s_verts, input_at);
  auto t_cands = policy_candidates(ctx.t_verts, input_at);

  if (policy.final_test) {
    if (!policy.final_test->is_classical())
      throw SolverPreconditionError("final test must be classical");
    const RealVector& test = policy.final_test->classical();
    if (test.size() != total)
      throw DimensionMismatchError(
          "final test size does not match the history space");
    const RealVector reject = RealVector::Ones(total) - test;
    SideEval a = worst_side_fixed_test(alph, total, reject, ctx.s_kind, ks,
                                       s_cands, "null");
    SideEval b = worst_side_fixed_test(alph, total, test, ctx.t_kind, kt,
                                       t_cands, "alternative");
    return ErrorPair{std::clamp(a.value, 0.0, 1.0),
                     std::clamp(b.value, 0.0, 1.0),
                     "alpha: " + a.witness + "; beta: " + b.witness};
  }

  auto [pair, beta] =
      dense_optimal_test_eval(ctx, alph, total, eps, s_cands, t_cands);
  (void)beta;
  return pair;
}

MonteCarloReport evaluate_adaptive_monte_carlo(const AdaptivePolicy& policy,
                                               const HypothesisFamily& s,
                                               const HypothesisFamily& t,
                                               int n, double eps, long samples,
                                               std::uint64_t seed) {
  validate_policy_for_n(policy, n);
  check_eps(eps);
  if (samples < 1)
    throw InvariantViolationError("sample count must be positive");
  if (!policy.fsm || policy.final_test)
    throw SolverPreconditionError(
        "sampled evaluation needs a finite-state policy with the default "
        "optimal test");
  EvalContext ctx = make_context(s, t);
  if (ctx.s_kind != FamilyKind::Iid || ctx.t_kind != FamilyKind::Iid)
    throw SolverPreconditionError(
        "sampled evaluation supports iid families only");
  const int ks = static_cast<int>(ctx.s_verts.size());
  const int kt = static_cast<int>(ctx.t_verts.size());
  const FsmPolicy& fsm = *policy.fsm;
  auto factors = [&](int k, int state) {
    const InputChoice c = fsm.choose(k, state);
    std::vector<RealVector> rows;
    rows.reserve(ks + kt);
    for (const auto& v : ctx.s_verts) rows.push_back(input_row(v, c));
    for (const auto& v : ctx.t_verts) rows.push_back(input_row(v, c));
    return rows;
  };
  LumpedEvaluation ev = lumped_evaluate(
      ctx, n, eps, fsm.num_states, fsm.initial_state,
      [&](int) { return ctx.omega_out; }, factors,
      [&](int, int state, int y) { return fsm.next(state, y); });

  // Sample acceptance per vertex; run r of vertex tag v draws from the
  // stream derived from (seed, v, r), so totals are order-independent.
  auto acceptance_rate = [&](int tag) {
    const std::uint64_t vseed = derive_stream(seed, 0x5eed0000ull + tag);
    long accepted = 0;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (long r = 0; r < samples; ++r) {
      std::mt19937_64 rng = make_rng(vseed, static_cast<std::uint64_t>(r));
      int g = 0;
      for (int k = 0; k < n; ++k) {
        const int state = ev.levels.state[k][g];
        const RealVector row = factors(k, state)[tag];
        double u = unif(rng);
        int y = 0;
        for (; y < ctx.omega_out - 1; ++y) {
          u -= row(y);
          if (u <= 0.0) break;
        }
        g = ev.levels.trans[k][static_cast<size_t>(g) * ctx.omega_out + y];
      }
      if (unif(rng) < ev.test(g)) ++accepted;
    }
    return static_cast<double>(accepted) / static_cast<double>(samples);
  };

  MonteCarloReport rep;
  rep.samples = samples;
  double worst_alpha = -1.0;
  int ai = 0;
  double a_rate = 0.0;
  for (int i = 0; i < ks; ++i) {
    const double rate = acceptance_rate(i);
    const double alpha = 1.0 - rate;
    if (alpha > worst_alpha) {
      worst_alpha = alpha;
      ai = i;
      a_rate = rate;
    }
  }
  double worst_beta = -1.0;
  int bj = 0;
  for (int j = 0; j < kt; ++j) {
    const double rate = acceptance_rate(ks + j);
    if (rate > worst_beta) {
      worst_beta = rate;
      bj = j;
    }
  }
  std::ostringstream wit;
  wit << "alpha: null vertex " << ai << "; beta: alternative vertex " << bj
      << " (sampled)";
  rep.errors = ErrorPair{worst_alpha, worst_beta, wit.str()};
  rep.alpha_ci_low = 1.0 - wilson_high(a_rate, samples);
  rep.alpha_ci_high = 1.0 - wilson_low(a_rate, samples);
  rep.beta_ci_low = wilson_low(worst_beta, samples);
  rep.beta_ci_high = wilson_high(worst_beta, samples);
  rep.exponent = worst_beta <= 0.0
                     ? ExtReal::infinity()
                     : ExtReal::finite(-std::log2(worst_beta) / n);
  return rep;
}

std::pair<double, double> estimate_exponent(
    const std::map<int, double>& beta_by_n, int n_min, int n_max) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [n, beta] : beta_by_n) {
    if (n < n_min || n > n_max) continue;
    if (!(beta > 0.0) || beta > 1.0)
      throw InvariantViolationError(
          "type-II errors must lie in (0, 1] for slope fitting");
    xs.push_back(static_cast<double>(n));
    ys.push_back(-std::log2(beta));
  }
  if (xs.size() < 3)
    throw InvariantViolationError(
        "slope fitting needs at least 3 points in the window");
  const double m = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  const double r2 = syy <= 1e-30 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return {slope, r2};
}

Example12 example12() {
  auto ch = [](std::initializer_list<ProbVector> rows) {
    return ClassicalChannel(std::vector<ProbVector>(rows));
  };
  const ClassicalChannel e1 =
      ch({ProbVector{0.5, 0.0, 0.5, 0.0}, ProbVector{0.5, 0.0, 0.5, 0.0}});
  const ClassicalChannel e2 =
      ch({ProbVector{0.0, 0.5, 0.0, 0.5}, ProbVector{0.0, 0.5, 0.0, 0.5}});
  const ClassicalChannel f1 =
      ch({ProbVector{0.75, 0.0, 0.25, 0.0}, ProbVector{0.5, 0.0, 0.5, 0.0}});
  const ClassicalChannel f2 =
      ch({ProbVector{0.0, 0.5, 0.0, 0.5}, ProbVector{0.0, 0.75, 0.0, 0.25}});

  Example12 ex;
  ex.s = HypothesisSet::classical_set({e1, e2}, false);
  ex.t = HypothesisSet::classical_set({f1, f2}, false);

  // Memory: 0 = nothing seen; 1 / 2 = the second bit of the first output was
  // 0 / 1.  The first input is arbitrary (0); afterwards that bit, which
  // identifies the pair member in the box, is fed back as the input.
  FsmPolicy fsm;
  fsm.num_states = 3;
  fsm.initial_state = 0;
  fsm.next = [](int m, int y) { return m == 0 ? 1 + (y & 1) : m; };
  fsm.choose = [](int, int m) { return InputChoice(m == 2 ? 1 : 0); };

  AdaptivePolicy policy;
  policy.horizon = 0;
  policy.fsm = fsm;
  policy.input_map = [](int, const std::vector<int>& h) {
    return InputChoice(h.empty() ? 0 : (h.front() & 1));
  };
  ex.canonical = policy;
  return ex;
}

}  // namespace chdisc
