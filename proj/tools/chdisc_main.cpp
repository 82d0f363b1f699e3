#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "../vendor/CLI11.hpp"
#include "chdisc/channel_div.hpp"
#include "chdisc/divergences.hpp"
#include "chdisc/errors.hpp"
#include "chdisc/exponents.hpp"
#include "chdisc/json_io.hpp"
#include "chdisc/protocols.hpp"

using chdisc::io::Json;
using chdisc::io::SchemaError;

namespace {

struct Params {
  double eps = 0.05;
  int n = 1;
  std::vector<int> n_list;
  int restarts = 32;
  std::uint64_t seed = 0;
  long cap = 4096;
  bool monte_carlo = false;
  long samples = 1000000;
};

struct CliOverrides {
  std::optional<double> eps;
  std::optional<int> n;
  std::optional<std::string> n_list;
  std::optional<int> restarts;
  std::optional<std::uint64_t> seed;
  std::optional<long> cap;
  bool monte_carlo = false;
  std::optional<long> samples;
};

std::vector<int> parse_n_list_string(const std::string& text) {
  std::vector<int> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const int lo = std::stoi(text.substr(0, dots));
    const int hi = std::stoi(text.substr(dots + 2));
    if (hi < lo) throw SchemaError("n-list", "range upper end below lower end");
    for (int n = lo; n <= hi; ++n) out.push_back(n);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  if (out.empty()) throw SchemaError("n-list", "empty length list");
  return out;
}

Params resolve_params(const Json& cfg, const CliOverrides& cli) {
  Params p;
  if (cfg.contains("params")) {
    const Json& blk = cfg.at("params");
    if (!blk.is_object()) throw SchemaError("params", "expected an object");
    p.eps = chdisc::io::number_field_or(blk, "eps", "params", p.eps);
    p.n = static_cast<int>(
        chdisc::io::number_field_or(blk, "n", "params", p.n));
    p.restarts = static_cast<int>(
        chdisc::io::number_field_or(blk, "restarts", "params", p.restarts));
    p.seed = static_cast<std::uint64_t>(
        chdisc::io::number_field_or(blk, "seed", "params", 0.0));
    p.cap = static_cast<long>(
        chdisc::io::number_field_or(blk, "cap", "params", p.cap));
    p.samples = static_cast<long>(
        chdisc::io::number_field_or(blk, "samples", "params", p.samples));
    if (blk.contains("monte_carlo")) {
      if (!blk.at("monte_carlo").is_boolean())
        throw SchemaError("params.monte_carlo", "expected a boolean");
      p.monte_carlo = blk.at("monte_carlo").get<bool>();
    }
    if (blk.contains("n_list")) {
      const Json& nl = blk.at("n_list");
      if (!nl.is_array())
        throw SchemaError("params.n_list", "expected an array of integers");
      for (size_t i = 0; i < nl.size(); ++i)
        p.n_list.push_back(static_cast<int>(chdisc::io::number_at(
            nl[i], "params.n_list[" + std::to_string(i) + "]")));
    }
  }
  if (cli.eps) p.eps = *cli.eps;
  if (cli.n) p.n = *cli.n;
  if (cli.n_list) p.n_list = parse_n_list_string(*cli.n_list);
  if (cli.restarts) p.restarts = *cli.restarts;
  if (cli.seed) p.seed = *cli.seed;
  if (cli.cap) p.cap = *cli.cap;
  if (cli.monte_carlo) p.monte_carlo = true;
  if (cli.samples) p.samples = *cli.samples;
  return p;
}

const Json& block_of(const Json& cfg, const std::string& key) {
  if (!cfg.contains(key))
    throw SchemaError(key, "missing block required by this config kind");
  const Json& blk = cfg.at(key);
  if (!blk.is_object()) throw SchemaError(key, "expected an object");
  return blk;
}

std::string string_field(const Json& blk, const std::string& key,
                         const std::string& path) {
  if (!blk.contains(key) || !blk.at(key).is_string())
    throw SchemaError(path + "." + key, "missing required string field");
  return blk.at(key).get<std::string>();
}

std::string ext_csv(const chdisc::ExtReal& v) {
  return v.is_infinite() ? "inf" : chdisc::io::format_number(v.value());
}

// --- divergence ----------------------------------------------------------

Json run_divergence(const Json& cfg, const Params& params) {
  const Json& blk = block_of(cfg, "divergence");
  const std::string name = string_field(blk, "name", "divergence");
  const double eps =
      chdisc::io::number_field_or(blk, "eps", "divergence", params.eps);
  Json result = Json::object();
  result["name"] = name;

  auto put_ext = [&result](const chdisc::ExtReal& v) {
    result["infinite"] = v.is_infinite();
    if (!v.is_infinite()) result["value"] = v.value();
  };
  auto prob_at = [&blk](const char* key) {
    if (!blk.contains(key))
      throw SchemaError(std::string("divergence.") + key,
                        "missing required field");
    return chdisc::io::parse_prob(blk.at(key),
                                  std::string("divergence.") + key);
  };
  auto density_at = [&blk](const char* key) {
    if (!blk.contains(key))
      throw SchemaError(std::string("divergence.") + key,
                        "missing required field");
    return chdisc::io::parse_density(blk.at(key),
                                     std::string("divergence.") + key);
  };

  if (name == "kl") {
    put_ext(chdisc::kl_divergence(prob_at("p"), prob_at("q")));
  } else if (name == "quantum") {
    put_ext(chdisc::quantum_relative_entropy(density_at("rho"),
                                             density_at("sigma")));
  } else if (name == "dmax") {
    chdisc::DensityMatrix rho = blk.contains("rho")
                                    ? density_at("rho")
                                    : chdisc::DensityMatrix::diagonal(
                                          prob_at("p"));
    chdisc::DensityMatrix sigma = blk.contains("sigma")
                                      ? density_at("sigma")
                                      : chdisc::DensityMatrix::diagonal(
                                            prob_at("q"));
    put_ext(chdisc::dmax(rho, sigma));
  } else if (name == "dh") {
    chdisc::DhResult dh =
        blk.contains("rho")
            ? chdisc::dh_quantum(density_at("rho"), density_at("sigma"), eps)
            : chdisc::dh_classical(prob_at("p"), prob_at("q"), eps);
    put_ext(dh.value);
    Json cert = Json::object();
    cert["threshold"] = dh.test.threshold;
    cert["gamma"] = dh.test.gamma;
    cert["achieved_alpha"] = dh.test.achieved_alpha;
    cert["achieved_beta"] = dh.test.achieved_beta;
    result["certificate"] = cert;
  } else if (name == "dm-lower") {
    chdisc::MeasuredLowerResult mlr = chdisc::measured_relative_entropy_lower(
        density_at("rho"), density_at("sigma"), params.restarts, params.seed);
    const bool inf = std::isinf(mlr.value);
    result["infinite"] = inf;
    if (!inf) result["value"] = mlr.value;
    Json cert = Json::object();
    cert["povm_outcomes"] = mlr.povm.num_outcomes();
    result["certificate"] = cert;
  } else {
    throw SchemaError("divergence.name",
                      "must be one of kl | quantum | dmax | dh | dm-lower");
  }
  return result;
}

// --- channel divergence --------------------------------------------------

Json channel_div_report_json(const chdisc::ChannelDivReport& rep) {
  Json j = Json::object();
  j["lower"] = chdisc::io::ext_real_json(rep.lower);
  j["upper"] = chdisc::io::ext_real_json(rep.upper);
  Json per_n = Json::object();
  for (const auto& [n, v] : rep.per_n_values)
    per_n[std::to_string(n)] = chdisc::io::ext_real_json(v);
  j["per_n"] = per_n;
  j["iterations"] = rep.iterations;
  j["converged"] = rep.converged;
  return j;
}

Json run_channel_div(const Json& cfg, const Params& params) {
  const Json& blk = block_of(cfg, "channel_div");
  const std::string name = string_field(blk, "name", "channel_div");
  Json result = Json::object();
  result["name"] = name;

  auto classical_at = [&blk](const char* key) {
    if (!blk.contains(key))
      throw SchemaError(std::string("channel_div.") + key,
                        "missing required field");
    return chdisc::io::parse_classical_channel(
        blk.at(key), std::string("channel_div.") + key);
  };
  auto quantum_at = [&blk](const char* key) {
    if (!blk.contains(key))
      throw SchemaError(std::string("channel_div.") + key,
                        "missing required field");
    return chdisc::io::parse_quantum_channel(
        blk.at(key), std::string("channel_div.") + key);
  };

  if (name == "classical") {
    chdisc::ExtReal v =
        chdisc::classical_channel_divergence(classical_at("e"),
                                             classical_at("f"));
    result["infinite"] = v.is_infinite();
    if (!v.is_infinite()) result["value"] = v.value();
  } else if (name == "quantum-lower") {
    result["report"] = channel_div_report_json(
        chdisc::quantum_channel_divergence_lower(quantum_at("e"),
                                                 quantum_at("f"),
                                                 params.restarts,
                                                 params.seed));
  } else if (name == "dmax") {
    chdisc::ExtReal v = chdisc::dmax_channel(quantum_at("e"), quantum_at("f"));
    result["infinite"] = v.is_infinite();
    if (!v.is_infinite()) result["value"] = v.value();
  } else if (name == "regularized-bracket") {
    result["report"] = channel_div_report_json(chdisc::regularized_bracket(
        quantum_at("e"), quantum_at("f"), params.restarts, params.seed));
  } else {
    throw SchemaError("channel_div.name",
                      "must be one of classical | quantum-lower | dmax | "
                      "regularized-bracket");
  }
  return result;
}

// --- exponent ------------------------------------------------------------

Json run_exponent(const Json& cfg, const Params& params, std::string* csv) {
  const Json& blk = block_of(cfg, "exponent");
  const std::string name = string_field(blk, "name", "exponent");
  chdisc::HypothesisSet s = [&] {
    if (blk.contains("example12") && blk.at("example12").is_boolean() &&
        blk.at("example12").get<bool>())
      return chdisc::example12().s;
    return chdisc::io::parse_hypothesis_set(block_of(blk, "s"), "exponent.s");
  }();
  chdisc::HypothesisSet t = [&] {
    if (blk.contains("example12") && blk.at("example12").is_boolean() &&
        blk.at("example12").get<bool>())
      return chdisc::example12().t;
    return chdisc::io::parse_hypothesis_set(block_of(blk, "t"), "exponent.t");
  }();

  chdisc::ExponentReport rep;
  if (name == "parallel-finite") {
    rep = chdisc::parallel_exponent_finite_classical(s, t);
  } else if (name == "convex") {
    rep = chdisc::convex_classical_exponent(s, t, params.restarts, params.seed);
  } else if (name == "iid-bound") {
    rep = chdisc::worst_case_iid_exponent(s, t, params.restarts, params.seed);
  } else if (name == "level-n") {
    const int level = static_cast<int>(
        chdisc::io::number_field_or(blk, "n", "exponent", params.n));
    rep = chdisc::level_n_hull_bracket(s, t, level, params.restarts,
                                       params.seed);
  } else {
    throw SchemaError("exponent.name",
                      "must be one of parallel-finite | convex | iid-bound | "
                      "level-n");
  }

  if (csv) {
    std::ostringstream os;
    os << "instance,value,lower,upper\n";
    os << name << "," << ext_csv(rep.value) << "," << ext_csv(rep.lower) << ","
       << ext_csv(rep.upper) << "\n";
    *csv = os.str();
  }
  Json result = Json::object();
  result["name"] = name;
  result["report"] = chdisc::io::exponent_report_json(rep);
  return result;
}

// --- simulate ------------------------------------------------------------

struct SimRow {
  int n = 0;
  double alpha = 0.0;
  double beta = 0.0;
  chdisc::ExtReal exponent = chdisc::ExtReal::finite(0.0);
  chdisc::ExtReal ci_low = chdisc::ExtReal::finite(0.0);
  chdisc::ExtReal ci_high = chdisc::ExtReal::finite(0.0);
};

chdisc::AdaptivePolicy parse_fsm_policy(const Json& blk,
                                        const std::string& path) {
  const int num_states = static_cast<int>(
      chdisc::io::number_field(blk, "num_states", path));
  const int initial = static_cast<int>(
      chdisc::io::number_field_or(blk, "initial", path, 0.0));
  if (!blk.contains("next") || !blk.at("next").is_array())
    throw SchemaError(path + ".next",
                      "expected a [state][output] transition table");
  std::vector<std::vector<int>> next_tab;
  for (size_t m = 0; m < blk.at("next").size(); ++m) {
    const Json& row = blk.at("next")[m];
    if (!row.is_array())
      throw SchemaError(path + ".next[" + std::to_string(m) + "]",
                        "expected an array");
    std::vector<int> r;
    for (size_t y = 0; y < row.size(); ++y)
      r.push_back(static_cast<int>(chdisc::io::number_at(
          row[y],
          path + ".next[" + std::to_string(m) + "][" + std::to_string(y) +
              "]")));
    next_tab.push_back(r);
  }
  if (static_cast<int>(next_tab.size()) != num_states)
    throw SchemaError(path + ".next", "one row per state required");
  if (!blk.contains("input_for_state") ||
      !blk.at("input_for_state").is_array())
    throw SchemaError(path + ".input_for_state",
                      "expected one input per state");
  std::vector<chdisc::InputChoice> inputs;
  const Json& ifs = blk.at("input_for_state");
  for (size_t m = 0; m < ifs.size(); ++m) {
    const std::string ip = path + ".input_for_state[" + std::to_string(m) + "]";
    if (ifs[m].is_array())
      inputs.emplace_back(chdisc::io::parse_prob(ifs[m], ip));
    else
      inputs.emplace_back(
          static_cast<int>(chdisc::io::number_at(ifs[m], ip)));
  }
  if (static_cast<int>(inputs.size()) != num_states)
    throw SchemaError(path + ".input_for_state", "one input per state required");

  chdisc::FsmPolicy fsm;
  fsm.num_states = num_states;
  fsm.initial_state = initial;
  fsm.next = [next_tab](int m, int y) {
    if (m < 0 || m >= static_cast<int>(next_tab.size()) || y < 0 ||
        y >= static_cast<int>(next_tab[m].size()))
      throw chdisc::DimensionMismatchError(
          "transition table lookup out of range");
    return next_tab[m][y];
  };
  fsm.choose = [inputs](int, int m) { return inputs.at(m); };

  chdisc::AdaptivePolicy pol;
  pol.fsm = fsm;
  pol.input_map = [fsm](int step, const std::vector<int>& h) {
    int m = fsm.initial_state;
    for (int y : h) m = fsm.next(m, y);
    return fsm.choose(step, m);
  };
  return pol;
}

Json run_simulate(const Json& cfg, const Params& params, std::string* csv) {
  const Json& blk = block_of(cfg, "simulate");
  const std::string strategy = string_field(blk, "strategy", "simulate");
  const bool builtin = blk.contains("example12") &&
                       blk.at("example12").is_boolean() &&
                       blk.at("example12").get<bool>();
  chdisc::HypothesisFamily s = builtin
      ? chdisc::HypothesisFamily::iid(chdisc::example12().s)
      : chdisc::io::parse_family(block_of(blk, "s"), "simulate.s");
  chdisc::HypothesisFamily t = builtin
      ? chdisc::HypothesisFamily::iid(chdisc::example12().t)
      : chdisc::io::parse_family(block_of(blk, "t"), "simulate.t");

  std::vector<int> lengths = params.n_list;
  if (lengths.empty()) lengths.push_back(params.n);

  std::vector<SimRow> rows;
  bool any_monte_carlo = false;

  auto run_adaptive = [&](const chdisc::AdaptivePolicy& policy, int n) {
    SimRow row;
    row.n = n;
    // The CLI cap guards dense enumeration; merged finite-state evaluation
    // is exact at any n and bypasses it.
    const bool dense_only = !policy.fsm.has_value();
    long hist = 1;
    bool over_cap = false;
    const int out = s.base.classical.front().output_size();
    for (int k = 0; k < n; ++k) {
      hist *= out;
      if (hist > params.cap) {
        over_cap = true;
        break;
      }
    }
    if (dense_only && over_cap)
      throw chdisc::SizeCapError(
          "history space exceeds the exact-mode cap; supply a finite-state "
          "policy or enable sampling");
    if (params.monte_carlo && over_cap) {
      chdisc::MonteCarloReport mc = chdisc::evaluate_adaptive_monte_carlo(
          policy, s, t, n, params.eps, params.samples, params.seed);
      row.alpha = mc.errors.alpha;
      row.beta = mc.errors.beta;
      row.exponent = mc.exponent;
      row.ci_low = mc.beta_ci_high >= 1.0
                       ? chdisc::ExtReal::finite(0.0)
                       : chdisc::ExtReal::finite(
                             -std::log2(std::max(mc.beta_ci_high, 1e-300)) /
                             n);
      row.ci_high = mc.beta_ci_low <= 0.0
                        ? chdisc::ExtReal::infinity()
                        : chdisc::ExtReal::finite(-std::log2(mc.beta_ci_low) /
                                                  n);
      any_monte_carlo = true;
      return row;
    }
    chdisc::ErrorPair ep =
        chdisc::evaluate_adaptive_strategy(policy, s, t, n, params.eps);
    row.alpha = ep.alpha;
    row.beta = ep.beta;
    row.exponent = ep.beta <= 0.0
                       ? chdisc::ExtReal::infinity()
                       : chdisc::ExtReal::finite(-std::log2(ep.beta) / n);
    row.ci_low = row.exponent;
    row.ci_high = row.exponent;
    return row;
  };

  if (strategy == "adaptive") {
    chdisc::AdaptivePolicy policy;
    if (!blk.contains("policy"))
      throw SchemaError("simulate.policy", "missing required field");
    if (blk.at("policy").is_string()) {
      const std::string pname = blk.at("policy").get<std::string>();
      if (pname != "example12-canonical")
        throw SchemaError("simulate.policy",
                          "unknown policy name '" + pname + "'");
      policy = chdisc::example12().canonical;
    } else {
      policy = parse_fsm_policy(blk.at("policy"), "simulate.policy");
    }
    for (int n : lengths) rows.push_back(run_adaptive(policy, n));
  } else if (strategy == "parallel") {
    if (!blk.contains("inputs") || !blk.at("inputs").is_array() ||
        blk.at("inputs").empty())
      throw SchemaError("simulate.inputs",
                        "expected a nonempty array of input distributions");
    std::vector<chdisc::ProbVector> inputs;
    for (size_t i = 0; i < blk.at("inputs").size(); ++i)
      inputs.push_back(chdisc::io::parse_prob(
          blk.at("inputs")[i], "simulate.inputs[" + std::to_string(i) + "]"));
    for (int n : lengths) {
      SimRow row;
      row.n = n;
      auto [ep, expo] =
          chdisc::evaluate_parallel_strategy(s, t, inputs, n, params.eps);
      row.alpha = ep.alpha;
      row.beta = ep.beta;
      row.exponent = expo;
      row.ci_low = expo;
      row.ci_high = expo;
      rows.push_back(row);
    }
  } else {
    throw SchemaError("simulate.strategy",
                      "must be \"adaptive\" or \"parallel\"");
  }

  // Slope of -log2 beta over the fitted window (lengths >= 8 preferred to
  // suppress the small-n transient; falls back to the whole list when the
  // window holds fewer than 3 points).
  std::map<int, double> betas;
  for (const SimRow& row : rows)
    if (row.beta > 0.0 && row.beta <= 1.0) betas[row.n] = row.beta;
  std::optional<std::pair<double, double>> slope;
  if (betas.size() >= 3) {
    int lo = 8;
    int count = 0;
    for (const auto& [n, b] : betas)
      if (n >= lo) ++count;
    if (count < 3) lo = betas.begin()->first;
    slope = chdisc::estimate_exponent(betas, lo, betas.rbegin()->first);
  }

  if (csv) {
    std::ostringstream os;
    os << "n,alpha,beta,exponent_estimate,ci_low,ci_high\n";
    for (const SimRow& row : rows)
      os << row.n << "," << chdisc::io::format_number(row.alpha) << ","
         << chdisc::io::format_number(row.beta) << ","
         << ext_csv(row.exponent) << "," << ext_csv(row.ci_low) << ","
         << ext_csv(row.ci_high) << "\n";
    if (slope)
      os << "# slope=" << chdisc::io::format_number(slope->first)
         << " r_squared=" << chdisc::io::format_number(slope->second) << "\n";
    *csv = os.str();
  }

  Json result = Json::object();
  result["strategy"] = strategy;
  result["monte_carlo"] = any_monte_carlo;
  Json jrows = Json::array();
  for (const SimRow& row : rows) {
    Json r = Json::object();
    r["n"] = row.n;
    r["alpha"] = row.alpha;
    r["beta"] = row.beta;
    r["exponent_estimate"] = chdisc::io::ext_real_json(row.exponent);
    r["ci_low"] = chdisc::io::ext_real_json(row.ci_low);
    r["ci_high"] = chdisc::io::ext_real_json(row.ci_high);
    jrows.push_back(r);
  }
  result["rows"] = jrows;
  if (slope) {
    result["slope"] = slope->first;
    result["r_squared"] = slope->second;
  }
  return result;
}

// --- adversary -----------------------------------------------------------

Json run_adversary(const Json& cfg, const Params& params, std::string* csv) {
  const Json& blk = block_of(cfg, "adversary");
  const int n = static_cast<int>(
      chdisc::io::number_field_or(blk, "n", "adversary", params.n));

  std::vector<chdisc::ProbVector> vertices;
  if (blk.contains("vertices")) {
    if (!blk.at("vertices").is_array() || blk.at("vertices").empty())
      throw SchemaError("adversary.vertices",
                        "expected a nonempty array of distributions");
    for (size_t i = 0; i < blk.at("vertices").size(); ++i)
      vertices.push_back(chdisc::io::parse_prob(
          blk.at("vertices")[i],
          "adversary.vertices[" + std::to_string(i) + "]"));
  }

  chdisc::TestOperator region = [&]() -> chdisc::TestOperator {
    if (blk.contains("region"))
      return chdisc::TestOperator(chdisc::io::parse_real_vector(
          blk.at("region"), "adversary.region"));
    if (blk.contains("universal")) {
      const Json& ub = blk.at("universal");
      if (!ub.is_object() || !ub.contains("p_vertices") ||
          !ub.contains("q_vertices"))
        throw SchemaError("adversary.universal",
                          "needs p_vertices and q_vertices");
      std::vector<chdisc::ProbVector> p_verts;
      std::vector<chdisc::ProbVector> q_verts;
      for (size_t i = 0; i < ub.at("p_vertices").size(); ++i)
        p_verts.push_back(chdisc::io::parse_prob(
            ub.at("p_vertices")[i],
            "adversary.universal.p_vertices[" + std::to_string(i) + "]"));
      for (size_t i = 0; i < ub.at("q_vertices").size(); ++i)
        q_verts.push_back(chdisc::io::parse_prob(
            ub.at("q_vertices")[i],
            "adversary.universal.q_vertices[" + std::to_string(i) + "]"));
      if (vertices.empty()) vertices = q_verts;
      return chdisc::universal_adversarial_test(p_verts, q_verts, n,
                                                params.eps);
    }
    throw SchemaError("adversary",
                      "needs either an explicit region or a universal block");
  }();

  if (vertices.empty())
    throw SchemaError("adversary.vertices", "missing required field");

  auto [value, policy] = chdisc::adversary_best_response(region, vertices, n);

  Json result = Json::object();
  result["value"] = value;
  Json pol = Json::object();
  const int depth_shown = std::min(n, 4);
  pol["depth_shown"] = depth_shown;
  Json table = Json::object();
  for (int k = 0; k < depth_shown; ++k) {
    Json level = Json::array();
    for (int v : (*policy.table)[k]) level.push_back(v);
    table[std::to_string(k)] = level;
  }
  pol["table"] = table;
  Json full = Json::array();
  for (const auto& level : *policy.table) {
    Json l = Json::array();
    for (int v : level) l.push_back(v);
    full.push_back(l);
  }
  pol["table_hash"] =
      chdisc::io::sha256_hex(chdisc::io::canonical_dump(full));
  result["policy"] = pol;

  if (csv) {
    std::ostringstream os;
    os << "n,value,exponent\n";
    os << n << "," << chdisc::io::format_number(value) << ","
       << (value <= 0.0 ? "inf"
                        : chdisc::io::format_number(-std::log2(value) / n))
       << "\n";
    *csv = os.str();
  }
  return result;
}

// --- example12 -----------------------------------------------------------

Json run_example12(const Params& params) {
  chdisc::Example12 ex = chdisc::example12();
  Json result = Json::object();
  Json sv = Json::array();
  for (const auto& c : ex.s.classical)
    sv.push_back(chdisc::io::classical_channel_json(c));
  Json tv = Json::array();
  for (const auto& c : ex.t.classical)
    tv.push_back(chdisc::io::classical_channel_json(c));
  result["s_vertices"] = sv;
  result["t_vertices"] = tv;
  Json pol = Json::object();
  pol["num_states"] = 3;
  pol["initial"] = 0;
  pol["next"] = Json::array({Json::array({1, 2, 1, 2}),
                             Json::array({1, 1, 1, 1}),
                             Json::array({2, 2, 2, 2})});
  pol["input_for_state"] = Json::array({0, 0, 1});
  result["canonical_policy"] = pol;
  result["iid_bound"] = chdisc::io::exponent_report_json(
      chdisc::worst_case_iid_exponent(ex.s, ex.t, params.restarts,
                                      params.seed));
  result["parallel"] = chdisc::io::exponent_report_json(
      chdisc::parallel_exponent_finite_classical(ex.s, ex.t));
  return result;
}

constexpr const char* kHelpFooter = R"(Config layout (JSON, version "1"):
  {"version": "1", "kind": <kind>, <kind block>, "params": {...}}
  kinds: divergence | channel-div | exponent | simulate | adversary | example12
  Numeric entries accept numbers, decimal strings, and rationals like "3/4".
  params: eps, n, n_list, restarts, seed, cap, monte_carlo, samples
  (command-line flags override the corresponding params fields).

CSV columns:
  exponent:  instance,value,lower,upper
  simulate:  n,alpha,beta,exponent_estimate,ci_low,ci_high
             (trailing comment line: # slope=<v> r_squared=<v>)
  adversary: n,value,exponent
  The first line of every CSV is a comment embedding tool_version,
  config_hash, and seed.

Exit codes:
  0 success, 2 config/schema error, 3 dimension mismatch,
  4 solver precondition failure, 5 size cap exceeded.)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "chdisc: composite channel discrimination toolkit (divergences, "
      "exponents, strategy simulation)"};
  app.footer(kHelpFooter);

  std::string config_path;
  std::string out_path;
  std::string format = "json";
  CliOverrides cli;
  std::string n_list_text;

  app.add_option("--config", config_path, "Path to the JSON problem config")
      ->required();
  app.add_option("--out", out_path,
                 "Write the report here instead of standard output");
  app.add_option("--format", format, "Report format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  double eps_val = 0.0;
  auto* eps_opt = app.add_option("--eps", eps_val, "Type-I error level");
  int n_val = 0;
  auto* n_opt = app.add_option("--n", n_val, "Number of channel uses");
  auto* nlist_opt = app.add_option(
      "--n-list", n_list_text, "Lengths to simulate: \"8..16\" or \"8,10,12\"");
  int restarts_val = 0;
  auto* restarts_opt =
      app.add_option("--restarts", restarts_val, "Optimizer restart count");
  std::uint64_t seed_val = 0;
  auto* seed_opt = app.add_option("--seed", seed_val, "Random stream seed");
  long cap_val = 0;
  auto* cap_opt = app.add_option(
      "--cap", cap_val, "Largest history space enumerated exactly");
  bool mc_flag = false;
  app.add_flag("--monte-carlo", mc_flag,
               "Sample above the cap instead of failing");
  long samples_val = 0;
  auto* samples_opt =
      app.add_option("--samples", samples_val, "Samples per Monte Carlo point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    app.exit(e);
    return 2;
  }

  if (*eps_opt) cli.eps = eps_val;
  if (*n_opt) cli.n = n_val;
  if (*nlist_opt) cli.n_list = n_list_text;
  if (*restarts_opt) cli.restarts = restarts_val;
  if (*seed_opt) cli.seed = seed_val;
  if (*cap_opt) cli.cap = cap_val;
  if (mc_flag) cli.monte_carlo = true;
  if (*samples_opt) cli.samples = samples_val;

  try {
    Json cfg = chdisc::io::load_config(config_path);
    const std::string kind = [&cfg] {
      if (!cfg.contains("kind") || !cfg.at("kind").is_string())
        throw SchemaError("kind", "missing required string field");
      return cfg.at("kind").get<std::string>();
    }();
    const Params params = resolve_params(cfg, cli);
    const std::string config_hash =
        chdisc::io::sha256_hex(chdisc::io::canonical_dump(cfg));

    Json result;
    std::string csv_body;
    std::string* csv = format == "csv" ? &csv_body : nullptr;
    if (kind == "divergence") {
      result = run_divergence(cfg, params);
    } else if (kind == "channel-div") {
      result = run_channel_div(cfg, params);
    } else if (kind == "exponent") {
      result = run_exponent(cfg, params, csv);
    } else if (kind == "simulate") {
      result = run_simulate(cfg, params, csv);
    } else if (kind == "adversary") {
      result = run_adversary(cfg, params, csv);
    } else if (kind == "example12") {
      result = run_example12(params);
    } else {
      throw SchemaError("kind",
                        "must be one of divergence | channel-div | exponent | "
                        "simulate | adversary | example12");
    }

    std::string output;
    if (format == "csv") {
      if (csv_body.empty()) {
        // Kinds without a tabular form fall back to a name,value listing.
        std::ostringstream os;
        os << "key,value\n";
        os << "kind," << kind << "\n";
        csv_body = os.str();
      }
      std::ostringstream os;
      os << "# tool_version=" << chdisc::io::kToolVersion
         << " config_hash=" << config_hash << " seed=" << params.seed << "\n";
      os << csv_body;
      output = os.str();
    } else {
      Json report = Json::object();
      report["tool_version"] = chdisc::io::kToolVersion;
      report["config_hash"] = config_hash;
      report["seed"] = params.seed;
      report["kind"] = kind;
      report["result"] = result;
      output = chdisc::io::format_report(report);
    }

    if (out_path.empty()) {
      std::cout << output;
    } else {
      std::ofstream out(out_path);
      if (!out) {
        std::cerr << "error: cannot open output file '" << out_path << "'\n";
        return 1;
      }
      out << output;
    }
    return 0;
  } catch (const SchemaError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const chdisc::DimensionMismatchError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return 3;
  } catch (const chdisc::SizeCapError& e) {
    std::cerr << "size cap: " << e.what() << "\n";
    return 5;
  } catch (const chdisc::SolverPreconditionError& e) {
    std::cerr << "solver precondition: " << e.what() << "\n";
    return 4;
  } catch (const chdisc::InvariantViolationError& e) {
    std::cerr << "invalid value: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
