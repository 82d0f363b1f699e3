#include "chdisc/json_io.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "chdisc/errors.hpp"

namespace chdisc::io {

namespace {

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string at_index(const std::string& path, size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

double parse_number_string(const std::string& s, const std::string& path) {
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    char* end = nullptr;
    const std::string num = s.substr(0, slash);
    const std::string den = s.substr(slash + 1);
    const double a = std::strtod(num.c_str(), &end);
    if (end == num.c_str() || *end != '\0')
      throw SchemaError(path, "malformed rational literal '" + s + "'");
    const double b = std::strtod(den.c_str(), &end);
    if (end == den.c_str() || *end != '\0' || b == 0.0)
      throw SchemaError(path, "malformed rational literal '" + s + "'");
    return a / b;
  }
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw SchemaError(path, "expected a number, got '" + s + "'");
  return v;
}

}  // namespace

double number_at(const Json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_number_string(j.get<std::string>(), path);
  throw SchemaError(path, "expected a number or numeric string");
}

double number_field(const Json& obj, const std::string& key,
                    const std::string& path) {
  if (!obj.is_object() || !obj.contains(key))
    throw SchemaError(child(path, key), "missing required field");
  return number_at(obj.at(key), child(path, key));
}

double number_field_or(const Json& obj, const std::string& key,
                       const std::string& path, double fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return number_at(obj.at(key), child(path, key));
}

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("", "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Json j;
  try {
    j = Json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("", std::string("JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("", "config must be a JSON object");
  if (!j.contains("version") || !j.at("version").is_string() ||
      j.at("version").get<std::string>() != kConfigVersion)
    throw SchemaError("version",
                      std::string("config version must be \"") +
                          kConfigVersion + "\"");
  return j;
}

std::string canonical_dump(const Json& j) {
  // Plain nlohmann::json keeps object keys sorted; round-tripping through it
  // canonicalises key order, then the compact dump fixes the byte form.
  nlohmann::json sorted = nlohmann::json::parse(j.dump());
  return sorted.dump();
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) !=
      1)
    throw std::runtime_error("digest computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string format_number(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

void write_json(std::ostream& os, const Json& j, int indent) {
  const std::string pad(static_cast<size_t>(indent) * 2, ' ');
  const std::string pad_in(static_cast<size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        os << pad_in << Json(it.key()).dump() << ": ";
        write_json(os, it.value(), indent + 1);
        if (i + 1 < j.size()) os << ",";
        os << "\n";
      }
      os << pad << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      bool scalars = true;
      for (const auto& el : j)
        if (el.is_object() || el.is_array()) scalars = false;
      if (scalars) {
        os << "[";
        for (size_t i = 0; i < j.size(); ++i) {
          write_json(os, j[i], indent);
          if (i + 1 < j.size()) os << ", ";
        }
        os << "]";
      } else {
        os << "[\n";
        for (size_t i = 0; i < j.size(); ++i) {
          os << pad_in;
          write_json(os, j[i], indent + 1);
          if (i + 1 < j.size()) os << ",";
          os << "\n";
        }
        os << pad << "]";
      }
      return;
    }
    case Json::value_t::number_float:
      os << format_number(j.get<double>());
      return;
    default:
      os << j.dump();
      return;
  }
}

}  // namespace

std::string format_report(const Json& j) {
  std::ostringstream os;
  write_json(os, j, 0);
  os << "\n";
  return os.str();
}

RealVector parse_real_vector(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty())
    throw SchemaError(path, "expected a nonempty array of numbers");
  RealVector v(static_cast<int>(j.size()));
  for (size_t i = 0; i < j.size(); ++i)
    v(static_cast<int>(i)) = number_at(j[i], at_index(path, i));
  return v;
}

ProbVector parse_prob(const Json& j, const std::string& path) {
  RealVector v = parse_real_vector(j, path);
  try {
    return ProbVector(v);
  } catch (const InvariantViolationError& e) {
    throw SchemaError(path, e.what());
  }
}

ClassicalChannel parse_classical_channel(const Json& j,
                                         const std::string& path) {
  const Json* rows = &j;
  std::string p = path;
  if (j.is_object()) {
    if (!j.contains("rows"))
      throw SchemaError(child(path, "rows"), "missing required field");
    rows = &j.at("rows");
    p = child(path, "rows");
  }
  if (!rows->is_array() || rows->empty())
    throw SchemaError(p, "expected a nonempty array of output rows");
  std::vector<ProbVector> out;
  out.reserve(rows->size());
  for (size_t x = 0; x < rows->size(); ++x)
    out.push_back(parse_prob((*rows)[x], at_index(p, x)));
  try {
    return ClassicalChannel(out);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(p, e.what());
  }
}

namespace {

Complex complex_at(const Json& j, const std::string& path) {
  if (j.is_array()) {
    if (j.size() != 2)
      throw SchemaError(path, "complex entries are [re, im] pairs");
    return Complex(number_at(j[0], at_index(path, 0)),
                   number_at(j[1], at_index(path, 1)));
  }
  return Complex(number_at(j, path), 0.0);
}

Matrix parse_matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty())
    throw SchemaError(path, "expected a nonempty matrix (array of rows)");
  const size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty())
    throw SchemaError(at_index(path, 0), "expected a matrix row");
  const size_t cols = j[0].size();
  Matrix m(static_cast<int>(rows), static_cast<int>(cols));
  for (size_t r = 0; r < rows; ++r) {
    const std::string rp = at_index(path, r);
    if (!j[r].is_array() || j[r].size() != cols)
      throw SchemaError(rp, "matrix rows must have equal length");
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<int>(r), static_cast<int>(c)) =
          complex_at(j[r][c], at_index(rp, c));
  }
  return m;
}

}  // namespace

DensityMatrix parse_density(const Json& j, const std::string& path) {
  if (j.is_array() && !j.empty() && !j[0].is_array()) {
    // A bare vector denotes a diagonal (classical) state.
    ProbVector p = parse_prob(j, path);
    return DensityMatrix::diagonal(p);
  }
  Matrix m = parse_matrix(j, path);
  if (m.rows() != m.cols())
    throw SchemaError(path, "density matrices must be square");
  try {
    return DensityMatrix(m);
  } catch (const InvariantViolationError& e) {
    throw SchemaError(path, e.what());
  }
}

QuantumChannel parse_quantum_channel(const Json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("kraus"))
    throw SchemaError(child(path, "kraus"), "missing required field");
  const Json& ops = j.at("kraus");
  if (!ops.is_array() || ops.empty())
    throw SchemaError(child(path, "kraus"),
                      "expected a nonempty array of matrices");
  std::vector<Matrix> kraus;
  kraus.reserve(ops.size());
  for (size_t i = 0; i < ops.size(); ++i)
    kraus.push_back(parse_matrix(ops[i], at_index(child(path, "kraus"), i)));
  try {
    const int out_dim = static_cast<int>(kraus.front().rows());
    const int in_dim = static_cast<int>(kraus.front().cols());
    return QuantumChannel(in_dim, out_dim, kraus);
  } catch (const InvariantViolationError& e) {
    throw SchemaError(child(path, "kraus"), e.what());
  } catch (const DimensionMismatchError& e) {
    throw SchemaError(child(path, "kraus"), e.what());
  }
}

HypothesisSet parse_hypothesis_set(const Json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("vertices"))
    throw SchemaError(child(path, "vertices"), "missing required field");
  const Json& verts = j.at("vertices");
  if (!verts.is_array() || verts.empty())
    throw SchemaError(child(path, "vertices"),
                      "expected a nonempty array of channels");
  bool take_hull = false;
  if (j.contains("take_hull")) {
    if (!j.at("take_hull").is_boolean())
      throw SchemaError(child(path, "take_hull"), "expected a boolean");
    take_hull = j.at("take_hull").get<bool>();
  }
  const std::string vp = child(path, "vertices");
  const bool quantum = verts[0].is_object() && verts[0].contains("kraus");
  try {
    if (quantum) {
      std::vector<QuantumChannel> qs;
      for (size_t i = 0; i < verts.size(); ++i)
        qs.push_back(parse_quantum_channel(verts[i], at_index(vp, i)));
      return HypothesisSet::quantum_set(qs, take_hull);
    }
    std::vector<ClassicalChannel> cs;
    for (size_t i = 0; i < verts.size(); ++i)
      cs.push_back(parse_classical_channel(verts[i], at_index(vp, i)));
    return HypothesisSet::classical_set(cs, take_hull);
  } catch (const DimensionMismatchError& e) {
    throw SchemaError(vp, e.what());
  } catch (const InvariantViolationError& e) {
    throw SchemaError(vp, e.what());
  }
}

HypothesisFamily parse_family(const Json& j, const std::string& path) {
  HypothesisSet base = parse_hypothesis_set(j, path);
  std::string kind = "iid";
  if (j.contains("family_kind")) {
    if (!j.at("family_kind").is_string())
      throw SchemaError(child(path, "family_kind"), "expected a string");
    kind = j.at("family_kind").get<std::string>();
  }
  if (kind == "iid") return HypothesisFamily::iid(base);
  if (kind == "arbitrarily_varying")
    return HypothesisFamily::arbitrarily_varying(base);
  if (kind == "slightly_varying") {
    const double eps =
        number_field(j, "epsilon", path);
    try {
      return HypothesisFamily::slightly_varying(base, eps);
    } catch (const InvariantViolationError& e) {
      throw SchemaError(child(path, "epsilon"), e.what());
    }
  }
  throw SchemaError(child(path, "family_kind"),
                    "must be one of iid | arbitrarily_varying | "
                    "slightly_varying");
}

Json ext_real_json(const ExtReal& v) {
  Json j = Json::object();
  j["infinite"] = v.is_infinite();
  if (!v.is_infinite()) j["value"] = v.value();
  return j;
}

Json prob_json(const ProbVector& p) {
  Json arr = Json::array();
  for (int i = 0; i < p.size(); ++i) arr.push_back(p[i]);
  return arr;
}

Json classical_channel_json(const ClassicalChannel& c) {
  Json rows = Json::array();
  for (int x = 0; x < c.input_size(); ++x) {
    Json row = Json::array();
    for (int y = 0; y < c.output_size(); ++y) row.push_back(c.prob(y, x));
    rows.push_back(row);
  }
  return rows;
}

Json exponent_report_json(const ExponentReport& rep) {
  Json j = Json::object();
  j["value"] = ext_real_json(rep.value);
  j["lower"] = ext_real_json(rep.lower);
  j["upper"] = ext_real_json(rep.upper);
  if (!rep.input_certificate.empty()) {
    Json arr = Json::array();
    for (double w : rep.input_certificate) arr.push_back(w);
    j["input_certificate"] = arr;
  }
  if (!rep.s_hull_weights.empty()) {
    Json arr = Json::array();
    for (double w : rep.s_hull_weights) arr.push_back(w);
    j["s_hull_weights"] = arr;
  }
  if (!rep.t_hull_weights.empty()) {
    Json arr = Json::array();
    for (double w : rep.t_hull_weights) arr.push_back(w);
    j["t_hull_weights"] = arr;
  }
  if (!rep.active_pairs.empty()) {
    Json arr = Json::array();
    for (const auto& [a, b] : rep.active_pairs) {
      Json pair = Json::array();
      pair.push_back(a);
      pair.push_back(b);
      arr.push_back(pair);
    }
    j["active_pairs"] = arr;
  }
  j["duality_gap"] = rep.duality_gap;
  j["capped"] = rep.capped;
  return j;
}

}  // namespace chdisc::io
