#pragma once

#include <stdexcept>
#include <string>

#include "../../vendor/json.hpp"
#include "chdisc/core.hpp"
#include "chdisc/exponents.hpp"
#include "chdisc/protocols.hpp"

namespace chdisc::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kConfigVersion = "1";

/// Malformed or semantically invalid configuration input.  Carries a
/// field-path context ("simulate.s.vertices[1]") so callers can print a
/// useful diagnostic; maps to exit code 2.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what) {}
};

/// Parses a config file, requiring a JSON object with version "1".
Json load_config(const std::string& path);

/// Canonical compact serialization used for hashing: object keys sorted,
/// no whitespace, numbers in round-trip form.
std::string canonical_dump(const Json& j);

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& data);

/// Deterministic pretty serialization for reports: two-space indent,
/// object keys in insertion order, floating-point numbers printed with
/// 9 significant digits.
std::string format_report(const Json& j);

/// Formats one double the way reports print numbers (9 significant digits).
std::string format_number(double v);

// --- field access -------------------------------------------------------
// All accessors throw SchemaError with the offending path on missing
// fields or wrong types.  Numeric positions accept JSON numbers, decimal
// strings, and exact rational strings of the form "3/4".

double number_at(const Json& j, const std::string& path);
double number_field(const Json& obj, const std::string& key,
                    const std::string& path);
double number_field_or(const Json& obj, const std::string& key,
                       const std::string& path, double fallback);

ProbVector parse_prob(const Json& j, const std::string& path);
RealVector parse_real_vector(const Json& j, const std::string& path);
ClassicalChannel parse_classical_channel(const Json& j,
                                         const std::string& path);
DensityMatrix parse_density(const Json& j, const std::string& path);
QuantumChannel parse_quantum_channel(const Json& j, const std::string& path);

/// Hypothesis block: {"vertices": [channel, ...], "take_hull": bool}.
/// Vertices are classical row matrices or {"kraus": [...]} objects; the two
/// forms must not be mixed within one block.
HypothesisSet parse_hypothesis_set(const Json& j, const std::string& path);

/// Family block: a hypothesis block plus "family_kind":
/// "iid" | "arbitrarily_varying" | "slightly_varying" (the latter with
/// "epsilon").  Missing family_kind defaults to iid.
HypothesisFamily parse_family(const Json& j, const std::string& path);

// --- serialization helpers ----------------------------------------------

Json ext_real_json(const ExtReal& v);
Json prob_json(const ProbVector& p);
Json classical_channel_json(const ClassicalChannel& c);
Json exponent_report_json(const ExponentReport& rep);

}  // namespace chdisc::io
