#pragma once

#include <cstdint>
#include <map>
#include <variant>

#include "chdisc/core.hpp"
#include "chdisc/divergences.hpp"

namespace chdisc {

/// Channel relative entropy for classical channels: the maximum over input
/// symbols of the row Kullback-Leibler divergence.  For classical channels
/// this single-letter quantity already equals its regularized and amortized
/// variants, so it is returned exactly rather than as a bracket.
ExtReal classical_channel_divergence(const ClassicalChannel& e, const ClassicalChannel& f);

/// Report for channel-level divergence computations.
///
/// `lower` is a certified achievable value (the divergence evaluated at
/// `witness_state`), `upper` a certified upper bound (max-relative entropy of
/// the channels, which is additive across copies).  `per_n_values` holds the
/// per-copy lower bound obtained at each regularization level that was
/// computed; entries are already divided by the level, so `lower` is their
/// maximum.  Invariant: lower <= upper + 1e-9 whenever upper is finite.
struct ChannelDivReport {
  ExtReal lower = ExtReal::finite(0.0);
  ExtReal upper = ExtReal::finite(0.0);
  std::variant<ProbVector, DensityMatrix> witness_state{ProbVector::uniform(1)};
  std::map<int, ExtReal> per_n_values;
  long iterations = 0;
  bool converged = false;
};

/// Lower bound on the stabilized channel relative entropy
///   sup_psi D((id (x) e)(psi) || (id (x) f)(psi))
/// over pure inputs psi on a doubled space whose reference side matches the
/// channel input dimension (larger references are never needed).  Gradient
/// ascent on the unit sphere from deterministic basis seeds, the maximally
/// entangled state, and random starts; any iterate with a support violation
/// makes the value +infinity and is returned as the witness.  The report's
/// upper bound is the channel max-relative entropy.
ChannelDivReport quantum_channel_divergence_lower(const QuantumChannel& e,
                                                  const QuantumChannel& f,
                                                  int restarts = 32,
                                                  std::uint64_t seed = 0);

/// Max-relative entropy between channels.  The maximally entangled input is
/// optimal, so this equals dmax of the two Choi states.
ExtReal dmax_channel(const QuantumChannel& e, const QuantumChannel& f);

/// Bracket for the regularized channel relative entropy.  Lower bound: best
/// per-copy ascent value over levels n = 1 and n = 2 (the two-copy value is
/// halved; the sequence is monotone in n, so each level certifies the limit
/// from below).  Upper bound: dmax_channel.  Level 2 doubles every dimension,
/// so it is only attempted when in_dim^2 * out_dim^2 <= 16; larger channels
/// are refused with SizeCapError rather than approximated.
ChannelDivReport regularized_bracket(const QuantumChannel& e, const QuantumChannel& f,
                                     int restarts = 32, std::uint64_t seed = 0);

}  // namespace chdisc
