#pragma once

#include <Eigen/Dense>

#include <complex>
#include <variant>
#include <vector>

#include "chdisc/errors.hpp"

namespace chdisc {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

/// Validation tolerances shared by all value types.  Constructors reject
/// inputs that violate an invariant beyond these bounds and never silently
/// renormalize.
namespace tol {
inline constexpr double kProbEntry = 1e-12;   ///< negativity slack per entry
inline constexpr double kProbSum = 1e-12;     ///< |sum - 1| for distributions
inline constexpr double kHermitian = 1e-10;   ///< |m - m^dagger|, relative
inline constexpr double kPsd = 1e-10;         ///< eigenvalue negativity, relative
inline constexpr double kTrace = 1e-9;        ///< |trace - 1| and Kraus completeness
inline constexpr double kSupport = 1e-10;     ///< support detection, relative to largest eigenvalue
inline constexpr double kKernelLeak = 1e-9;   ///< mass allowed outside a support before +infinity
}  // namespace tol

/// A probability distribution over a finite alphabet.  Entries are
/// nonnegative (within kProbEntry, tiny negative dust is clamped to zero) and
/// sum to one within kProbSum.
class ProbVector {
 public:
  explicit ProbVector(RealVector entries);
  explicit ProbVector(const std::vector<double>& entries);
  ProbVector(std::initializer_list<double> entries);

  static ProbVector uniform(int n);
  static ProbVector point_mass(int n, int x);

  int size() const { return static_cast<int>(entries_.size()); }
  double operator[](int i) const { return entries_(i); }
  const RealVector& entries() const { return entries_; }

 private:
  RealVector entries_;
};

/// A classical channel W(y|x): one output distribution per input symbol.
class ClassicalChannel {
 public:
  explicit ClassicalChannel(std::vector<ProbVector> rows);

  static ClassicalChannel identity(int n);

  int input_size() const { return static_cast<int>(rows_.size()); }
  int output_size() const { return rows_.front().size(); }
  const ProbVector& row(int x) const { return rows_.at(x); }
  /// W(y|x)
  double prob(int y, int x) const { return rows_.at(x)[y]; }

 private:
  std::vector<ProbVector> rows_;
};

/// A density matrix: Hermitian, positive semidefinite, unit trace (within the
/// tolerances above).  The stored matrix is symmetrized once on construction
/// so downstream spectral routines see an exactly Hermitian operand.
class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix m);

  static DensityMatrix maximally_mixed(int dim);
  static DensityMatrix pure(const Eigen::VectorXcd& psi);
  /// Diagonal embedding of a classical distribution.
  static DensityMatrix diagonal(const ProbVector& p);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

/// A quantum channel in Kraus form.  Kraus operators are out_dim x in_dim and
/// satisfy the completeness relation sum_k K_k^dagger K_k = identity within
/// kTrace.
class QuantumChannel {
 public:
  QuantumChannel(int in_dim, int out_dim, std::vector<Matrix> kraus);

  static QuantumChannel identity(int dim);

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  const std::vector<Matrix>& kraus() const { return kraus_; }

 private:
  int in_dim_;
  int out_dim_;
  std::vector<Matrix> kraus_;
};

/// A positive operator-valued measure: PSD elements summing to the identity.
class Povm {
 public:
  explicit Povm(std::vector<Matrix> elements);

  int dim() const { return static_cast<int>(elements_.front().rows()); }
  int num_outcomes() const { return static_cast<int>(elements_.size()); }
  const Matrix& element(int i) const { return elements_.at(i); }

 private:
  std::vector<Matrix> elements_;
};

/// A binary test.  Classical: per-symbol acceptance probabilities in [0,1].
/// Quantum: a Hermitian operator with spectrum in [0,1].
class TestOperator {
 public:
  explicit TestOperator(RealVector classical);
  explicit TestOperator(Matrix quantum);

  bool is_classical() const { return std::holds_alternative<RealVector>(op_); }
  const RealVector& classical() const { return std::get<RealVector>(op_); }
  const Matrix& quantum() const { return std::get<Matrix>(op_); }

 private:
  std::variant<RealVector, Matrix> op_;
};

// --- channel application -------------------------------------------------

ProbVector apply_channel(const ClassicalChannel& w, const ProbVector& p);
DensityMatrix apply_channel(const QuantumChannel& e, const DensityMatrix& rho);

// --- tensor products -----------------------------------------------------

ProbVector tensor(const ProbVector& a, const ProbVector& b);
ClassicalChannel tensor(const ClassicalChannel& a, const ClassicalChannel& b);
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);
QuantumChannel tensor(const QuantumChannel& a, const QuantumChannel& b);

// --- measurements --------------------------------------------------------

/// Outcome distribution (Tr rho M_i)_i of measuring rho with the POVM.
ProbVector apply_povm(const Povm& m, const DensityMatrix& rho);

// --- embeddings and special channels -------------------------------------

/// Embeds a classical channel as a quantum channel with Kraus operators
/// sqrt(W(y|x)) |y><x|.  Diagonal inputs reproduce the classical action and
/// off-diagonal input entries are dephased away.
QuantumChannel embed_classical(const ClassicalChannel& w);

/// Channel that discards its input and outputs the fixed distribution/state.
ClassicalChannel replacer(const ProbVector& out, int input_size);
QuantumChannel replacer(const DensityMatrix& out, int in_dim);

// --- spectral decomposition ----------------------------------------------

struct EigResult {
  RealVector values;  ///< ascending
  Matrix vectors;     ///< columns are the matching orthonormal eigenvectors
};

/// Eigendecomposition of a Hermitian matrix.  Throws InvariantViolationError
/// when the input deviates from Hermiticity beyond kHermitian (relative to
/// its largest entry).
EigResult hermitian_eig(const Matrix& m);

// --- misc helpers ---------------------------------------------------------

/// The normalized maximally entangled state sum_i |ii>/sqrt(d) on C^d x C^d.
Eigen::VectorXcd maximally_entangled(int d);

/// Choi state (id x E)(|Omega><Omega|) of a channel, a density matrix on
/// in_dim * out_dim dimensions.
DensityMatrix choi_state(const QuantumChannel& e);

}  // namespace chdisc
