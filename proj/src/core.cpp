#include "chdisc/core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <utility>

namespace chdisc {

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

void check_square(const Matrix& m, const char* who) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionMismatchError(std::string(who) + ": matrix must be square and non-empty");
  }
}

void check_hermitian(const Matrix& m, const char* who) {
  const double scale = std::max(1.0, max_abs(m));
  if (max_abs(m - m.adjoint()) > tol::kHermitian * scale) {
    throw InvariantViolationError(std::string(who) + ": matrix is not Hermitian within tolerance");
  }
}

}  // namespace

// --- ProbVector -----------------------------------------------------------

ProbVector::ProbVector(RealVector entries) : entries_(std::move(entries)) {
  if (entries_.size() == 0) {
    throw DimensionMismatchError("ProbVector: empty distribution");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < entries_.size(); ++i) {
    double v = entries_(i);
    if (!std::isfinite(v)) {
      throw InvariantViolationError("ProbVector: non-finite entry");
    }
    if (v < -tol::kProbEntry) {
      throw InvariantViolationError("ProbVector: negative entry " + std::to_string(v));
    }
    if (v < 0.0) {
      entries_(i) = 0.0;
      v = 0.0;
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol::kProbSum) {
    throw InvariantViolationError("ProbVector: entries sum to " + std::to_string(sum));
  }
}

ProbVector::ProbVector(const std::vector<double>& entries)
    : ProbVector(Eigen::Map<const RealVector>(entries.data(),
                                              static_cast<Eigen::Index>(entries.size()))) {}

ProbVector::ProbVector(std::initializer_list<double> entries)
    : ProbVector(std::vector<double>(entries)) {}

ProbVector ProbVector::uniform(int n) {
  if (n <= 0) throw DimensionMismatchError("ProbVector::uniform: n must be positive");
  return ProbVector(RealVector::Constant(n, 1.0 / n));
}

ProbVector ProbVector::point_mass(int n, int x) {
  if (n <= 0 || x < 0 || x >= n) {
    throw DimensionMismatchError("ProbVector::point_mass: index out of range");
  }
  RealVector e = RealVector::Zero(n);
  e(x) = 1.0;
  return ProbVector(std::move(e));
}

// --- ClassicalChannel -----------------------------------------------------

ClassicalChannel::ClassicalChannel(std::vector<ProbVector> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw DimensionMismatchError("ClassicalChannel: no rows");
  const int out = rows_.front().size();
  for (const auto& r : rows_) {
    if (r.size() != out) {
      throw DimensionMismatchError("ClassicalChannel: rows have inconsistent output sizes");
    }
  }
}

ClassicalChannel ClassicalChannel::identity(int n) {
  std::vector<ProbVector> rows;
  rows.reserve(n);
  for (int x = 0; x < n; ++x) rows.push_back(ProbVector::point_mass(n, x));
  return ClassicalChannel(std::move(rows));
}

// --- DensityMatrix --------------------------------------------------------

DensityMatrix::DensityMatrix(Matrix m) : m_(std::move(m)) {
  check_square(m_, "DensityMatrix");
  check_hermitian(m_, "DensityMatrix");
  m_ = 0.5 * (m_ + m_.adjoint().eval());
  const double tr = m_.trace().real();
  if (std::abs(m_.trace().imag()) > tol::kTrace || std::abs(tr - 1.0) > tol::kTrace) {
    throw InvariantViolationError("DensityMatrix: trace is not 1 within tolerance");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  const double lead = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -tol::kPsd * lead) {
    throw InvariantViolationError("DensityMatrix: negative eigenvalue beyond tolerance");
  }
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  if (dim <= 0) throw DimensionMismatchError("DensityMatrix::maximally_mixed: bad dimension");
  return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::pure(const Eigen::VectorXcd& psi) {
  const double n2 = psi.squaredNorm();
  if (std::abs(n2 - 1.0) > tol::kTrace) {
    throw InvariantViolationError("DensityMatrix::pure: vector is not normalized");
  }
  return DensityMatrix(psi * psi.adjoint());
}

DensityMatrix DensityMatrix::diagonal(const ProbVector& p) {
  Matrix m = Matrix::Zero(p.size(), p.size());
  for (int i = 0; i < p.size(); ++i) m(i, i) = p[i];
  return DensityMatrix(std::move(m));
}

// --- QuantumChannel -------------------------------------------------------

QuantumChannel::QuantumChannel(int in_dim, int out_dim, std::vector<Matrix> kraus)
    : in_dim_(in_dim), out_dim_(out_dim), kraus_(std::move(kraus)) {
  if (in_dim_ <= 0 || out_dim_ <= 0 || kraus_.empty()) {
    throw DimensionMismatchError("QuantumChannel: empty Kraus set or bad dimensions");
  }
  Matrix sum = Matrix::Zero(in_dim_, in_dim_);
  for (const auto& k : kraus_) {
    if (k.rows() != out_dim_ || k.cols() != in_dim_) {
      throw DimensionMismatchError("QuantumChannel: Kraus operator has wrong shape");
    }
    sum += k.adjoint() * k;
  }
  if (max_abs(sum - Matrix::Identity(in_dim_, in_dim_)) > tol::kTrace) {
    throw InvariantViolationError("QuantumChannel: Kraus completeness relation violated");
  }
}

QuantumChannel QuantumChannel::identity(int dim) {
  return QuantumChannel(dim, dim, {Matrix::Identity(dim, dim)});
}

// --- Povm -----------------------------------------------------------------

Povm::Povm(std::vector<Matrix> elements) : elements_(std::move(elements)) {
  if (elements_.empty()) throw DimensionMismatchError("Povm: no elements");
  const Eigen::Index d = elements_.front().rows();
  Matrix sum = Matrix::Zero(d, d);
  for (auto& e : elements_) {
    check_square(e, "Povm");
    if (e.rows() != d) throw DimensionMismatchError("Povm: inconsistent element dimensions");
    check_hermitian(e, "Povm");
    e = 0.5 * (e + e.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<Matrix> es(e, Eigen::EigenvaluesOnly);
    const double lead = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -tol::kPsd * lead) {
      throw InvariantViolationError("Povm: element has negative eigenvalue beyond tolerance");
    }
    sum += e;
  }
  if (max_abs(sum - Matrix::Identity(d, d)) > tol::kTrace) {
    throw InvariantViolationError("Povm: elements do not sum to the identity");
  }
}

// --- TestOperator ---------------------------------------------------------

TestOperator::TestOperator(RealVector classical) : op_(std::move(classical)) {
  auto& v = std::get<RealVector>(op_);
  if (v.size() == 0) throw DimensionMismatchError("TestOperator: empty classical test");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i)) || v(i) < -tol::kProbEntry || v(i) > 1.0 + tol::kProbEntry) {
      throw InvariantViolationError("TestOperator: classical entry outside [0, 1]");
    }
    v(i) = std::clamp(v(i), 0.0, 1.0);
  }
}

TestOperator::TestOperator(Matrix quantum) : op_(std::move(quantum)) {
  auto& m = std::get<Matrix>(op_);
  check_square(m, "TestOperator");
  check_hermitian(m, "TestOperator");
  m = 0.5 * (m + m.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol::kPsd ||
      es.eigenvalues().maxCoeff() > 1.0 + tol::kPsd) {
    throw InvariantViolationError("TestOperator: spectrum outside [0, 1]");
  }
}

// --- channel application --------------------------------------------------

ProbVector apply_channel(const ClassicalChannel& w, const ProbVector& p) {
  if (w.input_size() != p.size()) {
    throw DimensionMismatchError("apply_channel: channel input size != distribution size");
  }
  RealVector out = RealVector::Zero(w.output_size());
  for (int x = 0; x < p.size(); ++x) {
    if (p[x] != 0.0) out += p[x] * w.row(x).entries();
  }
  return ProbVector(std::move(out));
}

DensityMatrix apply_channel(const QuantumChannel& e, const DensityMatrix& rho) {
  if (e.in_dim() != rho.dim()) {
    throw DimensionMismatchError("apply_channel: channel input dim != state dim");
  }
  Matrix out = Matrix::Zero(e.out_dim(), e.out_dim());
  for (const auto& k : e.kraus()) out += k * rho.matrix() * k.adjoint();
  return DensityMatrix(std::move(out));
}

// --- tensor products ------------------------------------------------------

ProbVector tensor(const ProbVector& a, const ProbVector& b) {
  RealVector out(a.size() * b.size());
  for (int i = 0; i < a.size(); ++i) {
    out.segment(static_cast<Eigen::Index>(i) * b.size(), b.size()) = a[i] * b.entries();
  }
  return ProbVector(std::move(out));
}

ClassicalChannel tensor(const ClassicalChannel& a, const ClassicalChannel& b) {
  std::vector<ProbVector> rows;
  rows.reserve(static_cast<std::size_t>(a.input_size()) * b.input_size());
  for (int xa = 0; xa < a.input_size(); ++xa) {
    for (int xb = 0; xb < b.input_size(); ++xb) {
      rows.push_back(tensor(a.row(xa), b.row(xb)));
    }
  }
  return ClassicalChannel(std::move(rows));
}

namespace {
Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}
}  // namespace

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  return DensityMatrix(kron(a.matrix(), b.matrix()));
}

QuantumChannel tensor(const QuantumChannel& a, const QuantumChannel& b) {
  std::vector<Matrix> kraus;
  kraus.reserve(a.kraus().size() * b.kraus().size());
  for (const auto& ka : a.kraus()) {
    for (const auto& kb : b.kraus()) kraus.push_back(kron(ka, kb));
  }
  return QuantumChannel(a.in_dim() * b.in_dim(), a.out_dim() * b.out_dim(), std::move(kraus));
}

// --- measurements ---------------------------------------------------------

ProbVector apply_povm(const Povm& m, const DensityMatrix& rho) {
  if (m.dim() != rho.dim()) {
    throw DimensionMismatchError("apply_povm: POVM dim != state dim");
  }
  RealVector out(m.num_outcomes());
  for (int i = 0; i < m.num_outcomes(); ++i) {
    out(i) = (m.element(i) * rho.matrix()).trace().real();
  }
  return ProbVector(std::move(out));
}

// --- embeddings and special channels --------------------------------------

QuantumChannel embed_classical(const ClassicalChannel& w) {
  const int in = w.input_size();
  const int out = w.output_size();
  std::vector<Matrix> kraus;
  for (int x = 0; x < in; ++x) {
    for (int y = 0; y < out; ++y) {
      const double p = w.prob(y, x);
      if (p > 0.0) {
        Matrix k = Matrix::Zero(out, in);
        k(y, x) = std::sqrt(p);
        kraus.push_back(std::move(k));
      }
    }
  }
  return QuantumChannel(in, out, std::move(kraus));
}

ClassicalChannel replacer(const ProbVector& out, int input_size) {
  if (input_size <= 0) throw DimensionMismatchError("replacer: input size must be positive");
  return ClassicalChannel(std::vector<ProbVector>(input_size, out));
}

QuantumChannel replacer(const DensityMatrix& out, int in_dim) {
  if (in_dim <= 0) throw DimensionMismatchError("replacer: input dim must be positive");
  EigResult eig = hermitian_eig(out.matrix());
  std::vector<Matrix> kraus;
  for (int j = 0; j < out.dim(); ++j) {
    const double lam = std::max(0.0, eig.values(j));
    if (lam <= 0.0) continue;
    for (int i = 0; i < in_dim; ++i) {
      Matrix k = Matrix::Zero(out.dim(), in_dim);
      k.col(i) = std::sqrt(lam) * eig.vectors.col(j);
      kraus.push_back(std::move(k));
    }
  }
  return QuantumChannel(in_dim, out.dim(), std::move(kraus));
}

// --- spectral decomposition -----------------------------------------------

EigResult hermitian_eig(const Matrix& m) {
  check_square(m, "hermitian_eig");
  check_hermitian(m, "hermitian_eig");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint().eval()));
  if (es.info() != Eigen::Success) {
    throw InvariantViolationError("hermitian_eig: eigensolver failed to converge");
  }
  return EigResult{es.eigenvalues(), es.eigenvectors()};
}

// --- misc helpers ----------------------------------------------------------

Eigen::VectorXcd maximally_entangled(int d) {
  if (d <= 0) throw DimensionMismatchError("maximally_entangled: bad dimension");
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(d) * d);
  for (int i = 0; i < d; ++i) psi(static_cast<Eigen::Index>(i) * d + i) = 1.0 / std::sqrt(d);
  return psi;
}

DensityMatrix choi_state(const QuantumChannel& e) {
  const int d = e.in_dim();
  const DensityMatrix omega = DensityMatrix::pure(maximally_entangled(d));
  const QuantumChannel ext = tensor(QuantumChannel::identity(d), e);
  return apply_channel(ext, omega);
}

}  // namespace chdisc
