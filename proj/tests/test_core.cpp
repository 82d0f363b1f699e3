#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "chdisc/core.hpp"
#include "chdisc/rng.hpp"

using namespace chdisc;

namespace {

ProbVector random_prob(std::mt19937_64& rng, int d) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  RealVector v(d);
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    v(i) = u(rng);
    s += v(i);
  }
  return ProbVector(RealVector(v / s));
}

ClassicalChannel random_channel(std::mt19937_64& rng, int nin, int nout) {
  std::vector<ProbVector> rows;
  for (int x = 0; x < nin; ++x) rows.push_back(random_prob(rng, nout));
  return ClassicalChannel(rows);
}

DensityMatrix random_density(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = Complex(g(rng), g(rng));
  Matrix m = a * a.adjoint();
  m /= m.trace().real();
  return DensityMatrix(m);
}

QuantumChannel random_quantum_channel(std::mt19937_64& rng, int din, int dout,
                                      int num_kraus) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Matrix> raw;
  Matrix gram = Matrix::Zero(din, din);
  for (int k = 0; k < num_kraus; ++k) {
    Matrix a(dout, din);
    for (int i = 0; i < dout; ++i)
      for (int j = 0; j < din; ++j) a(i, j) = Complex(g(rng), g(rng));
    raw.push_back(a);
    gram += a.adjoint() * a;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  Matrix inv_sqrt = es.operatorInverseSqrt();
  for (Matrix& a : raw) a = a * inv_sqrt;
  return QuantumChannel(din, dout, raw);
}

}  // namespace

TEST_CASE("probability vectors validate and expose entries") {
  ProbVector p{0.25, 0.75};
  CHECK(p.size() == 2);
  CHECK(p[0] == doctest::Approx(0.25));
  CHECK(ProbVector::uniform(4)[2] == doctest::Approx(0.25));
  ProbVector e = ProbVector::point_mass(3, 1);
  CHECK(e[0] == 0.0);
  CHECK(e[1] == 1.0);

  CHECK_THROWS_AS(ProbVector({0.5, 0.4}), InvariantViolationError);
  CHECK_THROWS_AS(ProbVector({1.2, -0.2}), InvariantViolationError);
  // Dust-level negativity is clamped, not rejected.
  ProbVector dusty{1.0 + 5e-13, -5e-13};
  CHECK(dusty[1] == 0.0);
}

TEST_CASE("classical channels validate rows and apply correctly") {
  ClassicalChannel w({ProbVector{0.5, 0.5}, ProbVector{0.1, 0.9}});
  CHECK(w.input_size() == 2);
  CHECK(w.output_size() == 2);
  CHECK(w.prob(1, 1) == doctest::Approx(0.9));

  ProbVector out = apply_channel(w, ProbVector{0.5, 0.5});
  CHECK(out[0] == doctest::Approx(0.3));
  CHECK(out[1] == doctest::Approx(0.7));

  CHECK_THROWS_AS(
      ClassicalChannel({ProbVector{0.5, 0.5}, ProbVector{1.0, 0.0, 0.0}}),
      DimensionMismatchError);
  CHECK_THROWS_AS(apply_channel(w, ProbVector::uniform(3)),
                  DimensionMismatchError);

  ClassicalChannel id = ClassicalChannel::identity(3);
  ProbVector p = ProbVector{0.2, 0.3, 0.5};
  ProbVector q = apply_channel(id, p);
  for (int i = 0; i < 3; ++i) CHECK(q[i] == doctest::Approx(p[i]));
}

TEST_CASE("density matrices enforce their invariants") {
  CHECK(DensityMatrix::maximally_mixed(3).dim() == 3);
  Eigen::VectorXcd psi(2);
  psi << Complex(1, 0), Complex(0, 1);
  psi /= std::sqrt(2.0);
  DensityMatrix rho = DensityMatrix::pure(psi);
  CHECK(rho.matrix().trace().real() == doctest::Approx(1.0));

  Matrix bad(2, 2);
  bad << 1.0, Complex(0, 0.5), Complex(0, 0.5), 0.0;  // not Hermitian
  CHECK_THROWS_AS(DensityMatrix{bad}, InvariantViolationError);

  Matrix neg(2, 2);
  neg << 1.5, 0.0, 0.0, -0.5;  // negative eigenvalue
  CHECK_THROWS_AS(DensityMatrix{neg}, InvariantViolationError);

  Matrix off_trace(2, 2);
  off_trace << 0.7, 0.0, 0.0, 0.7;
  CHECK_THROWS_AS(DensityMatrix{off_trace}, InvariantViolationError);

  DensityMatrix diag = DensityMatrix::diagonal(ProbVector{0.3, 0.7});
  CHECK(diag.matrix()(0, 0).real() == doctest::Approx(0.3));
  CHECK(std::abs(diag.matrix()(0, 1)) == doctest::Approx(0.0));
}

TEST_CASE("quantum channels require Kraus completeness") {
  QuantumChannel id = QuantumChannel::identity(2);
  CHECK(id.in_dim() == 2);
  CHECK(id.out_dim() == 2);

  Matrix half = 0.5 * Matrix::Identity(2, 2);
  CHECK_THROWS_AS(QuantumChannel(2, 2, {half}), InvariantViolationError);

  auto rng = make_rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    QuantumChannel e = random_quantum_channel(rng, 2, 3, 2);
    DensityMatrix rho = random_density(rng, 2);
    DensityMatrix out = apply_channel(e, rho);
    CHECK(out.dim() == 3);
    CHECK(out.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("channel application preserves normalization on random inputs") {
  auto rng = make_rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    ClassicalChannel w = random_channel(rng, 3, 4);
    ProbVector p = random_prob(rng, 3);
    ProbVector q = apply_channel(w, p);
    double s = 0.0;
    for (int i = 0; i < q.size(); ++i) s += q[i];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("tensor products compose with application") {
  auto rng = make_rng(13);
  for (int rep = 0; rep < 50; ++rep) {
    ClassicalChannel a = random_channel(rng, 2, 3);
    ClassicalChannel b = random_channel(rng, 3, 2);
    ProbVector p = random_prob(rng, 2);
    ProbVector q = random_prob(rng, 3);
    ProbVector lhs = apply_channel(tensor(a, b), tensor(p, q));
    ProbVector rhs = tensor(apply_channel(a, p), apply_channel(b, q));
    REQUIRE(lhs.size() == rhs.size());
    for (int i = 0; i < lhs.size(); ++i)
      CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-10));
  }
  // Quantum side: product states map to products.
  for (int rep = 0; rep < 10; ++rep) {
    QuantumChannel e = random_quantum_channel(rng, 2, 2, 2);
    QuantumChannel f = random_quantum_channel(rng, 2, 2, 1);
    DensityMatrix r1 = random_density(rng, 2);
    DensityMatrix r2 = random_density(rng, 2);
    Matrix lhs = apply_channel(tensor(e, f), tensor(r1, r2)).matrix();
    Matrix rhs =
        tensor(apply_channel(e, r1), apply_channel(f, r2)).matrix();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("tensor product of distributions multiplies entries") {
  ProbVector p{0.25, 0.75};
  ProbVector q{0.5, 0.3, 0.2};
  ProbVector t = tensor(p, q);
  REQUIRE(t.size() == 6);
  CHECK(t[0] == doctest::Approx(0.125));   // (0,0)
  CHECK(t[5] == doctest::Approx(0.15));    // (1,2)
}

TEST_CASE("classical embedding reproduces the classical action") {
  auto rng = make_rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    ClassicalChannel w = random_channel(rng, 3, 3);
    ProbVector p = random_prob(rng, 3);
    QuantumChannel e = embed_classical(w);
    CHECK(e.in_dim() == 3);
    CHECK(e.out_dim() == 3);
    DensityMatrix out = apply_channel(e, DensityMatrix::diagonal(p));
    ProbVector classical_out = apply_channel(w, p);
    for (int y = 0; y < 3; ++y)
      CHECK(out.matrix()(y, y).real() ==
            doctest::Approx(classical_out[y]).epsilon(1e-10));
    // Coherences are dephased away.
    CHECK(std::abs(out.matrix()(0, 1)) < 1e-10);
  }
}

TEST_CASE("replacer channels ignore their input") {
  ProbVector target{0.1, 0.9};
  ClassicalChannel r = replacer(target, 3);
  for (int x = 0; x < 3; ++x) {
    CHECK(r.prob(0, x) == doctest::Approx(0.1));
    CHECK(r.prob(1, x) == doctest::Approx(0.9));
  }
  auto rng = make_rng(19);
  DensityMatrix sigma = random_density(rng, 2);
  QuantumChannel qr = replacer(sigma, 3);
  DensityMatrix rho = random_density(rng, 3);
  Matrix out = apply_channel(qr, rho).matrix();
  CHECK((out - sigma.matrix()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("POVMs validate and produce outcome distributions") {
  Matrix m0(2, 2), m1(2, 2);
  m0 << 0.75, 0.0, 0.0, 0.25;
  m1 << 0.25, 0.0, 0.0, 0.75;
  Povm povm({m0, m1});
  CHECK(povm.num_outcomes() == 2);

  ProbVector out = apply_povm(povm, DensityMatrix::maximally_mixed(2));
  CHECK(out[0] == doctest::Approx(0.5));

  Matrix not_complete = 0.5 * Matrix::Identity(2, 2);
  CHECK_THROWS_AS(Povm({not_complete}), InvariantViolationError);
}

TEST_CASE("test operators keep their classical/quantum identity") {
  RealVector v(2);
  v << 0.5, 1.0;
  TestOperator classical(v);
  CHECK(classical.is_classical());
  CHECK(classical.classical()(0) == doctest::Approx(0.5));

  TestOperator quantum(Matrix(0.5 * Matrix::Identity(2, 2)));
  CHECK_FALSE(quantum.is_classical());

  RealVector bad(2);
  bad << 1.5, 0.0;
  CHECK_THROWS_AS(TestOperator{bad}, InvariantViolationError);
}

TEST_CASE("hermitian eigendecomposition reconstructs and sorts") {
  auto rng = make_rng(23);
  for (int rep = 0; rep < 50; ++rep) {
    DensityMatrix rho = random_density(rng, 4);
    EigResult eig = hermitian_eig(rho.matrix());
    Matrix recon = Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i)
      recon += eig.values(i) * eig.vectors.col(i) * eig.vectors.col(i).adjoint();
    CHECK((recon - rho.matrix()).cwiseAbs().maxCoeff() < 1e-10);
    for (int i = 1; i < 4; ++i) CHECK(eig.values(i) >= eig.values(i - 1));
  }
  Matrix skew(2, 2);
  skew << 0.0, 1.0, -1.0, 0.0;
  CHECK_THROWS_AS(hermitian_eig(skew), InvariantViolationError);
}

TEST_CASE("maximally entangled state and Choi state of the identity") {
  Eigen::VectorXcd omega = maximally_entangled(3);
  CHECK(omega.norm() == doctest::Approx(1.0));
  DensityMatrix choi = choi_state(QuantumChannel::identity(2));
  DensityMatrix expected = DensityMatrix::pure(maximally_entangled(2));
  CHECK((choi.matrix() - expected.matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("random perturbations beyond tolerance are rejected") {
  auto rng = make_rng(29);
  std::uniform_real_distribution<double> u(1e-6, 1e-3);
  for (int rep = 0; rep < 100; ++rep) {
    double bump = u(rng);
    CHECK_THROWS_AS(ProbVector({0.5 + bump, 0.5 + bump}),
                    InvariantViolationError);
    CHECK_THROWS_AS(ProbVector({-bump, 1.0 + bump}), InvariantViolationError);
  }
}
