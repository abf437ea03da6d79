#include <gtest/gtest.h>

#include "qinstr/gates.hpp"
#include "qinstr/operator.hpp"
#include "test_util.hpp"

using namespace qinstr;
using qinstr::testutil::random_density;
using qinstr::testutil::random_hermitian;

namespace {

// Kronecker product written entry by entry, independent of the library.
Matrix kron_oracle(const Matrix& a, const Matrix& b) {
  Matrix r(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      for (int k = 0; k < b.rows(); ++k)
        for (int l = 0; l < b.cols(); ++l) r(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return r;
}

Matrix diag(std::initializer_list<double> v) {
  Matrix m = Matrix::Zero(v.size(), v.size());
  int i = 0;
  for (double x : v) m(i, i) = x, ++i;
  return m;
}

}  // namespace

TEST(HilbertShape, DimensionIsProductOfFactors) {
  HilbertShape s{2, 3, 3};
  EXPECT_EQ(s.dim(), 18);
  EXPECT_EQ(s.concat(HilbertShape{2}).factors(), (std::vector<int>{2, 3, 3, 2}));
  EXPECT_THROW(HilbertShape(std::vector<int>{}), ArgumentError);
}

TEST(Operator, RejectsNonSquareAndNonFinite) {
  EXPECT_THROW(Operator(HilbertShape{2}, Matrix::Zero(2, 3)), ArgumentError);
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = std::nan("");
  EXPECT_THROW(Operator(HilbertShape{2}, m), ArgumentError);
  EXPECT_THROW(Operator(HilbertShape{3}, Matrix::Identity(2, 2)), ArgumentError);
}

TEST(Tensor, IdentityTimesIdentity) {
  Operator r = tensor(Operator::identity(HilbertShape{2}), Operator::identity(HilbertShape{3}));
  EXPECT_EQ(r.shape().factors(), (std::vector<int>{2, 3}));
  EXPECT_LT(max_abs(r.matrix() - Matrix::Identity(6, 6)), 1e-15);
}

TEST(Tensor, PauliXWithQutritXMatchesEntrywiseOracle) {
  Operator r = tensor(Operator(pauli_x()), Operator(qutrit_x()));
  EXPECT_LT(max_abs(r.matrix() - kron_oracle(pauli_x(), qutrit_x())), 1e-15);
  // The generator swaps |0,0> <-> |1,1> and annihilates the loss level.
  EXPECT_EQ(r.matrix()(4, 0), cplx(1.0));
  EXPECT_EQ(r.matrix().col(2).norm(), 0.0);
}

TEST(Tensor, DiagonalKronecker) {
  Operator r = tensor(Operator(diag({1, 2})), Operator(diag({3, 4, 5})));
  EXPECT_LT(max_abs(r.matrix() - diag({3, 4, 5, 6, 8, 10})), 1e-15);
}

TEST(Tensor, MixedProductAndAssociativity) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 10; ++t) {
    Operator a(HilbertShape{2}, testutil::random_complex(rng, 2, 2));
    Operator b(HilbertShape{3}, testutil::random_complex(rng, 3, 3));
    Operator c(HilbertShape{2}, testutil::random_complex(rng, 2, 2));
    Operator d(HilbertShape{3}, testutil::random_complex(rng, 3, 3));
    EXPECT_LT(max_abs((tensor(a, b) * tensor(c, d)).matrix() - tensor(a * c, b * d).matrix()), 1e-11);
    EXPECT_LT(max_abs(tensor(tensor(a, b), c).matrix() - tensor(a, tensor(b, c)).matrix()), 1e-12);
  }
}

TEST(PartialTrace, ProductStateKeepsFirstFactor) {
  std::mt19937_64 rng(3);
  Matrix rho = random_density(rng, 2), sigma = random_density(rng, 3) * 0.7;
  Operator prod = tensor(Operator(HilbertShape{2}, rho), Operator(HilbertShape{3}, sigma));
  Operator r = partial_trace(prod, {0});
  EXPECT_LT(max_abs(r.matrix() - rho * 0.7), 1e-12);
  EXPECT_EQ(r.shape().factors(), std::vector<int>{2});
}

TEST(PartialTrace, BellStateGivesMaximallyMixed) {
  Vector phi = Vector::Zero(4);
  phi(0) = phi(3) = 1.0 / std::sqrt(2.0);
  Operator bell(HilbertShape{2, 2}, phi * phi.adjoint());
  EXPECT_LT(max_abs(partial_trace(bell, {1}).matrix() - 0.5 * Matrix::Identity(2, 2)), 1e-12);
  EXPECT_LT(max_abs(partial_trace(bell, {0}).matrix() - 0.5 * Matrix::Identity(2, 2)), 1e-12);
}

TEST(PartialTrace, DetectionOutputOverAncillaIsSumOfBranches) {
  const double phi = M_PI / 2;
  Vector plus = Vector::Zero(3);
  plus(0) = plus(1) = 1.0 / std::sqrt(2.0);
  Matrix rho_q = plus * plus.adjoint();
  Matrix u = qnd_unitary(phi).matrix();
  Matrix in = kron(ketbra(2, 0, 0), rho_q);
  Operator out(ancilla_qutrit_shape(), u * in * u.adjoint());
  // Branch maps built independently from the block form.
  Matrix b0 = qnd_block0(phi), b1 = qnd_block1(phi);
  Matrix expected = b0 * rho_q * b0.adjoint() + b1 * rho_q * b1.adjoint();
  EXPECT_LT(max_abs(partial_trace(out, {1}).matrix() - expected), 1e-12);
}

TEST(PartialTrace, PreservesTraceAndRejectsBadIndices) {
  std::mt19937_64 rng(5);
  Operator a(HilbertShape{2, 3, 2}, random_density(rng, 12));
  for (std::vector<int> keep : {std::vector<int>{0}, {1}, {2}, {0, 2}, {1, 2}, {0, 1, 2}})
    EXPECT_NEAR(partial_trace(a, keep).trace().real(), 1.0, 1e-12);
  EXPECT_THROW(partial_trace(a, {3}), ArgumentError);
  EXPECT_THROW(partial_trace(a, {}), ArgumentError);
  EXPECT_THROW(partial_trace(a, {1, 1}), ArgumentError);
}

TEST(PartialTrace, OfTensorEqualsScaledFactor) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    Operator a(HilbertShape{3}, testutil::random_complex(rng, 3, 3));
    Operator b(HilbertShape{2, 2}, testutil::random_complex(rng, 4, 4));
    EXPECT_LT(max_abs(partial_trace(tensor(a, b), {0}).matrix() - a.matrix() * b.trace()), 1e-11);
  }
}

TEST(PsdProject, FixedPointAndClipping) {
  std::mt19937_64 rng(1);
  Matrix p = random_density(rng, 4);
  EXPECT_LT(max_abs(psd_project(p) - p), 1e-12);
  EXPECT_LT(max_abs(psd_project(diag({1, -1})) - diag({1, 0})), 1e-15);
}

TEST(PsdProject, TwoByTwoClosedForm) {
  // For a 2x2 Hermitian H = a 1 + b.sigma with eigenvalues a +- |b|, the
  // nearest PSD matrix keeps the positive part: (a+|b|)/2 (1 + b.sigma/|b|) when a - |b| < 0 < a + |b|.
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    double a = n(rng), bx = n(rng), by = n(rng), bz = n(rng);
    double nb = std::sqrt(bx * bx + by * by + bz * bz);
    Matrix h = a * Matrix::Identity(2, 2) + bx * pauli_x() + by * pauli_y() + bz * pauli_z();
    Matrix expect;
    if (a - nb >= 0) expect = h;
    else if (a + nb <= 0) expect = Matrix::Zero(2, 2);
    else expect = 0.5 * (a + nb) * (Matrix::Identity(2, 2) + (bx * pauli_x() + by * pauli_y() + bz * pauli_z()) / nb);
    EXPECT_LT(max_abs(psd_project(h) - expect), 1e-12);
  }
}

TEST(PsdProject, IdempotentAndNoFartherFromAnyPsdMatrix) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 30; ++t) {
    Matrix h = random_hermitian(rng, 4);
    Matrix p = psd_project(h);
    EXPECT_LT(max_abs(psd_project(p) - p), 1e-12);
    for (int k = 0; k < 20; ++k) {
      Matrix q = random_density(rng, 4, 1 + k % 4) * (1.0 + k);
      EXPECT_LE((h - p).norm(), (h - q).norm() + 1e-12);
    }
  }
  EXPECT_THROW(psd_project(testutil::random_complex(rng, 3, 3)), ArgumentError);
}

TEST(Fidelity, KnownValues) {
  HilbertShape q{2};
  DensityOperator zero(q, ketbra(2, 0, 0)), one(q, ketbra(2, 1, 1)), mixed(q, 0.5 * Matrix::Identity(2, 2));
  EXPECT_NEAR(state_fidelity(zero, zero), 1.0, 1e-12);
  EXPECT_NEAR(state_fidelity(zero, one), 0.0, 1e-12);
  EXPECT_NEAR(state_fidelity(zero, mixed), 0.5, 1e-12);
}

TEST(Fidelity, SymmetricAndOneOnlyForEqualStates) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    DensityOperator a(HilbertShape{3}, random_density(rng, 3)), b(HilbertShape{3}, random_density(rng, 3));
    EXPECT_NEAR(state_fidelity(a, b), state_fidelity(b, a), 1e-9);
    EXPECT_LT(state_fidelity(a, b), 1.0 - 1e-6);
    EXPECT_NEAR(state_fidelity(a, a), 1.0, 1e-9);
  }
}

TEST(Fidelity, NormalizesInternallyAndRejectsZeroTrace) {
  std::mt19937_64 rng(6);
  Matrix r = random_density(rng, 2);
  EXPECT_NEAR(fidelity(r, 0.3 * r), 1.0, 1e-9);
  EXPECT_THROW(fidelity(r, Matrix::Zero(2, 2)), ArgumentError);
  EXPECT_THROW(DensityOperator(HilbertShape{2}, Matrix::Zero(2, 2)), ArgumentError);
}

TEST(DensityOperator, InvariantsAreChecked) {
  EXPECT_THROW(DensityOperator(HilbertShape{2}, diag({1.0, -0.1})), ArgumentError);
  EXPECT_THROW(DensityOperator(HilbertShape{2}, diag({0.8, 0.8})), ArgumentError);
  Matrix nh = ketbra(2, 0, 1);
  EXPECT_THROW(DensityOperator(HilbertShape{2}, nh), ArgumentError);
  EXPECT_NO_THROW(DensityOperator(HilbertShape{2}, diag({0.3, 0.2})));
  EXPECT_THROW(Effect(HilbertShape{2}, diag({1.2, 0.0})), ArgumentError);
}

TEST(EigHermitian, IdentityAndPauliX) {
  EigenSystem id = eig_hermitian(Matrix(Matrix::Identity(3, 3)));
  EXPECT_LT((id.values - RealVector::Ones(3)).cwiseAbs().maxCoeff(), 1e-14);
  EigenSystem x = eig_hermitian(pauli_x());
  EXPECT_NEAR(x.values(0), -1.0, 1e-14);
  EXPECT_NEAR(x.values(1), 1.0, 1e-14);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(x.vectors(0, 0) * r - x.vectors(1, 0) * r), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(x.vectors(0, 1) * r + x.vectors(1, 1) * r), 1.0, 1e-12);
}

TEST(EigHermitian, RoundTripAndOrthonormality) {
  std::mt19937_64 rng(10);
  for (int d : {2, 3, 6, 9, 36}) {
    Matrix a = random_hermitian(rng, d);
    EigenSystem es = eig_hermitian(a);
    for (int k = 1; k < d; ++k) EXPECT_LE(es.values(k - 1), es.values(k));
    EXPECT_LT(max_abs(reassemble(es, es.values) - a), 1e-9 * std::max(1.0, a.norm()));
    EXPECT_LT(max_abs(es.vectors.adjoint() * es.vectors - Matrix::Identity(d, d)), 1e-10);
    for (int k = 0; k < d; ++k)
      EXPECT_LT((a * es.vectors.col(k) - es.values(k) * es.vectors.col(k)).norm(), 1e-9 * a.norm());
  }
  EXPECT_THROW(eig_hermitian(testutil::random_complex(rng, 3, 3)), ArgumentError);
}
