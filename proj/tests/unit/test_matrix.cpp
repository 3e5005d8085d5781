#include <gtest/gtest.h>

#include <cmath>

#include "eqp/errors.hpp"
#include "eqp/matrix.hpp"

using namespace eqp;

namespace {

CMatrix pauli_x() {
  CMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

}  // namespace

TEST(HsInner, IdentityWithItself) {
  EXPECT_DOUBLE_EQ(hs_inner(HermitianMatrix::identity(2), HermitianMatrix::identity(2)), 2.0);
}

TEST(HsInner, OrthogonalSupports) {
  EXPECT_EQ(hs_inner(HermitianMatrix::diagonal({1.0, 0.0}), HermitianMatrix::diagonal({0.0, 1.0})),
            0.0);
}

TEST(HsInner, SelfProductIsSumOfSquaredEigenvalues) {
  Rng rng = make_rng(7);
  const HermitianMatrix a = random_hermitian(rng, 3);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix(), Eigen::EigenvaluesOnly);
  EXPECT_NEAR(hs_inner(a, a), es.eigenvalues().squaredNorm(), 1e-12);
}

TEST(HsInner, DimensionMismatchThrows) {
  EXPECT_THROW(hs_inner(HermitianMatrix::identity(2), HermitianMatrix::identity(3)), UsageError);
}

TEST(TraceNorm, SmallCases) {
  EXPECT_DOUBLE_EQ(trace_norm(HermitianMatrix::identity(2)), 2.0);
  EXPECT_NEAR(trace_norm(HermitianMatrix::diagonal({1.0, -1.0})), 2.0, 1e-15);
}

TEST(TraceNorm, PsdEqualsTrace) {
  Rng rng = make_rng(3);
  const HermitianMatrix a = random_psd(rng, 4);
  EXPECT_NEAR(trace_norm(a), a.trace(), 1e-12 * a.trace());
}

TEST(TraceNorm, PsdEqualsPairingWithIdentity) {
  Rng rng = make_rng(21);
  for (int i = 0; i < 50; ++i) {
    const HermitianMatrix a = random_psd(rng, 2 + i % 3);
    EXPECT_NEAR(trace_norm(a), hs_inner(HermitianMatrix::identity(a.dim()), a), 1e-12 * a.trace());
  }
}

TEST(Eigh, DiagonalSortedAscending) {
  const EigenDecomposition e = eigh(HermitianMatrix::diagonal({3.0, 1.0, 2.0}));
  EXPECT_NEAR(e.values(0), 1.0, 1e-15);
  EXPECT_NEAR(e.values(1), 2.0, 1e-15);
  EXPECT_NEAR(e.values(2), 3.0, 1e-15);
}

TEST(Eigh, PauliX) {
  const EigenDecomposition e = eigh(HermitianMatrix(pauli_x()));
  EXPECT_NEAR(e.values(0), -1.0, 1e-15);
  EXPECT_NEAR(e.values(1), 1.0, 1e-15);
}

TEST(Eigh, ReconstructionResidual) {
  Rng rng = make_rng(11);
  const HermitianMatrix a = random_hermitian(rng, 5);
  const EigenDecomposition e = eigh(a);
  const CMatrix back = e.vectors * e.values.cast<Complex>().asDiagonal() * e.vectors.adjoint();
  EXPECT_LE(trace_norm(CMatrix(back - a.matrix())), 1e-11);
  EXPECT_LE((e.vectors.adjoint() * e.vectors - CMatrix::Identity(5, 5)).norm(), 1e-12);
}

TEST(Eigh, SpectrumReproducesTraceMoments) {
  Rng rng = make_rng(12);
  for (int i = 0; i < 50; ++i) {
    const HermitianMatrix a = random_hermitian(rng, 2 + i % 4);
    const RVector v = eigh(a).values;
    for (int k = 1; k < v.size(); ++k) EXPECT_LE(v(k - 1), v(k));
    EXPECT_NEAR(v.sum(), a.trace(), 1e-10);
    EXPECT_NEAR(v.squaredNorm(), (a.matrix() * a.matrix()).trace().real(), 1e-10);
  }
}

TEST(NormalizeState, SmallCases) {
  const DensityMatrix a = normalize_state(HermitianMatrix::identity(2));
  EXPECT_NEAR(a(0, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(a(1, 1).real(), 0.5, 1e-15);
  const DensityMatrix b = normalize_state(HermitianMatrix::diagonal({3.0, 1.0}));
  EXPECT_NEAR(b(0, 0).real(), 0.75, 1e-15);
  EXPECT_NEAR(b(1, 1).real(), 0.25, 1e-15);
}

TEST(NormalizeState, ZeroIsDestructive) {
  EXPECT_THROW(normalize_state(HermitianMatrix::zero(2)), DestructiveImageError);
}

TEST(NormalizeState, Idempotent) {
  Rng rng = make_rng(5);
  for (int i = 0; i < 20; ++i) {
    const DensityMatrix x = random_state(rng, 3);
    EXPECT_LE((normalize_state(x).matrix() - x.matrix()).norm(), 1e-12);
  }
}

TEST(HermitianMatrix, RejectsNonHermitian) {
  CMatrix m(2, 2);
  m << 1.0, 2.0, 0.0, 1.0;
  EXPECT_THROW(HermitianMatrix{m}, UsageError);
}

TEST(DensityMatrix, RejectsNegativeEigenvalue) {
  EXPECT_THROW(DensityMatrix::from(HermitianMatrix::diagonal({1.5, -0.5})), UsageError);
}
