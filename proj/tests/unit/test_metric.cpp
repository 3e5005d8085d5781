#include <gtest/gtest.h>

#include <cmath>

#include "eqp/errors.hpp"
#include "eqp/map_families.hpp"
#include "eqp/metric.hpp"
#include "eqp/qubit.hpp"
#include "oracles.hpp"

using namespace eqp;

namespace {

const HermitianMatrix kA = HermitianMatrix::diagonal({0.7, 0.3});
const HermitianMatrix kB = HermitianMatrix::diagonal({0.5, 0.5});

double c_exhaustive(const PositiveMap& phi) {
  const ContractionEstimate c = contraction_coeff(phi);
  EXPECT_TRUE(c.exhaustive);
  return c.lower;
}

DensityMatrix act(const PositiveMap& phi, const DensityMatrix& x) {
  return normalize_state(phi.apply(HermitianMatrix(x)));
}

double log_norm(const PositiveMap& phi, const HermitianMatrix& x) {
  return std::log(trace_norm(phi.apply(x)));
}

}  // namespace

TEST(MCoeff, Cases) {
  Rng rng = make_rng(1);
  const DensityMatrix x = random_state(rng, 3);
  EXPECT_NEAR(m_coeff(x, x), 1.0, 1e-12);
  EXPECT_NEAR(m_coeff(kA, kB), 0.6, 1e-12);
  EXPECT_EQ(m_coeff(HermitianMatrix::diagonal({1.0, 0.0}), kB), 0.0);
}

TEST(MCoeff, LambdaGridConfirmsDiagonalValue) {
  for (int i = 0; i <= 1000; ++i) {
    const double lam = 1.2 * i / 1000.0;
    const bool psd = min_eigenvalue(kA - kB * lam) >= -1e-15;
    EXPECT_EQ(psd, lam <= 0.6 + 1e-12) << lam;
  }
}

TEST(MCoeff, MatchesIndependentOracles) {
  Rng rng = make_rng(2);
  for (int i = 0; i < 100; ++i) {
    const DensityMatrix a = random_state(rng, 2), b = random_state(rng, 2);
    EXPECT_NEAR(m_coeff(a, b), oracle::m_qubit(a.matrix(), b.matrix()), 1e-10);
    const DensityMatrix a3 = random_state(rng, 3), b3 = random_state(rng, 3);
    EXPECT_NEAR(m_coeff(a3, b3), oracle::m_bisect(a3.matrix(), b3.matrix()), 1e-9);
  }
}

TEST(Dist, Cases) {
  Rng rng = make_rng(3);
  const DensityMatrix x = random_state(rng, 2);
  EXPECT_NEAR(dist(x, x).d, 0.0, 1e-12);
  const MetricValue v = dist(kA, kB);
  EXPECT_NEAR(v.m_ab, 0.6, 1e-12);
  EXPECT_NEAR(v.m_ba, 5.0 / 7.0, 1e-12);
  EXPECT_NEAR(v.d, 0.4, 1e-12);
  EXPECT_EQ(dist(HermitianMatrix::diagonal({1.0, 0.0}), HermitianMatrix::diagonal({0.0, 1.0})).d,
            1.0);
}

TEST(Dist, BlochFormulaAgrees) {
  Rng rng = make_rng(4);
  for (int i = 0; i < 200; ++i) {
    const DensityMatrix a = random_state(rng, 2), b = random_state(rng, 2);
    const Eigen::Vector4d pa = qubit::pauli_coefficients(a.matrix());
    const Eigen::Vector4d pb = qubit::pauli_coefficients(b.matrix());
    const double want = oracle::d_qubit(a.matrix(), b.matrix());
    EXPECT_NEAR(dist(a, b).d, want, 1e-10);
    EXPECT_NEAR(qubit::bloch_distance(pa.tail<3>() / pa(0), pb.tail<3>() / pb(0)), want, 1e-10);
  }
}

TEST(HilbertMetric, Cases) {
  Rng rng = make_rng(5);
  const DensityMatrix x = random_state(rng, 2);
  EXPECT_NEAR(hilbert_metric(x, x), 0.0, 1e-12);
  const double h = hilbert_metric(kA, kB);
  EXPECT_NEAR(h, -std::log(3.0 / 7.0), 1e-12);
  EXPECT_NEAR(std::tanh(h / 2), 0.4, 1e-12);
  EXPECT_TRUE(std::isinf(hilbert_metric(kB, HermitianMatrix::diagonal({1.0, 0.0}))));
}

TEST(HilbertMetric, TanhIdentity) {
  Rng rng = make_rng(6);
  for (int i = 0; i < 200; ++i) {
    const DensityMatrix a = random_state(rng, 2 + i % 3), b = random_state(rng, 2 + i % 3);
    EXPECT_NEAR(dist(a, b).d, std::tanh(hilbert_metric(a, b) / 2), 1e-12);
  }
}

TEST(MetricAxioms, RandomTriples) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng = make_rng(seed, 77);
    const int d = 2 + static_cast<int>(seed % 3);
    const DensityMatrix x = random_state(rng, d), y = random_state(rng, d), z = random_state(rng, d);
    const double dxy = dist(x, y).d;
    EXPECT_NEAR(dxy, dist(y, x).d, 1e-12);
    EXPECT_LE(dxy, dist(x, z).d + dist(z, y).d + 1e-9);
    EXPECT_GT(dxy, 0.0);
    EXPECT_LE(dist(x, x).d, 1e-12);
  }
}

TEST(MetricAxioms, NormComparison) {
  Rng rng = make_rng(8);
  for (int i = 0; i < 1000; ++i) {
    const DensityMatrix a = random_state(rng, 2), b = random_state(rng, 2);
    const double d = dist(a, b).d;
    EXPECT_LE(0.5 * trace_norm(a - b), d + 1e-12);
    EXPECT_LE(d, 1.0);
  }
}

TEST(Contraction, Cases) {
  EXPECT_GT(contraction_coeff(PositiveMap::identity(2)).lower, 0.999);
  EXPECT_LE(contraction_coeff(maps::depolarizing(1.0)).lower, 1e-12);
  const ContractionEstimate c = contraction_coeff(maps::depolarizing(0.5));
  EXPECT_TRUE(c.exhaustive);
  EXPECT_NEAR(c.lower, 0.8, 1e-9);
  EXPECT_NEAR(c.lower, oracle::c_depolarizing(0.5), 1e-9);
  // Antipodal pure states attain it.
  EXPECT_NEAR(pair_distance(maps::depolarizing(0.5).superop(), 2, c.attained_at.first,
                            c.attained_at.second),
              0.8, 1e-9);
}

TEST(Contraction, DestructiveMapThrows) {
  EXPECT_THROW(contraction_coeff(maps::diag_conj({1.0, 0.0})), DestructiveImageError);
}

TEST(Contraction, MatchesFibonacciGridOracle) {
  for (int i = 0; i < 10; ++i) {
    const PositiveMap phi = maps::random_cp(4, 1000 + i);
    const double grid = oracle::c_qubit_grid(oracle::superop_by_basis(phi));
    const double c = c_exhaustive(phi);
    EXPECT_GE(c, grid - 1e-9);
    EXPECT_LE(c, grid + 1e-3);
  }
}

TEST(Contraction, BoundsActualContraction) {
  Rng rng = make_rng(9);
  for (int i = 0; i < 20; ++i) {
    const PositiveMap phi = maps::random_cp(3, 2000 + i);
    const double c = c_exhaustive(phi);
    for (int k = 0; k < 50; ++k) {
      const DensityMatrix x = random_state(rng, 2), y = random_state(rng, 2);
      EXPECT_LE(dist(act(phi, x), act(phi, y)).d, c * dist(x, y).d + 1e-9);
    }
  }
}

TEST(Contraction, SubMultiplicative) {
  for (int i = 0; i < 10; ++i) {
    const PositiveMap f = maps::random_cp(3, 3000 + i), g = maps::random_cp(3, 3100 + i);
    EXPECT_LE(c_exhaustive(compose(f, g)), c_exhaustive(f) * c_exhaustive(g) + 1e-3);
  }
  // Strict for depolarizing: c(dep^2) = c(dep(0.75)) = 0.47 < 0.64.
  const double c2 = c_exhaustive(compose(maps::depolarizing(0.5), maps::depolarizing(0.5)));
  EXPECT_NEAR(c2, oracle::c_depolarizing(0.75), 1e-9);
  EXPECT_LT(c2, 0.64);
}

TEST(Contraction, AdjointEquality) {
  for (int i = 0; i < 10; ++i) {
    const PositiveMap phi = maps::random_cp(3, 4000 + i);
    EXPECT_NEAR(c_exhaustive(phi), c_exhaustive(adjoint(phi)), 1e-3);
  }
}

TEST(Lemmas, MeanValueInequality) {
  Rng rng = make_rng(10);
  for (int i = 0; i < 1000; ++i) {
    const PositiveMap phi = maps::random_cp(1 + i % 4, 5000 + i);
    const DensityMatrix x = random_state(rng, 2), y = random_state(rng, 2);
    const double lhs = std::abs(log_norm(phi, x) - log_norm(phi, y));
    EXPECT_LE(lhs, 2.0 * op_norm(phi) / v_of(phi) * dist(x, y).d + 1e-9);
  }
}

TEST(Lemmas, LogRatioProposition) {
  Rng rng = make_rng(11);
  int checked = 0;
  for (double r : {0.3, 0.6, 0.9}) {
    // Depolarizing strengths putting c(phi) just under r, composed with a random map.
    for (int i = 0; i < 10; ++i) {
      const double s = (1.0 - std::sqrt(1.0 - r * r)) / r * (0.9 + 0.01 * i);
      const PositiveMap phi = compose(maps::depolarizing(1.0 - s), maps::random_cp(3, 6000 + i));
      const double c = c_exhaustive(phi);
      if (c > r) continue;
      for (int k = 0; k < 34; ++k) {
        const PositiveMap psi = maps::random_cp(2, 7000 + 100 * i + k);
        const DensityMatrix a = random_state(rng, 2), b = random_state(rng, 2);
        const double lhs =
            std::abs(log_norm(psi, act(phi, a)) - log_norm(psi, act(phi, b)));
        EXPECT_LE(lhs, c * (2.0 / r) * std::log(1.0 / (1.0 - r)) + 1e-9);
        ++checked;
      }
    }
  }
  EXPECT_GE(checked, 1000);
}
