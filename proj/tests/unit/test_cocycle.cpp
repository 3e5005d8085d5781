#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "eqp/cocycle.hpp"
#include "eqp/errors.hpp"
#include "eqp/map_families.hpp"
#include "eqp/metric.hpp"
#include "oracles.hpp"

using namespace eqp;

namespace {

PathWindow manual_path(std::vector<PositiveMap> table, std::int64_t lo, std::vector<int> index) {
  PathWindow w;
  w.lo = lo;
  w.hi = lo + static_cast<std::int64_t>(index.size()) - 1;
  w.index = std::move(index);
  w.trace.assign(w.index.size(), 0.0);
  w.table = std::make_shared<const std::vector<PositiveMap>>(std::move(table));
  return w;
}

DensityMatrix from_vec(const CVector& v) {
  return normalize_state(HermitianMatrix(unvec(v, static_cast<int>(std::lround(std::sqrt(v.size()))))));
}

// Two-sample KS p-value from the theta-form oracle.
double two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  const double ne = double(a.size()) * b.size() / (a.size() + b.size());
  return oracle::kolmogorov_sf((std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d);
}

const Driver& mixed_driver() {
  static const Driver d = Driver::iid({maps::depolarizing(0.3), maps::amplitude_damping(0.5),
                                       maps::random_cp(2, 21)},
                                      {0.4, 0.3, 0.3});
  return d;
}

}  // namespace

TEST(ForwardCocycle, TracePreservingHasZeroLogNorm) {
  const Driver d = Driver::iid({maps::depolarizing(0.2), maps::amplitude_damping(0.4)}, {0.5, 0.5});
  const auto xs = forward_cocycle(d.sample_path(1, 1, 200), DensityMatrix::maximally_mixed(2), 200);
  ASSERT_EQ(xs.size(), 200u);
  for (const auto& x : xs) EXPECT_EQ(x.log_norm, 0.0);
}

TEST(ForwardCocycle, DiagonalConjugation) {
  const Driver d = Driver::deterministic({maps::diag_conj({0.9, 0.4})});
  const auto xs =
      forward_cocycle(d.sample_path(1, 1, 50), DensityMatrix::pure(CVector::Unit(2, 0)), 50);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    EXPECT_NEAR(xs[k].log_norm, (k + 1) * std::log(0.81), 1e-12 * (k + 1));
  }
}

TEST(ForwardCocycle, TelescopingAgainstDirectProduct) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<PositiveMap> table;
    for (int j = 0; j < 3; ++j) table.push_back(maps::random_cp(1 + j, 100 * seed + j));
    const Driver d = Driver::iid(table, {0.3, 0.3, 0.4});
    const PathWindow w = d.sample_path(seed, 1, 12);
    Rng rng = make_rng(seed, 3);
    const DensityMatrix x0 = random_state(rng, 2);
    const auto xs = forward_cocycle(w, x0, 12);
    CMatrix direct = CMatrix::Identity(4, 4);
    for (std::int64_t k = 1; k <= 12; ++k) {
      direct = oracle::superop_by_basis(w.at(k)) * direct;
      const CVector want = direct * vec(x0.matrix());
      const CVector got = std::exp(xs[k - 1].log_norm) * vec(xs[k - 1].state.matrix());
      EXPECT_LE((want - got).norm() / want.norm(), 1e-9);
    }
  }
}

TEST(ForwardCocycle, DestructiveStepNamesIndex) {
  // |1><1| survives the depolarizing steps but not a later projection onto |1>'s kernel.
  const PathWindow w = manual_path({maps::depolarizing(0.5), maps::diag_conj({1.0, 0.0})}, 1,
                                   {1, 0, 1});
  try {
    forward_cocycle(w, DensityMatrix::pure(CVector::Unit(2, 1)), 3);
    FAIL() << "expected a destructive image";
  } catch (const DestructiveImageError& e) {
    ASSERT_TRUE(e.index());
    EXPECT_EQ(*e.index(), 1);
  }
}

TEST(AdjointBackward, IdentityPathKeepsY) {
  const PathWindow w = manual_path({PositiveMap::identity(2)}, 1, {0, 0, 0, 0});
  Rng rng = make_rng(2);
  const DensityMatrix y = random_state(rng, 2);
  const BackwardResult r = adjoint_backward(w, y, 4, 4);
  EXPECT_LE((r.state.matrix() - y.matrix()).norm(), 1e-15);
}

TEST(AdjointBackward, DepolarizingContractsGeometrically) {
  const double p = 0.3;
  const Driver d = Driver::iid({maps::depolarizing(p), maps::depolarizing(p)}, {0.5, 0.5});
  const PathWindow w = d.sample_path(4, 1, 20);
  const DensityMatrix y = DensityMatrix::pure(CVector::Unit(2, 0));
  for (std::int64_t k = 20; k >= 1; --k) {
    const BackwardResult r = adjoint_backward(w, y, k, 20, false);
    EXPECT_LE(dist(r.state, DensityMatrix::maximally_mixed(2)).d, std::pow(1 - p, 20 - k + 1) + 1e-12);
  }
}

TEST(AdjointBackward, TwoProbesWithinWindowContraction) {
  const PathWindow w = mixed_driver().sample_path(5, 1, 6);
  Rng rng = make_rng(5);
  CMatrix prod = CMatrix::Identity(4, 4);
  for (std::int64_t j = 3; j <= 6; ++j) prod = prod * oracle::superop_by_basis(adjoint(w.at(j)));
  const double c_oracle = oracle::c_qubit_grid(prod);
  for (int i = 0; i < 20; ++i) {
    const DensityMatrix y = random_state(rng, 2), y2 = random_state(rng, 2);
    const BackwardResult a = adjoint_backward(w, y, 3, 6), b = adjoint_backward(w, y2, 3, 6);
    EXPECT_LE(dist(a.state, b.state).d, c_oracle + 1e-3);
    EXPECT_TRUE(a.exhaustive);
    EXPECT_NEAR(a.contraction_bound, c_oracle, 1e-3);
  }
}

TEST(EstimateZ, DeterministicIsLeftPerronVector) {
  const PositiveMap phi = maps::random_cp(3, 31);
  const PathWindow w = Driver::deterministic({phi}).sample_path(1, 1, 1100);
  const ZEstimate z = estimate_Z(w, 1);
  EXPECT_LE(dist(z.z, perron_left(phi).eigenmatrix).d, 1e-8);
  EXPECT_LE(z.residual, 1e-8);
  EXPECT_TRUE(z.certified);
}

TEST(EstimateZ, FullDepolarizingAtDepthOne) {
  const PathWindow w = Driver::deterministic({maps::depolarizing(1.0)}).sample_path(1, 1, 1100);
  const ZEstimate z = estimate_Z(w, 1);
  EXPECT_LE((z.z.matrix() - CMatrix::Identity(2, 2) / 2.0).norm(), 1e-15);
  EXPECT_LE(z.depth_used, 1);
}

TEST(EstimateZ, FixedPointRelation) {
  const ZOptions opts;
  const Driver d = Driver::iid({maps::depolarizing(0.3), maps::random_cp(2, 8)}, {0.5, 0.5});
  const PathWindow w = d.sample_path(42, -2, 1100);
  const ZEstimate z0 = estimate_Z(w, 0, opts);
  EXPECT_LE(z0.residual, 2 * opts.tol);
  // Independent check of the residual: apply phi_0^* to Z_1 by hand.
  const ZEstimate z1 = estimate_Z(w, 1, opts);
  const DensityMatrix pushed = normalize_state(adjoint(w.at(0)).apply(HermitianMatrix(z1.z)));
  EXPECT_LE(dist(pushed, z0.z).d, 2 * opts.tol);
}

TEST(StoppingTimes, StrictlyPositivePath) {
  const PathWindow w = Driver::iid({maps::depolarizing(0.5)}, {1.0}).sample_path(1, -64, 64);
  const StoppingRecord s = stopping_times(w);
  EXPECT_EQ(s.tau, 1);
  EXPECT_EQ(s.tau_prime, 1);
}

TEST(StoppingTimes, RankDeficientFirstStep) {
  std::vector<int> idx(129, 1);
  idx[64 + 1] = 0;  // position k = 1
  // Pure states stay pure under the first step, so it is not strictly positive.
  const PathWindow w = manual_path({maps::diag_conj({1.0, 0.5}), maps::depolarizing(0.5)}, -64, idx);
  const StoppingRecord s = stopping_times(w);
  EXPECT_EQ(s.tau, 2);
  ASSERT_EQ(s.certificates.size(), 2u);
  // Certificate for tau - 1 carries a witness that the first step fails.
  const auto& fail = s.certificates[1];
  EXPECT_EQ(fail.verdict, Verdict::certified_no);
  ASSERT_TRUE(fail.witness_u && fail.witness_v);
  EXPECT_LE(witness_value(w.at(1), *fail.witness_u, *fail.witness_v), 1e-9);
}

TEST(StoppingTimes, NeverPositiveWithinHorizon) {
  const PathWindow w = Driver::deterministic({maps::amplitude_damping(1.0)}).sample_path(1, -64, 64);
  const StoppingRecord s = stopping_times(w);
  EXPECT_FALSE(s.tau);
}

TEST(StoppingTimes, DepolarizingTauR) {
  const Driver d = Driver::iid({maps::depolarizing(0.5)}, {1.0});
  StoppingOptions o;
  o.r = 0.5;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const StoppingRecord s = stopping_times(d.sample_path(seed, -64, 64), o);
    // Smallest n with 0.8^n <= 0.5.
    int want = 1;
    while (std::pow(oracle::c_depolarizing(0.5), want) > 0.5) ++want;
    EXPECT_EQ(s.tau_r, want);
    EXPECT_EQ(want, 4);
    // Composed c(dep(0.5)^n) = c(dep(1 - 0.5^n)) reaches 0.5 at n = 2.
    EXPECT_EQ(s.tau_r_alternate, 2);
  }
}

TEST(PerronSequence, UnitalPath) {
  const Driver d = Driver::iid({maps::depolarizing(0.2), maps::bit_flip(0.3)}, {0.5, 0.5});
  for (const auto& e : perron_sequence(d.sample_path(1, 1, 64), {1, 8, 64})) {
    ASSERT_TRUE(e.error.empty()) << e.error;
    EXPECT_NEAR(e.log_lambda, 0.0, 1e-12);
    EXPECT_LE((e.left.matrix() - CMatrix::Identity(2, 2) / 2.0).norm(), 1e-9);
    EXPECT_LE((e.right.matrix() - CMatrix::Identity(2, 2) / 2.0).norm(), 1e-9);
  }
}

TEST(PerronSequence, DiagonalFamily) {
  const PathWindow w = Driver::deterministic({maps::diag_conj({0.9, 0.4})}).sample_path(1, 1, 40);
  for (const auto& e : perron_sequence(w, {1, 5, 40})) {
    EXPECT_NEAR(e.log_lambda, e.n * std::log(0.81), 1e-10);
  }
}

TEST(PerronSequence, IdentityGapAndDenseOracle) {
  const PathWindow w = mixed_driver().sample_path(9, 1, 32);
  CMatrix prod = CMatrix::Identity(4, 4);
  std::int64_t k = 0;
  for (const auto& e : perron_sequence(w, {1, 2, 4, 8, 16, 32})) {
    ASSERT_TRUE(e.error.empty()) << e.error;
    EXPECT_LE(e.identity_gap, 1e-8);
    while (k < e.n) prod = oracle::superop_by_basis(w.at(++k)) * prod;
    const double rho = oracle::spectral_radius(prod);
    EXPECT_NEAR(e.log_lambda, std::log(rho), 1e-8);
  }
}

TEST(PerronSequence, LeftVectorsApproachZ) {
  const PathWindow w = mixed_driver().sample_path(42, -2, 1100);
  const ZEstimate z = estimate_Z(w, 1);
  const auto seq = perron_sequence(w, {4, 8, 16, 32});
  for (std::size_t i = 1; i < seq.size(); ++i) {
    EXPECT_LE(dist(seq[i].left, z.z).d, dist(seq[i - 1].left, z.z).d + 1e-12);
    EXPECT_LE(dist(seq[i].left, seq[i - 1].left).d, 1.0);
  }
  for (std::size_t i = 2; i < seq.size(); ++i) {
    EXPECT_LE(dist(seq[i].left, seq[i - 1].left).d, dist(seq[i - 1].left, seq[i - 2].left).d + 1e-12);
  }
}

TEST(PsiContraction, DecaysTowardKappa) {
  // (1/n) ln c of the adjoint window shrinks toward ln(1 - p) for depolarizing steps.
  const double p = 0.4;
  const Driver d = Driver::iid({maps::depolarizing(p), maps::depolarizing(p)}, {0.5, 0.5});
  const PathWindow w = d.sample_path(3, -16, 0);
  const auto table = compiled(w);
  std::vector<double> rate;
  for (std::int64_t n : {1, 2, 4, 8}) {
    const CMatrix psi = normalized_product(*table, w, -n, -1, true);
    rate.push_back(std::log(contraction_coeff(psi, 2).lower) / n);
  }
  for (std::size_t i = 1; i < rate.size(); ++i) {
    EXPECT_LT(std::abs(rate[i] - std::log(1 - p)), std::abs(rate[i - 1] - std::log(1 - p)));
  }
}

TEST(REnsemble, ForwardLawMatchesBackwardLimit) {
  const Driver& d = mixed_driver();
  const auto table = compiled(d);
  Rng rng = make_rng(17);
  const HermitianMatrix probe = random_hermitian(rng, 2);
  const CVector vw = vec(probe.matrix());
  std::vector<double> fwd, bwd;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const PathWindow f = d.sample_path(hash_key(s, 1, 0), 1, 30);
    Accumulator a(table, DensityMatrix::maximally_mixed(2));
    for (std::int64_t k = 1; k <= 30; ++k) a.step(f.index_at(k), k);
    fwd.push_back(a.pairing(vw));
    const PathWindow b = d.sample_path(hash_key(s, 2, 0), -80, -1);
    Accumulator z(table, DensityMatrix::maximally_mixed(2));
    for (std::int64_t k = -80; k <= -1; ++k) z.step(b.index_at(k), k);
    bwd.push_back(z.pairing(vw));
  }
  EXPECT_GT(two_sample_p(fwd, bwd), 0.01);
}

TEST(BackwardSweep, AgreesWithEstimateZ) {
  const PathWindow w = mixed_driver().sample_path(6, 1, 1200);
  const ZSweep s = backward_sweep(w, true);
  const ZEstimate z = estimate_Z(w, 1);
  EXPECT_LE(dist(from_vec(s.z[0]), z.z).d, 1e-7);
}
