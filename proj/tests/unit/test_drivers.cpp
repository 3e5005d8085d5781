#include <gtest/gtest.h>

#include <cmath>

#include "eqp/drivers.hpp"
#include "eqp/errors.hpp"
#include "eqp/map_families.hpp"
#include "oracles.hpp"

using namespace eqp;

namespace {

std::vector<PositiveMap> two_maps() {
  return {maps::depolarizing(0.5), maps::amplitude_damping(0.3)};
}

RMatrix chain(double a, double b) {
  RMatrix p(2, 2);
  p << 1 - a, a, b, 1 - b;
  return p;
}

}  // namespace

TEST(Stationary, TwoStateClosedForm) {
  const StationaryResult s = stationary_dist(chain(0.3, 0.1));
  EXPECT_NEAR(s.pi(0), 0.25, 1e-13);
  EXPECT_NEAR(s.pi(1), 0.75, 1e-13);
  EXPECT_LE(s.residual, 1e-13);
}

TEST(Stationary, DoublyStochasticIsUniform) {
  RMatrix p(3, 3);
  p << 0.2, 0.5, 0.3, 0.5, 0.3, 0.2, 0.3, 0.2, 0.5;
  const StationaryResult s = stationary_dist(p);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.pi(i), 1.0 / 3.0, 1e-13);
}

TEST(Stationary, RejectsReducibleAndNonStochastic) {
  EXPECT_THROW(stationary_dist(RMatrix::Identity(2, 2)), DriverError);
  EXPECT_THROW(Driver::markov(two_maps(), RMatrix::Identity(2, 2)), DriverError);
  EXPECT_THROW(stationary_dist(chain(0.3, 0.1) * 1.1), DriverError);
  RMatrix periodic(2, 2);
  periodic << 0, 1, 1, 0;
  EXPECT_THROW(stationary_dist(periodic), DriverError);
}

TEST(SamplePath, DeterministicIsConstant) {
  const Driver d = Driver::deterministic(two_maps(), 1);
  const PathWindow w = d.sample_path(3, -10, 10);
  for (std::int64_t k = -10; k <= 10; ++k) EXPECT_EQ(w.index_at(k), 1);
}

TEST(SamplePath, DegenerateIidLaw) {
  const Driver d = Driver::iid(two_maps(), {1.0, 0.0});
  const PathWindow w = d.sample_path(3, -50, 50);
  for (std::int64_t k = -50; k <= 50; ++k) EXPECT_EQ(w.index_at(k), 0);
}

TEST(SamplePath, MarkovTransitionFrequencies) {
  const RMatrix p = chain(0.3, 0.1);
  const Driver d = Driver::markov(two_maps(), p);
  Eigen::Matrix2d counts = Eigen::Matrix2d::Zero();
  for (std::uint64_t r = 0; r < 10000; ++r) {
    const PathWindow w = d.sample_path(hash_key(42, 1, static_cast<std::int64_t>(r)), -5, 5);
    for (std::int64_t k = -5; k < 5; ++k) counts(w.index_at(k), w.index_at(k + 1)) += 1.0;
  }
  ASSERT_EQ(counts.sum(), 1e5);
  for (int i = 0; i < 2; ++i) {
    const double n = counts.row(i).sum();
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt(p(i, j) * (1 - p(i, j)) / n);
      EXPECT_LE(std::abs(counts(i, j) / n - p(i, j)), 3 * se) << i << j;
    }
  }
}

TEST(SamplePath, StationaryMarginals) {
  const Driver iid = Driver::iid(two_maps(), {0.3, 0.7});
  const Driver mk = Driver::markov(two_maps(), chain(0.3, 0.1));
  for (const Driver* d : {&iid, &mk}) {
    const double want = d->kind() == DriverKind::iid ? 0.3 : 0.25;
    for (std::int64_t k : {-7, 0, 9}) {
      int hits = 0;
      const int n = 20000;
      for (int r = 0; r < n; ++r) {
        hits += d->sample_path(hash_key(5, 2, r), std::min<std::int64_t>(k, 0),
                               std::max<std::int64_t>(k, 0))
                    .index_at(k) == 0;
      }
      const double se = std::sqrt(want * (1 - want) / n);
      EXPECT_LE(std::abs(hits / double(n) - want), 3 * se) << to_string(d->kind()) << " k=" << k;
    }
  }
}

TEST(SamplePath, BitIdenticalForSameSeed) {
  const Driver d = Driver::markov(two_maps(), chain(0.3, 0.1));
  const PathWindow a = d.sample_path(99, -100, 100), b = d.sample_path(99, -100, 100);
  EXPECT_EQ(a.index, b.index);
  EXPECT_EQ(a.trace, b.trace);
  const Driver r = Driver::rotation(two_maps(), std::sqrt(2.0) - 1.0, {0.4, 0.6});
  EXPECT_EQ(r.sample_path(7, -30, 30).trace, r.sample_path(7, -30, 30).trace);
}

TEST(SamplePath, ShiftConsistency) {
  const Driver d = Driver::iid(two_maps(), {0.5, 0.5});
  const StreamKey key{11, 0};
  for (std::int64_t k = -20; k <= 20; ++k) {
    EXPECT_EQ(d.index_at(key.shifted(3), k), d.index_at(key, k + 3));
  }
  IndexStream s(d, key, -4);
  const PathWindow w = d.sample_path(key, -4, 20);
  for (std::int64_t k = -4; k <= 20; ++k) EXPECT_EQ(s.next(), w.index_at(k));
}

TEST(SamplePath, MarkovStreamMatchesWindow) {
  const Driver d = Driver::markov(two_maps(), chain(0.3, 0.1));
  const StreamKey key{12, 0};
  const PathWindow w = d.sample_path(key, -30, 30);
  IndexStream s(d, key, -30);
  for (std::int64_t k = -30; k <= 30; ++k) EXPECT_EQ(s.next(), w.index_at(k));
}

TEST(Rotation, RejectsNearRationalAngles) {
  EXPECT_THROW(Driver::rotation(two_maps(), 0.25, {0.5, 0.5}), DriverError);
  EXPECT_THROW(Driver::rotation(two_maps(), 1.0 / 7.0 + 1e-12, {0.5, 0.5}), DriverError);
  EXPECT_EQ(near_rational(std::sqrt(2.0) - 1.0), 0);
  EXPECT_THROW(Driver::rotation(two_maps(), std::sqrt(2.0) - 1.0, {0.5, 0.4}), DriverError);
}

TEST(AlphaBound, Cases) {
  const Driver iid = Driver::iid(two_maps(), {0.5, 0.5});
  const Driver rot = Driver::rotation(two_maps(), std::sqrt(2.0) - 1.0, {0.5, 0.5});
  for (int n : {1, 5, 50}) {
    EXPECT_EQ(iid.alpha_bound(n), 0.0);
    EXPECT_EQ(rot.alpha_bound(n), 1.0);
  }
}

TEST(AlphaBound, MarkovMatchesExplicitPowers) {
  const RMatrix p = chain(0.3, 0.1);
  const Driver d = Driver::markov(two_maps(), p);
  for (int n = 1; n <= 40; ++n) {
    const double want = std::min(0.25, 0.5 * oracle::max_tv(p, n));
    EXPECT_NEAR(d.alpha_bound(n), want, 1e-12) << n;
  }
  // Two-state TV decays exactly like 0.6^n.
  EXPECT_NEAR(d.alpha_bound(20) / d.alpha_bound(19), 0.6, 1e-9);
}

TEST(AlphaBound, NonIncreasing) {
  RMatrix p3(3, 3);
  p3 << 0.1, 0.6, 0.3, 0.4, 0.4, 0.2, 0.5, 0.1, 0.4;
  const std::vector<Driver> drivers{
      Driver::iid(two_maps(), {0.5, 0.5}), Driver::markov(two_maps(), chain(0.3, 0.1)),
      Driver::markov({maps::depolarizing(0.1), maps::depolarizing(0.2), maps::depolarizing(0.3)}, p3),
      Driver::rotation(two_maps(), std::sqrt(2.0) - 1.0, {0.5, 0.5}),
      Driver::deterministic(two_maps())};
  for (const Driver& d : drivers) {
    for (int n = 1; n < 200; ++n) EXPECT_LE(d.alpha_bound(n + 1), d.alpha_bound(n) + 1e-15);
  }
}

TEST(AlphaBound, MixingSeriesIsCauchy) {
  const Driver d = Driver::markov(two_maps(), chain(0.3, 0.1));
  const double e = (3.0 - 2.0) / 3.0;
  double half = 0.0, full = 0.0;
  for (int n = 1; n <= 1000; ++n) {
    const double t = std::pow(d.alpha_bound(n), e);
    full += t;
    if (n <= 500) half += t;
  }
  EXPECT_LE(full - half, 1e-9);
}

TEST(DrawBefore, FollowsReversedKernel) {
  const RMatrix p = chain(0.3, 0.1);
  const Driver d = Driver::markov(two_maps(), p);
  // Reversed kernel q(y | x) = pi(y) P(y, x) / pi(x).
  const Eigen::Vector2d pi(0.25, 0.75);
  const int n = 40000;
  for (int next = 0; next < 2; ++next) {
    int zeros = 0;
    for (int i = 0; i < n; ++i) zeros += d.draw_before(next, (i + 0.5) / n) == 0;
    const double want = pi(0) * p(0, next) / pi(next);
    EXPECT_NEAR(zeros / double(n), want, 1e-4);
  }
  const Driver rot = Driver::rotation(two_maps(), std::sqrt(2.0) - 1.0, {0.5, 0.5});
  EXPECT_THROW(rot.draw_before(0, 0.5), UsageError);
}
