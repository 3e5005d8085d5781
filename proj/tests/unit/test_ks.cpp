#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "eqp/errors.hpp"
#include "eqp/ks.hpp"
#include "eqp/rng.hpp"
#include "oracles.hpp"

using namespace eqp;

namespace {

std::vector<double> normal_draws(std::uint64_t seed, int n, double sd = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, sd);
  std::vector<double> v(n);
  for (double& x : v) x = dist(gen);
  return v;
}

}  // namespace

TEST(Ks, NormalCdfMatchesQuadrature) {
  for (double x : {-5.0, -1.3, 0.0, 0.4, 2.2, 6.0}) EXPECT_NEAR(normal_cdf(x), oracle::normal_cdf(x), 1e-12);
}

TEST(Ks, KolmogorovSeriesMatchesThetaForm) {
  for (double x : {0.3, 0.5, 0.8, 1.0, 1.36, 1.63, 2.5}) {
    EXPECT_NEAR(kolmogorov_sf(x), oracle::kolmogorov_sf(x), 1e-10) << x;
  }
  // Classical critical values.
  EXPECT_NEAR(kolmogorov_sf(1.3581), 0.05, 1e-4);
  EXPECT_NEAR(kolmogorov_sf(1.6276), 0.01, 1e-4);
}

TEST(Ks, AcceptsOwnGenerator) {
  const KsResult r = ks_normality(normal_draws(1234, 10000), 1.0);
  EXPECT_GT(r.p_value, 0.01);
  EXPECT_FALSE(r.degenerate);
}

TEST(Ks, RejectsWrongScale) {
  const KsResult r = ks_normality(normal_draws(1234, 10000), 2.0);
  EXPECT_LT(r.p_value, 1e-6);
  EXPECT_NEAR(r.statistic, 0.16, 0.02);
}

TEST(Ks, StatisticMatchesDirectComputation) {
  auto v = normal_draws(5, 300, 1.5);
  const KsResult r = ks_normality(v, 1.5);
  std::sort(v.begin(), v.end());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = oracle::normal_cdf(v[i] / 1.5);
    d = std::max({d, (i + 1.0) / v.size() - f, f - double(i) / v.size()});
  }
  EXPECT_NEAR(r.statistic, d, 1e-12);
}

TEST(Ks, DegenerateBranch) {
  const KsResult r = ks_normality(std::vector<double>(200, 0.0), 0.0);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.degenerate_fraction, 0.0);
  std::vector<double> some(200, 0.0);
  some[3] = 0.1;
  EXPECT_NEAR(ks_normality(some, 0.0).degenerate_fraction, 1.0 / 200, 1e-15);
}

TEST(Ks, ShiftBandAbsorbsSmallOffset) {
  auto v = normal_draws(6, 2000);
  for (double& x : v) x += 0.08;
  const KsResult plain = ks_normality(v, 1.0);
  const KsResult banded = ks_normality(v, 1.0, 0.1);
  EXPECT_LE(banded.statistic, plain.statistic);
  EXPECT_LE(std::abs(banded.shift), 0.1);
  EXPECT_GT(banded.p_value, 0.01);
}

TEST(Ks, TooFewSamples) {
  EXPECT_THROW(ks_normality(std::vector<double>(10, 0.0), 1.0), UsageError);
}

TEST(Ks, TwoSample) {
  const KsResult same = ks_two_sample(normal_draws(7, 1000), normal_draws(8, 1000));
  EXPECT_GT(same.p_value, 0.01);
  const KsResult diff = ks_two_sample(normal_draws(7, 1000), normal_draws(8, 1000, 1.5));
  EXPECT_LT(diff.p_value, 1e-4);
}
