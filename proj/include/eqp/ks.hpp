#pragma once

#include <cstddef>
#include <span>

namespace eqp {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  /// sigma = 0: no test is run and `degenerate_fraction` holds the share of
  /// samples with |x| > eps.
  bool degenerate = false;
  double degenerate_fraction = 0.0;
  /// Mean shift at which the statistic was minimized (0 without tolerance).
  double shift = 0.0;
};

double normal_cdf(double x);

/// Q_KS(lambda) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2), at most 100
/// terms, stopping once a term drops below 1e-10. Returns 1 when the series
/// has not settled (very small lambda).
double kolmogorov_sf(double lambda);

/// One-sample KS test against N(0, sigma^2) with the Stephens correction
/// lambda = (sqrt(n) + 0.12 + 0.11 / sqrt(n)) D. A nonzero `shift_tol` treats
/// the centering as known only to +-shift_tol and reports the smallest
/// statistic over that band. Needs at least 100 samples.
KsResult ks_normality(std::span<const double> samples, double sigma, double shift_tol = 0.0,
                      double eps = 1e-6);

/// Two-sample KS test with effective size n m / (n + m).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

}  // namespace eqp
