#include "eqp/ks.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "eqp/errors.hpp"

namespace eqp {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_sf(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  const double a = -2.0 * lambda * lambda;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * std::exp(a * j * j);
    sum += term;
    if (std::abs(term) < 1e-10) return std::clamp(2.0 * sum, 0.0, 1.0);
    sign = -sign;
  }
  return 1.0;
}

namespace {

double stephens(double n, double d) {
  const double s = std::sqrt(n);
  return (s + 0.12 + 0.11 / s) * d;
}

// D+ (empirical above model) and D- parts for a shift mu; D+ grows with mu.
std::pair<double, double> ks_parts(const std::vector<double>& x, double sigma, double mu) {
  const double n = static_cast<double>(x.size());
  double up = 0.0, down = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf((x[i] - mu) / sigma);
    up = std::max(up, static_cast<double>(i + 1) / n - f);
    down = std::max(down, f - static_cast<double>(i) / n);
  }
  return {up, down};
}

}  // namespace

KsResult ks_normality(std::span<const double> samples, double sigma, double shift_tol,
                      double eps) {
  KsResult out;
  out.n = samples.size();
  if (sigma < 0.0 || !std::isfinite(sigma)) throw UsageError("ks_normality: sigma must be >= 0");
  if (sigma == 0.0) {
    out.degenerate = true;
    std::size_t big = 0;
    for (double v : samples) big += std::abs(v) > eps ? 1 : 0;
    out.degenerate_fraction =
        samples.empty() ? 0.0 : static_cast<double>(big) / static_cast<double>(samples.size());
    return out;
  }
  if (samples.size() < 100) throw UsageError("ks_normality needs at least 100 samples");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  auto stat = [&](double mu) {
    auto [u, d] = ks_parts(x, sigma, mu);
    return std::max(u, d);
  };
  double mu = 0.0;
  if (shift_tol > 0.0) {
    // max(D+, D-) is minimized where the increasing and decreasing parts cross.
    double lo = -shift_tol, hi = shift_tol;
    auto gap = [&](double m) {
      auto [u, d] = ks_parts(x, sigma, m);
      return u - d;
    };
    if (gap(lo) >= 0.0) {
      mu = lo;
    } else if (gap(hi) <= 0.0) {
      mu = hi;
    } else {
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) < 0.0 ? lo : hi) = mid;
      }
      mu = stat(lo) < stat(hi) ? lo : hi;
    }
  }
  out.shift = mu;
  out.statistic = stat(mu);
  out.p_value = kolmogorov_sf(stephens(static_cast<double>(x.size()), out.statistic));
  return out;
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw UsageError("ks_two_sample needs non-empty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  KsResult out;
  out.n = x.size() + y.size();
  out.statistic = d;
  out.p_value = kolmogorov_sf(stephens(n * m / (n + m), d));
  return out;
}

}  // namespace eqp
