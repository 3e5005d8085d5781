#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eqp/cocycle.hpp"
#include "eqp/drivers.hpp"
#include "eqp/ks.hpp"

namespace eqp {

/// Mergeable running moments (Welford / Chan).
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x);
  void merge(const Moments& o);
  double variance() const;  // unbiased; 0 below two samples
  double standard_error() const;
};

/// Runs f(i) for i in [0, count) on up to `jobs` threads. Results must be
/// stored by index; the first exception by index is rethrown.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& f);

/// Kendall rank correlation of y against its position.
double kendall_tau(std::span<const double> y);
/// Least-squares slope of y on x.
double fit_slope(std::span<const double> x, std::span<const double> y);

/// Replica r of an ensemble rooted at `seed`.
StreamKey replica_key(std::uint64_t seed, std::size_t r);

struct LyapunovOptions {
  std::int64_t n = 2000;
  int n_replicas = 200;
  /// The first n * burn_in steps are discarded from the time average, which
  /// removes the O(1/n) start-up term ln <., X_0> / n.
  double burn_in = 0.1;
  /// Run the ensemble branch E ln ||phi_0^*(Z_1)||.
  bool ensemble = true;
  /// Throw when more than 20% of replicas miss tau within the horizon.
  bool strict_tau = true;
  std::int64_t tau_horizon = 64;
  ZOptions z{};
  int jobs = 1;
};

struct LyapunovResult {
  /// Time-average branch (the primary estimate).
  double l_hat = 0.0;
  double std_error = 0.0;
  std::optional<double> ensemble;
  std::optional<double> ensemble_std_error;
  /// |time average - ensemble| <= 3 combined standard errors.
  bool agree = true;
  int replicas = 0;
  /// Replicas without strict positivity within the horizon (ensemble branch).
  int dropped = 0;
  int z_truncated = 0;
};

LyapunovResult lyapunov(const Driver& driver, std::uint64_t seed, const LyapunovOptions& opts = {});

struct LlnOptions {
  std::vector<std::int64_t> n_grid{50, 100, 200, 500, 1000, 2000};
  int n_probe_pairs = 4;
  int n_replicas = 1;
  double l_hat = 0.0;
  /// Extra maps past max(n_grid) for the backward Z sweep.
  std::int64_t z_extra = 400;
  int jobs = 1;
};

struct LlnPoint {
  std::int64_t n = 0;
  /// Replica means of D_n, E_n and max |(1/n) ln <Y, Phi^(n) X> - l_hat|.
  double d_n = 0.0;
  double e_n = 0.0;
  double sup_dev = 0.0;
  /// Probe pairs with <Y, Phi^(n) X> = 0, summed over replicas.
  int excluded = 0;
};

struct LlnCurves {
  std::vector<LlnPoint> points;
  /// Kendall tau of E_n / n over the tail half of the grid.
  double e_tail_trend = 0.0;
  /// max_n n * sup_dev.
  double fitted_c = 0.0;
  /// Largest Z truncation bound used by E_n.
  double z_bound = 0.0;
};

/// The sup over states is taken over basis-projector pairs, n_probe_pairs
/// random pure pairs and (I/D, I/D).
LlnCurves lln_curves(const Driver& driver, std::uint64_t seed, const LlnOptions& opts = {});

struct KappaOptions {
  std::vector<std::int64_t> n_grid{8, 10, 12, 14, 16, 18, 20, 22, 24};
  int n_replicas = 1;
  /// Window phi_n o ... o phi_{floor((1 - alpha) n) + 1}.
  std::optional<double> alpha;
  double floor = 1e-13;
  int jobs = 1;
};

struct KappaResult {
  double kappa_hat = 0.0;
  /// Fitted slope of mean ln c against n (alpha ln kappa in window mode).
  double slope = 0.0;
  std::vector<std::int64_t> n;
  std::vector<double> mean_log_c;
  bool exhaustive = false;
};

KappaResult kappa(const Driver& driver, std::uint64_t seed, const KappaOptions& opts = {});

struct QSample {
  std::uint64_t seed = 0;
  std::int64_t n = 0;
  double q = 0.0;
};

struct CltOptions {
  std::int64_t n = 2000;
  int n_replicas = 2000;
  DensityMatrix x = DensityMatrix::maximally_mixed(2);
  DensityMatrix y = DensityMatrix::maximally_mixed(2);
  double l_hat = 0.0;
  int jobs = 1;
};

/// Q = (ln <Y, Phi^(n)(X)> - n l_hat) / sqrt(n), one per replica.
std::vector<QSample> clt_samples(const Driver& driver, std::uint64_t seed, const CltOptions& opts);

enum class SigmaMethod { direct, batch_means, martingale_series };
const char* to_string(SigmaMethod m);

struct SigmaEstimate {
  SigmaMethod method = SigmaMethod::direct;
  double value = 0.0;
  double std_error = 0.0;
  int k_max = 0;
  int mc_inner = 0;
  int samples = 0;
  /// Per-lag energies E[(E[xi_-k | F^0] - E[xi_-k | F^1])^2] (martingale only).
  std::vector<double> terms;
  /// Last 10 terms carry more than 1% of the total.
  bool tail_flag = false;
  /// Largest Z truncation bound (martingale only).
  double z_bound = 0.0;
  int z_truncated = 0;
};

/// Sample variance of Q with the fourth-moment standard error.
SigmaEstimate sigma_direct(std::span<const QSample> samples);
SigmaEstimate sigma_direct(std::span<const double> q);

/// One trajectory of `length` steps from I/D cut into floor(sqrt(length))
/// batches; sigma^2 = Var(batch sum) / batch length.
SigmaEstimate sigma_batch_means(const Driver& driver, std::uint64_t seed, std::int64_t length);

struct MartingaleOptions {
  int k_max = 50;
  int outer = 2000;
  int mc_inner = 64;
  double z_tol = 1e-6;
  std::int64_t z_max_depth = 1000;
  int jobs = 1;
};

/// Monte Carlo of E[(sum_{k<=k_max} E[xi_-k | F^0] - E[xi_-k | F^1])^2]. The
/// maps with index >= 0 are frozen per outer sample; the older ones are
/// resampled mc_inner times with common random numbers for both conditionings
/// and the square of the inner mean is estimated by a U-statistic.
/// Rotation drivers are rejected.
SigmaEstimate sigma_martingale(const Driver& driver, std::uint64_t seed,
                               const MartingaleOptions& opts = {});

struct XiSample {
  std::int64_t k = 0;
  double xi = 0.0;
  double z_trunc_bound = 0.0;
  double l_used = 0.0;
};

/// xi_k = ln ||phi_k^*(Z_{k+1})||_1 - l_hat for k in [k_lo, k_hi], with Z from
/// a backward sweep over the whole window.
std::vector<XiSample> xi_samples(const PathWindow& path, std::int64_t k_lo, std::int64_t k_hi,
                                 double l_hat);

enum class GateVerdict { applicable, not_applicable, unknown };
const char* to_string(GateVerdict v);

struct CltGate {
  double p = 3.0;
  /// S_N = sum_{n<=N} alpha_n^((p-2)/p), N = 1..n_terms.
  std::vector<double> alpha_partial_sums;
  /// S_N - S_{N/2} at N = n_terms.
  double cauchy = 0.0;
  GateVerdict verdict = GateVerdict::unknown;
  std::string reason;
};

CltGate clt_gate(const Driver& driver, double p, int n_terms = 1000, double cauchy_tol = 1e-9);

}  // namespace eqp
