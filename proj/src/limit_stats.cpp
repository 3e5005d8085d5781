#include "eqp/limit_stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "eqp/errors.hpp"
#include "eqp/rng.hpp"

namespace eqp {

namespace {

constexpr std::uint64_t kProbeStream = 0x9b0beULL;
constexpr std::uint64_t kInnerStream = 0x3a11ULL;

double neg_inf() { return -std::numeric_limits<double>::infinity(); }

}  // namespace

void Moments::add(double x) {
  ++n;
  const double delta = x - mean;
  mean += delta / static_cast<double>(n);
  m2 += delta * (x - mean);
}

void Moments::merge(const Moments& o) {
  if (o.n == 0) return;
  if (n == 0) {
    *this = o;
    return;
  }
  const double total = static_cast<double>(n + o.n);
  const double delta = o.mean - mean;
  mean += delta * static_cast<double>(o.n) / total;
  m2 += o.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(o.n) / total;
  n += o.n;
}

double Moments::variance() const { return n < 2 ? 0.0 : m2 / static_cast<double>(n - 1); }

double Moments::standard_error() const {
  return n < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(n));
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& f) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double kendall_tau(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (y[j] > y[i]) s += 1.0;
      if (y[j] < y[i]) s -= 1.0;
    }
  }
  return s / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("fit_slope needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

StreamKey replica_key(std::uint64_t seed, std::size_t r) {
  return {replica_seed(seed, static_cast<std::uint64_t>(r)), 0};
}

LyapunovResult lyapunov(const Driver& driver, std::uint64_t seed, const LyapunovOptions& opts) {
  if (opts.n < 2 || opts.n_replicas < 1) throw UsageError("lyapunov: need n >= 2, replicas >= 1");
  const auto table = compiled(driver);
  const int d = table->dim();
  const auto burn = static_cast<std::int64_t>(std::floor(opts.burn_in * static_cast<double>(opts.n)));
  const auto reps = static_cast<std::size_t>(opts.n_replicas);

  struct Rep {
    double time_avg = 0.0;
    std::optional<double> ens;
    bool dropped = false;
    bool truncated = false;
  };
  std::vector<Rep> out(reps);
  parallel_for(reps, opts.jobs, [&](std::size_t r) {
    const StreamKey key = replica_key(seed, r);
    IndexStream stream(driver, key, 1);
    Accumulator acc(table, DensityMatrix::maximally_mixed(d));
    double at_burn = 0.0;
    for (std::int64_t k = 1; k <= opts.n; ++k) {
      acc.step(stream.next(), k);
      if (k == burn) at_burn = acc.log_norm();
    }
    out[r].time_avg = (acc.log_norm() - at_burn) / static_cast<double>(opts.n - burn);
    if (!opts.ensemble) return;
    const std::int64_t hi = std::max(opts.tau_horizon, opts.z.max_depth + 2);
    const PathWindow path = driver.sample_path(key, 0, hi);
    StoppingOptions so;
    so.horizon = opts.tau_horizon;
    so.two_sided = false;
    if (!stopping_times(path, so).tau) {
      out[r].dropped = true;
      return;
    }
    ZOptions zo = opts.z;
    zo.residual = false;
    const ZEstimate z = estimate_Z(path, 1, zo);
    out[r].truncated = z.truncated;
    CVector y = vec_state(z.z);
    CVector scratch(y.size());
    out[r].ens = table->step_adjoint(path.index_at(0), y, scratch, 0);
  });

  LyapunovResult res;
  res.replicas = opts.n_replicas;
  Moments ta, en;
  for (const Rep& r : out) {
    ta.add(r.time_avg);
    if (r.dropped) ++res.dropped;
    if (r.truncated) ++res.z_truncated;
    if (r.ens) en.add(*r.ens);
  }
  res.l_hat = ta.mean;
  res.std_error = ta.standard_error();
  if (opts.ensemble) {
    if (res.dropped > 0.2 * opts.n_replicas) {
      if (opts.strict_tau) {
        std::ostringstream os;
        os << res.dropped << " of " << opts.n_replicas
           << " replicas found no strict positivity within horizon " << opts.tau_horizon;
        throw ResourceError(os.str());
      }
    } else if (en.n > 0) {
      res.ensemble = en.mean;
      res.ensemble_std_error = en.standard_error();
      const double combined = std::hypot(res.std_error, *res.ensemble_std_error);
      res.agree = std::abs(res.l_hat - en.mean) <= std::max(3.0 * combined, 1e-12);
    }
  }
  return res;
}

LlnCurves lln_curves(const Driver& driver, std::uint64_t seed, const LlnOptions& opts) {
  if (opts.n_grid.empty()) throw UsageError("lln_curves: empty n grid");
  std::vector<std::int64_t> grid = opts.n_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.front() < 1) throw UsageError("lln_curves: grid entries must be >= 1");
  const std::int64_t n_max = grid.back();
  const auto table = compiled(driver);
  const int d = table->dim();

  // Probe states, shared by every replica.
  std::vector<DensityMatrix> xs, ys;
  for (int i = 0; i < d; ++i) {
    CVector e = CVector::Zero(d);
    e[i] = 1.0;
    xs.push_back(DensityMatrix::pure(e));
    ys.push_back(DensityMatrix::pure(e));
  }
  Rng rng = make_rng(seed, kProbeStream);
  for (int p = 0; p < opts.n_probe_pairs; ++p) {
    xs.push_back(DensityMatrix::pure(haar_vector(rng, d)));
    ys.push_back(DensityMatrix::pure(haar_vector(rng, d)));
  }
  xs.push_back(DensityMatrix::maximally_mixed(d));
  ys.push_back(DensityMatrix::maximally_mixed(d));
  const std::size_t mixed = xs.size() - 1;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) pairs.emplace_back(i, j);
  }
  for (int p = 0; p < opts.n_probe_pairs; ++p) pairs.emplace_back(d + p, d + p);
  pairs.emplace_back(mixed, mixed);
  std::vector<CVector> vy;
  for (const auto& y : ys) vy.push_back(vec_state(y));
  const double log_d = std::log(static_cast<double>(d));

  struct Rep {
    std::vector<double> dn, en, dev;
    std::vector<int> excluded;
    double z_bound = 0.0;
  };
  const auto reps = static_cast<std::size_t>(opts.n_replicas);
  std::vector<Rep> out(reps);
  parallel_for(reps, opts.jobs, [&](std::size_t r) {
    const PathWindow path = driver.sample_path(replica_key(seed, r), 1, n_max + opts.z_extra);
    const ZSweep sweep = backward_sweep(path);
    std::vector<Accumulator> acc;
    for (const auto& x : xs) acc.emplace_back(table, x);
    Rep& rep = out[r];
    rep.z_bound = sweep.bound[static_cast<std::size_t>(n_max)];
    double z_sum = 0.0;
    std::size_t g = 0;
    for (std::int64_t k = 1; k <= n_max; ++k) {
      const int j = path.index_at(k);
      for (auto& a : acc) a.step(j, k);
      z_sum += sweep.log_step[static_cast<std::size_t>(k - 1)];
      if (k != grid[g]) continue;
      ++g;
      std::vector<double> log_dual(ys.size());
      double e_n = 0.0;
      for (std::size_t y = 0; y < ys.size(); ++y) {
        log_dual[y] = log_d + acc[mixed].log_pairing(vy[y]);
        e_n = std::max(e_n, std::abs(log_dual[y] - z_sum));
      }
      double d_n = 0.0, dev = 0.0;
      int excl = 0;
      for (auto [xi, yi] : pairs) {
        const double lp = acc[xi].log_pairing(vy[yi]);
        if (!std::isfinite(lp)) {
          ++excl;
          continue;
        }
        d_n = std::max(d_n, std::abs(lp - log_dual[yi]));
        dev = std::max(dev, std::abs(lp / static_cast<double>(k) - opts.l_hat));
      }
      rep.dn.push_back(d_n);
      rep.en.push_back(e_n);
      rep.dev.push_back(dev);
      rep.excluded.push_back(excl);
    }
  });

  LlnCurves c;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    LlnPoint p;
    p.n = grid[g];
    for (const Rep& rep : out) {
      p.d_n += rep.dn[g];
      p.e_n += rep.en[g];
      p.sup_dev += rep.dev[g];
      p.excluded += rep.excluded[g];
    }
    const auto m = static_cast<double>(reps);
    p.d_n /= m;
    p.e_n /= m;
    p.sup_dev /= m;
    c.fitted_c = std::max(c.fitted_c, p.sup_dev * static_cast<double>(p.n));
    c.points.push_back(p);
  }
  for (const Rep& rep : out) c.z_bound = std::max(c.z_bound, rep.z_bound);
  std::vector<double> tail;
  for (std::size_t g = grid.size() / 2; g < grid.size(); ++g) {
    tail.push_back(c.points[g].e_n / static_cast<double>(c.points[g].n));
  }
  c.e_tail_trend = kendall_tau(tail);
  return c;
}

KappaResult kappa(const Driver& driver, std::uint64_t seed, const KappaOptions& opts) {
  if (opts.n_grid.size() < 2) throw UsageError("kappa: need at least two grid points");
  if (opts.alpha && !(*opts.alpha > 0.0 && *opts.alpha <= 1.0)) {
    throw UsageError("kappa: alpha must lie in (0, 1]");
  }
  const auto table = compiled(driver);
  const int d = table->dim();
  const std::int64_t n_max = *std::max_element(opts.n_grid.begin(), opts.n_grid.end());
  const auto reps = static_cast<std::size_t>(opts.n_replicas);
  const std::size_t g_count = opts.n_grid.size();
  std::vector<std::vector<double>> logc(reps, std::vector<double>(g_count));
  parallel_for(reps, opts.jobs, [&](std::size_t r) {
    const PathWindow path = driver.sample_path(replica_key(seed, r), 1, n_max);
    for (std::size_t g = 0; g < g_count; ++g) {
      const std::int64_t n = opts.n_grid[g];
      std::int64_t lo = 1;
      if (opts.alpha) {
        lo = static_cast<std::int64_t>(std::floor((1.0 - *opts.alpha) * static_cast<double>(n))) + 1;
      }
      double c = 1.0;
      try {
        c = contraction_coeff(normalized_product(*table, path, lo, n), d).lower;
      } catch (const DestructiveImageError&) {
      }
      logc[r][g] = c <= opts.floor ? neg_inf() : std::log(c);
    }
  });
  KappaResult res;
  res.exhaustive = d == 2;
  std::vector<double> xs, ys;
  for (std::size_t g = 0; g < g_count; ++g) {
    double s = 0.0;
    for (std::size_t r = 0; r < reps; ++r) s += logc[r][g];
    const double mean = s / static_cast<double>(reps);
    res.n.push_back(opts.n_grid[g]);
    res.mean_log_c.push_back(mean);
    if (std::isfinite(mean)) {
      xs.push_back(static_cast<double>(opts.n_grid[g]));
      ys.push_back(mean);
    }
  }
  // A collapse below the floor means E ln c = -inf, hence kappa = 0.
  const bool collapsed = !std::isfinite(res.mean_log_c[std::distance(
      res.n.begin(), std::max_element(res.n.begin(), res.n.end()))]);
  if (collapsed || xs.size() < 2) {
    res.slope = neg_inf();
    res.kappa_hat = 0.0;
    return res;
  }
  res.slope = fit_slope(xs, ys);
  res.kappa_hat = std::exp(res.slope / opts.alpha.value_or(1.0));
  return res;
}

std::vector<QSample> clt_samples(const Driver& driver, std::uint64_t seed,
                                 const CltOptions& opts) {
  if (opts.n < 1 || opts.n_replicas < 1) throw UsageError("clt_samples: need n, replicas >= 1");
  const auto table = compiled(driver);
  const CVector vy = vec_state(opts.y);
  const auto reps = static_cast<std::size_t>(opts.n_replicas);
  std::vector<QSample> out(reps);
  const double root = std::sqrt(static_cast<double>(opts.n));
  parallel_for(reps, opts.jobs, [&](std::size_t r) {
    const StreamKey key = replica_key(seed, r);
    IndexStream stream(driver, key, 1);
    Accumulator acc(table, opts.x);
    for (std::int64_t k = 1; k <= opts.n; ++k) acc.step(stream.next(), k);
    out[r] = {key.seed, opts.n,
              (acc.log_pairing(vy) - static_cast<double>(opts.n) * opts.l_hat) / root};
  });
  return out;
}

const char* to_string(SigmaMethod m) {
  switch (m) {
    case SigmaMethod::direct:
      return "direct";
    case SigmaMethod::batch_means:
      return "batch_means";
    default:
      return "martingale_series";
  }
}

SigmaEstimate sigma_direct(std::span<const double> q) {
  if (q.size() < 2) throw UsageError("sigma_direct needs at least two samples");
  Moments m;
  for (double v : q) m.add(v);
  const double var_biased = m.m2 / static_cast<double>(m.n);
  double m4 = 0.0;
  for (double v : q) m4 += std::pow(v - m.mean, 4);
  m4 /= static_cast<double>(m.n);
  SigmaEstimate s;
  s.method = SigmaMethod::direct;
  s.value = m.variance();
  s.std_error = std::sqrt(std::max(0.0, m4 - var_biased * var_biased) / static_cast<double>(m.n));
  s.samples = static_cast<int>(m.n);
  return s;
}

SigmaEstimate sigma_direct(std::span<const QSample> samples) {
  std::vector<double> q;
  q.reserve(samples.size());
  for (const auto& s : samples) q.push_back(s.q);
  return sigma_direct(q);
}

SigmaEstimate sigma_batch_means(const Driver& driver, std::uint64_t seed, std::int64_t length) {
  if (length < 16) throw UsageError("sigma_batch_means needs length >= 16");
  const auto table = compiled(driver);
  const auto batches = static_cast<std::int64_t>(std::floor(std::sqrt(static_cast<double>(length))));
  const std::int64_t size = length / batches;
  IndexStream stream(driver, StreamKey{seed, 0}, 1);
  Accumulator acc(table, DensityMatrix::maximally_mixed(table->dim()));
  Moments m;
  std::int64_t k = 0;
  for (std::int64_t b = 0; b < batches; ++b) {
    const double start = acc.log_norm();
    for (std::int64_t i = 0; i < size; ++i) {
      ++k;
      acc.step(stream.next(), k);
    }
    m.add(acc.log_norm() - start);
  }
  SigmaEstimate s;
  s.method = SigmaMethod::batch_means;
  s.value = m.variance() / static_cast<double>(size);
  s.std_error = s.value * std::sqrt(2.0 / static_cast<double>(batches - 1));
  s.samples = static_cast<int>(batches);
  return s;
}

SigmaEstimate sigma_martingale(const Driver& driver, std::uint64_t seed,
                               const MartingaleOptions& opts) {
  if (driver.kind() == DriverKind::rotation) {
    throw UsageError("martingale_series needs an iid, markov or deterministic driver");
  }
  if (opts.k_max < 0 || opts.outer < 2 || opts.mc_inner < 2) {
    throw UsageError("martingale_series: need k_max >= 0, outer >= 2, mc_inner >= 2");
  }
  const auto table = compiled(driver);
  const int d = table->dim();
  const auto lags = static_cast<std::size_t>(opts.k_max + 1);
  const auto outer = static_cast<std::size_t>(opts.outer);
  const double pairs = static_cast<double>(opts.mc_inner) * (opts.mc_inner - 1);

  struct Out {
    double value = 0.0;
    std::vector<double> terms;
    double z_bound = 0.0;
    bool truncated = false;
  };
  std::vector<Out> out(outer);
  parallel_for(outer, opts.jobs, [&](std::size_t o) {
    const StreamKey key = replica_key(seed, o);
    const PathWindow path = driver.sample_path(key, 0, opts.z_max_depth + 1);
    Out& res = out[o];
    std::int64_t depth = opts.z_max_depth;
    if (auto m = product_depth(*table, path, 1, opts.z_tol, opts.z_max_depth)) {
      depth = *m;
    } else {
      res.truncated = true;
    }
    CVector z1 = vec_state(DensityMatrix::maximally_mixed(d));
    CVector scratch(z1.size());
    double bound = 1.0;
    for (std::int64_t k = 1 + depth; k >= 1; --k) {
      table->step_adjoint(path.index_at(k), z1, scratch, k);
      bound *= table->adjoint_contraction(path.index_at(k));
    }
    res.z_bound = bound;
    const int f0 = path.index_at(0);
    const int f1 = path.index_at(1);
    CVector z0 = z1;
    const double xi0 = table->step_adjoint(f0, z0, scratch, 0);

    const std::uint64_t useed = hash_key(key.seed, kInnerStream, 0);
    std::vector<double> sk(lags, 0.0), qk(lags, 0.0);
    double s = 0.0, q = 0.0;
    CVector a(z1.size()), b(z1.size());
    for (int i = 0; i < opts.mc_inner; ++i) {
      a = z0;
      b = z1;
      const int b0 = driver.draw_before(f1, counter_uniform(useed, static_cast<std::uint64_t>(i), 0));
      double e = xi0 - table->step_adjoint(b0, b, scratch, 0);
      double di = e;
      sk[0] += e;
      qk[0] += e * e;
      int prev_a = f0, prev_b = b0;
      for (int j = 1; j <= opts.k_max; ++j) {
        const double u = counter_uniform(useed, static_cast<std::uint64_t>(i), j);
        prev_a = driver.draw_before(prev_a, u);
        prev_b = driver.draw_before(prev_b, u);
        e = table->step_adjoint(prev_a, a, scratch, -j) - table->step_adjoint(prev_b, b, scratch, -j);
        di += e;
        sk[static_cast<std::size_t>(j)] += e;
        qk[static_cast<std::size_t>(j)] += e * e;
      }
      s += di;
      q += di * di;
    }
    res.value = (s * s - q) / pairs;
    res.terms.resize(lags);
    for (std::size_t k = 0; k < lags; ++k) res.terms[k] = (sk[k] * sk[k] - qk[k]) / pairs;
  });

  SigmaEstimate est;
  est.method = SigmaMethod::martingale_series;
  est.k_max = opts.k_max;
  est.mc_inner = opts.mc_inner;
  est.samples = opts.outer;
  est.terms.assign(lags, 0.0);
  Moments m;
  for (const Out& r : out) {
    m.add(r.value);
    for (std::size_t k = 0; k < lags; ++k) est.terms[k] += r.terms[k] / static_cast<double>(outer);
    est.z_bound = std::max(est.z_bound, r.z_bound);
    if (r.truncated) ++est.z_truncated;
  }
  est.value = std::max(0.0, m.mean);
  est.std_error = m.standard_error();
  double total = 0.0, tail = 0.0;
  for (std::size_t k = 0; k < lags; ++k) {
    total += std::abs(est.terms[k]);
    if (k + 10 >= lags && k > 0) tail += std::abs(est.terms[k]);
  }
  est.tail_flag = total > 0.0 && tail > 0.01 * total;
  return est;
}

std::vector<XiSample> xi_samples(const PathWindow& path, std::int64_t k_lo, std::int64_t k_hi,
                                 double l_hat) {
  if (k_lo > k_hi || !path.covers(k_lo, k_hi)) throw UsageError("xi_samples: range not covered");
  const ZSweep sweep = backward_sweep(path);
  std::vector<XiSample> out;
  for (std::int64_t k = k_lo; k <= k_hi; ++k) {
    XiSample x;
    x.k = k;
    x.xi = sweep.log_step[static_cast<std::size_t>(k - path.lo)] - l_hat;
    x.z_trunc_bound = k < path.hi ? sweep.bound[static_cast<std::size_t>(k + 1 - path.lo)] : 1.0;
    x.l_used = l_hat;
    out.push_back(x);
  }
  return out;
}

const char* to_string(GateVerdict v) {
  switch (v) {
    case GateVerdict::applicable:
      return "applicable";
    case GateVerdict::not_applicable:
      return "not_applicable";
    default:
      return "unknown";
  }
}

CltGate clt_gate(const Driver& driver, double p, int n_terms, double cauchy_tol) {
  if (!(p >= 2.0)) throw UsageError("clt_gate needs p >= 2");
  if (n_terms < 2) throw UsageError("clt_gate needs at least two terms");
  CltGate g;
  g.p = p;
  if (driver.kind() == DriverKind::rotation) {
    g.verdict = GateVerdict::not_applicable;
    g.reason = "driver not mixing";
    return g;
  }
  if (p == 2.0) {
    g.verdict = GateVerdict::unknown;
    g.reason = "p = 2 needs rho-mixing coefficients, which are not available";
    return g;
  }
  const double e = (p - 2.0) / p;
  double s = 0.0;
  g.alpha_partial_sums.reserve(static_cast<std::size_t>(n_terms));
  for (int n = 1; n <= n_terms; ++n) {
    const double a = driver.alpha_bound(n);
    s += a > 0.0 ? std::pow(a, e) : 0.0;
    g.alpha_partial_sums.push_back(s);
  }
  g.cauchy = s - g.alpha_partial_sums[static_cast<std::size_t>(n_terms / 2 - 1)];
  std::ostringstream os;
  if (g.cauchy <= cauchy_tol) {
    g.verdict = GateVerdict::applicable;
    if (s == 0.0) {
      os << "alpha_n = 0 for all n";
    } else {
      os << "partial sums settle: S_" << n_terms << " - S_" << n_terms / 2 << " = " << g.cauchy
         << " <= " << cauchy_tol;
    }
  } else {
    g.verdict = GateVerdict::unknown;
    os << "partial sums not settled: S_" << n_terms << " - S_" << n_terms / 2 << " = " << g.cauchy;
  }
  g.reason = os.str();
  return g;
}

}  // namespace eqp
