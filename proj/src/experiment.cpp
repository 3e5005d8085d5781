#include "eqp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "eqp/cocycle.hpp"
#include "eqp/errors.hpp"
#include "eqp/limit_stats.hpp"
#include "eqp/metric.hpp"
#include "eqp/rng.hpp"

namespace eqp {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kLhatStream = 0x1a7ULL;
constexpr std::uint64_t kBatchStream = 0xba7ULL;
constexpr std::uint64_t kSeriesStream = 0x3a7ULL;
constexpr std::uint64_t kProbeStateStream = 0x70beULL;

std::string g4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

// Plain CSV with '\n' line ends and 17-digit floats.
class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

std::string num(double x) { return format17(x); }
std::string num(std::int64_t x) { return std::to_string(x); }
std::string num(std::uint64_t x) { return std::to_string(x); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

DensityMatrix probe_state(const std::string& spec, int dim, std::uint64_t seed,
                          const std::string& ptr) {
  if (spec == "mixed") return DensityMatrix::maximally_mixed(dim);
  if (spec == "random") {
    Rng rng = make_rng(seed, kProbeStateStream);
    return DensityMatrix::pure(haar_vector(rng, dim));
  }
  const int i = std::stoi(spec.substr(5));
  if (i >= dim) throw ConfigError(ptr, "basis index out of range for dimension " + std::to_string(dim));
  CVector e = CVector::Zero(dim);
  e[i] = 1.0;
  return DensityMatrix::pure(e);
}

std::vector<std::int64_t> doubling_up_to(std::int64_t n) {
  std::vector<std::int64_t> out;
  for (std::int64_t k = 1; k <= n; k *= 2) out.push_back(k);
  if (out.back() != n) out.push_back(n);
  return out;
}

struct Context {
  const ExperimentConfig& cfg;
  fs::path out;
  int jobs;
  ExperimentReport& report;
  std::vector<std::string> files;

  void verdict(std::string name, bool pass, std::string observed, std::string tol,
               std::string invariant) {
    report.verdicts.push_back(
        {std::move(name), pass, std::move(observed), std::move(tol), std::move(invariant)});
  }
  fs::path file(const std::string& name) {
    files.push_back(name);
    return out / name;
  }
};

void run_metric_selftest(Context& ctx) {
  const auto& tol = ctx.cfg.tolerances;
  const HermitianMatrix a = HermitianMatrix::diagonal({0.7, 0.3});
  const HermitianMatrix b = HermitianMatrix::diagonal({0.5, 0.5});
  const MetricValue mv = dist(a, b);
  const double err = std::max({std::abs(mv.d - 0.4), std::abs(mv.m_ab - 0.6),
                               std::abs(mv.m_ba - 5.0 / 7.0)});
  ctx.verdict("metric_exact", err <= tol.metric, "err=" + g4(err), "(<=" + g4(tol.metric) + ")",
              "d(diag(0.7,0.3), I/2) = 0.4 with m = 0.6 and 5/7");
  ctx.report.estimates["metric_exact"] = {{"d", mv.d}, {"m_ab", mv.m_ab}, {"m_ba", mv.m_ba}};

  Rng rng = make_rng(ctx.cfg.seeds.front(), 0xa110);
  Csv csv(ctx.file("metric_selftest.csv"), {"i", "d_ab", "half_l1", "d_ac", "d_bc"});
  double worst = -1.0;
  for (int i = 0; i < 1000; ++i) {
    const DensityMatrix x = random_state(rng, 2), y = random_state(rng, 2), z = random_state(rng, 2);
    const double dxy = dist(x, y).d, dxz = dist(x, z).d, dyz = dist(y, z).d;
    const double half = 0.5 * trace_norm(x - y);
    const double viol = std::max({half - dxy, dxy - 1.0, dxz - dxy - dyz, std::abs(dxy - dist(y, x).d),
                                  dist(x, x).d});
    worst = std::max(worst, viol);
    csv.row({std::to_string(i), num(dxy), num(half), num(dxz), num(dyz)});
  }
  ctx.verdict("metric_axioms", worst <= tol.axioms, "max_violation=" + g4(worst),
              "(<=" + g4(tol.axioms) + ")",
              "1/2 ||A-B||_1 <= d <= 1, symmetry, d(A,A) = 0, triangle inequality");
}

void run_simulate(Context& ctx, const Driver& driver) {
  const auto& cfg = ctx.cfg;
  const int d = driver.dim();
  const std::int64_t h = cfg.params.horizon;
  const std::vector<std::int64_t> n_list =
      cfg.params.n_grid.empty() ? doubling_up_to(cfg.n) : cfg.params.n_grid;
  const std::int64_t n_max = std::max(cfg.n, *std::max_element(n_list.begin(), n_list.end()));
  const auto table = compiled(driver);
  double worst_gap = 0.0, worst_tele = 0.0;
  int perron_errors = 0, tau_missing = 0;
  Json per_seed = Json::array();
  for (std::uint64_t seed : cfg.seeds) {
    const StreamKey key{seed, 0};
    const ZOptions zo;
    const PathWindow path =
        driver.sample_path(key, -h, std::max({n_max, h, zo.max_depth + 2}));
    const DensityMatrix x0 = probe_state(cfg.probes.x, d, seed, "/probes/x");

    Accumulator acc(table, x0);
    std::vector<double> log_norm(static_cast<std::size_t>(cfg.n + 1), 0.0);
    CMatrix direct = CMatrix::Identity(d * d, d * d);
    for (std::int64_t k = 1; k <= cfg.n; ++k) {
      const int j = path.index_at(k);
      log_norm[static_cast<std::size_t>(k)] = acc.step(j, k) + log_norm[static_cast<std::size_t>(k - 1)];
      if (k <= 12) {
        direct = table->superop(j) * direct;
        const CVector want = direct * vec_state(x0);
        const CVector got = std::exp(acc.log_norm()) * acc.vec();
        worst_tele = std::max(worst_tele, (want - got).norm() / want.norm());
      }
    }

    const auto perron = perron_sequence(path, n_list);
    const ZEstimate z = estimate_Z(path, 1, zo);
    StoppingOptions so;
    so.horizon = h;
    so.r = cfg.params.r;
    const StoppingRecord st = stopping_times(path, so);
    if (!st.tau) ++tau_missing;

    std::vector<std::string> lam(static_cast<std::size_t>(cfg.n + 1)), dz(lam.size());
    Json pj = Json::array();
    for (const auto& e : perron) {
      if (!e.error.empty()) {
        ++perron_errors;
        pj.push_back({{"n", e.n}, {"error", e.error}});
        continue;
      }
      worst_gap = std::max(worst_gap, e.identity_gap);
      const double dl = dist(e.left, z.z).d;
      if (e.n <= cfg.n) {
        lam[static_cast<std::size_t>(e.n)] = num(e.log_lambda);
        dz[static_cast<std::size_t>(e.n)] = num(dl);
      }
      pj.push_back({{"n", e.n}, {"ln_lambda", e.log_lambda}, {"d_Ln_Z", dl},
                    {"identity_gap", e.identity_gap}, {"iterations", e.iterations}});
    }
    Csv csv(ctx.file(cfg.experiment + "-" + std::to_string(seed) + ".csv"),
            {"n", "log_norm", "ln_Lambda_n", "d_Ln_Z", "tau_markers"});
    for (std::int64_t k = 1; k <= cfg.n; ++k) {
      std::string marks;
      auto mark = [&](const std::optional<std::int64_t>& t, const char* name) {
        if (t && *t == k) marks += (marks.empty() ? "" : "|") + std::string(name);
      };
      mark(st.tau, "tau");
      mark(st.tau_prime, "tau_prime");
      mark(st.tau_r, "tau_r");
      const auto i = static_cast<std::size_t>(k);
      csv.row({num(k), num(log_norm[i]), lam[i], dz[i], marks});
    }
    auto opt = [](const std::optional<std::int64_t>& t) { return t ? Json(*t) : Json(nullptr); };
    per_seed.push_back({{"seed", seed},
                        {"tau", opt(st.tau)},
                        {"tau_prime", opt(st.tau_prime)},
                        {"tau_r", opt(st.tau_r)},
                        {"tau_r_rule", to_string(st.rule)},
                        {"tau_r_alternate", opt(st.tau_r_alternate)},
                        {"l_time_average", log_norm.back() / static_cast<double>(cfg.n)},
                        {"z_bound", z.bound},
                        {"z_residual", z.residual},
                        {"perron", pj}});
  }
  ctx.report.estimates["seeds"] = per_seed;
  const auto& tol = ctx.cfg.tolerances;
  ctx.verdict("perron_identity", perron_errors == 0 && worst_gap <= tol.perron,
              "gap=" + g4(worst_gap) + " errors=" + std::to_string(perron_errors),
              "(<=" + g4(tol.perron) + ")", "ln Lambda_n = ln <L_n, Phi^(n)(I)>");
  ctx.verdict("telescoping_exact", worst_tele <= tol.telescoping, "rel_err=" + g4(worst_tele),
              "(<=" + g4(tol.telescoping) + ")",
              "exp(log_norm) * state equals the direct product for n <= 12");
  ctx.verdict("tau_finite", tau_missing == 0, "missing=" + std::to_string(tau_missing),
              "(=0 within horizon " + std::to_string(h) + ")",
              "Phi^(n) becomes strictly positive in finite time");
}

LyapunovResult plug_in(Context& ctx, const Driver& driver, bool ensemble) {
  LyapunovOptions lo;
  lo.n = ctx.cfg.n;
  lo.n_replicas = ctx.cfg.params.l_replicas;
  lo.ensemble = ensemble;
  lo.jobs = ctx.jobs;
  lo.tau_horizon = ctx.cfg.params.horizon;
  const LyapunovResult l = lyapunov(driver, hash_key(ctx.cfg.seeds.front(), kLhatStream, 0), lo);
  Json j = {{"l_hat", l.l_hat}, {"stderr", l.std_error}, {"replicas", l.replicas},
            {"dropped", l.dropped}};
  if (l.ensemble) {
    j["ensemble"] = *l.ensemble;
    j["ensemble_stderr"] = *l.ensemble_std_error;
  }
  ctx.report.estimates["lyapunov"] = j;
  return l;
}

void run_lln(Context& ctx, const Driver& driver) {
  const auto& cfg = ctx.cfg;
  const LyapunovResult l = plug_in(ctx, driver, true);
  if (l.ensemble) {
    const double combined = std::hypot(l.std_error, *l.ensemble_std_error);
    ctx.verdict("lyapunov_agreement", l.agree,
                "time=" + g4(l.l_hat) + " ensemble=" + g4(*l.ensemble),
                "(<=3se=" + g4(3.0 * combined) + ")",
                "time-average and ensemble estimators of l agree");
  }
  LlnOptions lo;
  if (!cfg.params.n_grid.empty()) {
    lo.n_grid = cfg.params.n_grid;
  } else {
    lo.n_grid.clear();
    for (std::int64_t g : {50, 100, 200, 500, 1000, 2000}) {
      if (g < cfg.n) lo.n_grid.push_back(g);
    }
    lo.n_grid.push_back(cfg.n);
  }
  std::sort(lo.n_grid.begin(), lo.n_grid.end());
  lo.n_grid.erase(std::unique(lo.n_grid.begin(), lo.n_grid.end()), lo.n_grid.end());
  lo.n_probe_pairs = cfg.probes.pairs;
  lo.n_replicas = cfg.n_replicas;
  lo.l_hat = l.l_hat;
  lo.jobs = ctx.jobs;
  const std::int64_t n_max = lo.n_grid.back();
  std::int64_t n_quarter = lo.n_grid.front();
  for (std::int64_t g : lo.n_grid) {
    if (4 * g <= n_max) n_quarter = g;
  }
  Csv csv(ctx.file("lln.csv"), {"seed", "n", "D_n", "E_n", "sup_dev"});
  int improved = 0, negative_trend = 0;
  Json per_seed = Json::array();
  for (std::uint64_t seed : cfg.seeds) {
    const LlnCurves c = lln_curves(driver, seed, lo);
    double at_max = 0.0, at_quarter = 0.0;
    for (const auto& p : c.points) {
      csv.row({num(seed), num(p.n), num(p.d_n), num(p.e_n), num(p.sup_dev)});
      if (p.n == n_max) at_max = p.sup_dev;
      if (p.n == n_quarter) at_quarter = p.sup_dev;
    }
    if (at_max < at_quarter) ++improved;
    if (c.e_tail_trend < 0.0) ++negative_trend;
    per_seed.push_back({{"seed", seed}, {"sup_dev_n_max", at_max}, {"sup_dev_quarter", at_quarter},
                        {"e_tail_trend", c.e_tail_trend}, {"fitted_c", c.fitted_c},
                        {"z_bound", c.z_bound}});
  }
  ctx.report.estimates["lln"] = per_seed;
  const int seeds = static_cast<int>(cfg.seeds.size());
  const int need = static_cast<int>(std::ceil(0.9 * seeds));
  ctx.verdict("lln_sup_dev", improved >= need,
              "improved=" + std::to_string(improved) + "/" + std::to_string(seeds),
              "(>=" + std::to_string(need) + ")",
              "sup-deviation at n=" + std::to_string(n_max) + " below n=" + std::to_string(n_quarter));
  ctx.verdict("en_tail_trend", negative_trend == seeds,
              "negative=" + std::to_string(negative_trend) + "/" + std::to_string(seeds),
              "(all seeds)", "E_n / n decreases on the tail of the grid");
}

void run_clt(Context& ctx, const Driver& driver) {
  const auto& cfg = ctx.cfg;
  const auto& tol = cfg.tolerances;
  const CltGate gate = clt_gate(driver, cfg.params.p);
  {
    Json g = {{"verdict", to_string(gate.verdict)}, {"reason", gate.reason}, {"p", gate.p},
              {"cauchy", gate.cauchy}, {"partial_sums", gate.alpha_partial_sums}};
    write_text(ctx.file("gate.json"), g.dump(2) + "\n");
  }
  const bool applicable = gate.verdict == GateVerdict::applicable;
  ctx.verdict("clt_gate", applicable || cfg.params.override_gate,
              std::string(to_string(gate.verdict)) + (applicable ? "" : " (" + gate.reason + ")"),
              cfg.params.override_gate && !applicable ? "(overridden)" : "(applicable)",
              "summable alpha-mixing bound");
  if (!applicable && !cfg.params.override_gate) return;

  const LyapunovResult l = plug_in(ctx, driver, false);
  const int d = driver.dim();
  CltOptions co;
  co.n = cfg.n;
  co.n_replicas = cfg.n_replicas;
  co.l_hat = l.l_hat;
  co.jobs = ctx.jobs;
  std::vector<QSample> q;
  for (std::uint64_t seed : cfg.seeds) {
    co.x = probe_state(cfg.probes.x, d, seed, "/probes/x");
    co.y = probe_state(cfg.probes.y, d, seed + 1, "/probes/y");
    const auto part = clt_samples(driver, seed, co);
    q.insert(q.end(), part.begin(), part.end());
  }
  {
    Csv csv(ctx.file("q_samples.csv"), {"seed", "n", "Q"});
    for (const auto& s : q) csv.row({num(s.seed), num(s.n), num(s.q)});
  }

  std::vector<SigmaEstimate> sig;
  sig.push_back(sigma_direct(q));
  const std::int64_t length =
      cfg.params.batch_length > 0 ? cfg.params.batch_length : cfg.n * cfg.n_replicas;
  sig.push_back(sigma_batch_means(driver, hash_key(cfg.seeds.front(), kBatchStream, 0), length));
  if (driver.kind() != DriverKind::rotation) {
    MartingaleOptions mo;
    mo.k_max = cfg.params.k_max;
    mo.outer = cfg.params.outer;
    mo.mc_inner = cfg.params.mc_inner;
    mo.jobs = ctx.jobs;
    sig.push_back(sigma_martingale(driver, hash_key(cfg.seeds.front(), kSeriesStream, 0), mo));
  }
  {
    Csv csv(ctx.file("sigma.csv"), {"method", "value", "stderr", "k_max"});
    Json sj = Json::array();
    for (const auto& s : sig) {
      csv.row({to_string(s.method), num(s.value), num(s.std_error), std::to_string(s.k_max)});
      Json e = {{"method", to_string(s.method)}, {"value", s.value}, {"stderr", s.std_error}};
      if (s.method == SigmaMethod::martingale_series) {
        e["tail_flag"] = s.tail_flag;
        e["z_bound"] = s.z_bound;
        e["z_truncated"] = s.z_truncated;
        e["terms_head"] = std::vector<double>(s.terms.begin(),
                                              s.terms.begin() + std::min<std::size_t>(5, s.terms.size()));
      }
      sj.push_back(e);
    }
    ctx.report.estimates["sigma"] = sj;
  }

  const double sigma2 = tol.sigma2_ref ? *tol.sigma2_ref : sig[1].value;
  const double shift = std::sqrt(static_cast<double>(cfg.n)) * l.std_error;
  std::vector<double> qv;
  for (const auto& s : q) qv.push_back(s.q);
  if (sigma2 <= 1e-12) {
    const KsResult ks = ks_normality(qv, 0.0);
    ctx.verdict("clt_degenerate", ks.degenerate_fraction == 0.0,
                "frac=" + g4(ks.degenerate_fraction), "(=0 with |Q|<=1e-06)",
                "sigma = 0 branch: Q converges to 0");
    ctx.report.estimates["ks"] = {{"degenerate", true}, {"fraction", ks.degenerate_fraction}};
  } else {
    const KsResult ks = ks_normality(qv, std::sqrt(sigma2), shift);
    ctx.verdict("theorem2_ks", ks.p_value > tol.ks_alpha, "p=" + g4(ks.p_value),
                "(>" + g4(tol.ks_alpha) + ")", "Q ~ N(0, sigma^2) by one-sample KS");
    ctx.report.estimates["ks"] = {{"statistic", ks.statistic}, {"p_value", ks.p_value},
                                  {"sigma2", sigma2}, {"shift_tol", shift}, {"shift", ks.shift}};
  }

  bool consistent = true;
  std::string obs;
  for (std::size_t i = 0; i < sig.size(); ++i) {
    obs += (i ? " " : "") + std::string(to_string(sig[i].method)) + "=" + g4(sig[i].value);
    for (std::size_t k = i + 1; k < sig.size(); ++k) {
      const double se = std::hypot(sig[i].std_error, sig[k].std_error);
      consistent = consistent && std::abs(sig[i].value - sig[k].value) <= std::max(3.0 * se, 1e-12);
    }
  }
  ctx.verdict("sigma_consistency", consistent, obs, "(<=3 combined se)",
              "direct, batch-means and martingale-series estimates agree");
  if (tol.sigma2_ref) {
    bool close = true;
    for (const auto& s : sig) {
      close = close && std::abs(s.value - *tol.sigma2_ref) <= tol.sigma_rel * *tol.sigma2_ref;
    }
    ctx.verdict("sigma_reference", close, obs + " ref=" + g4(*tol.sigma2_ref),
                "(rel<=" + g4(tol.sigma_rel) + ")", "sigma^2 estimates match the reference");
  }
}

void run_spectral(Context& ctx, const Driver& driver) {
  const auto& cfg = ctx.cfg;
  const auto& tol = cfg.tolerances;
  double worst = 0.0;
  int checked = 0;
  {
    Csv csv(ctx.file("spectral.csv"), {"map", "lambda_power", "spectral_radius", "rel_diff"});
    for (std::size_t i = 0; i < driver.maps().size(); ++i) {
      const PositiveMap& phi = driver.maps()[i];
      if (is_irreducible(phi).verdict != Verdict::certified_yes) {
        csv.row({std::to_string(i), "", "", ""});
        continue;
      }
      const double lam = perron_right(phi).lambda;
      const double rho = superop_spectral_radius(phi);
      const double rel = std::abs(lam - rho) / rho;
      worst = std::max(worst, rel);
      ++checked;
      csv.row({std::to_string(i), num(lam), num(rho), num(rel)});
    }
  }
  ctx.verdict("perron_spectral", worst <= tol.perron,
              "rel=" + g4(worst) + " maps=" + std::to_string(checked), "(<=" + g4(tol.perron) + ")",
              "power-iteration Lambda equals the superoperator spectral radius");

  KappaOptions ko;
  if (!cfg.params.n_grid.empty()) ko.n_grid = cfg.params.n_grid;
  ko.n_replicas = cfg.n_replicas;
  ko.alpha = cfg.params.alpha;
  ko.jobs = ctx.jobs;
  Csv csv(ctx.file("kappa.csv"), {"seed", "n", "mean_log_c"});
  Json per_seed = Json::array();
  bool in_range = true, close = true;
  std::string obs;
  for (std::uint64_t seed : cfg.seeds) {
    const KappaResult k = kappa(driver, seed, ko);
    for (std::size_t i = 0; i < k.n.size(); ++i) {
      csv.row({num(seed), num(k.n[i]), num(k.mean_log_c[i])});
    }
    per_seed.push_back({{"seed", seed}, {"kappa_hat", k.kappa_hat}, {"slope", k.slope},
                        {"exhaustive", k.exhaustive}});
    in_range = in_range && k.kappa_hat >= 0.0 && k.kappa_hat <= 1.0 + 1e-9;
    obs += (obs.empty() ? "" : " ") + std::string("kappa=") + g4(k.kappa_hat);
    if (tol.kappa_ref) {
      close = close && std::abs(k.kappa_hat - *tol.kappa_ref) <= tol.kappa_rel * *tol.kappa_ref;
    }
  }
  ctx.report.estimates["kappa"] = per_seed;
  ctx.verdict("kappa_range", in_range, obs, "(in [0,1])", "contraction rate kappa lies in [0, 1]");
  if (tol.kappa_ref) {
    ctx.verdict("kappa_reference", close, obs + " ref=" + g4(*tol.kappa_ref),
                "(rel<=" + g4(tol.kappa_rel) + ")", "kappa matches the reference value");
  }
}

}  // namespace

bool ExperimentReport::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const VerdictLine& v) { return v.pass; });
}

ExperimentReport run(const ExperimentConfig& config, const fs::path& out, int jobs) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = config;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error("cannot create output directory " + out.string() + ": " + ec.message());
  Context ctx{config, out, jobs, report, {}};
  if (config.experiment == "metric-selftest") {
    run_metric_selftest(ctx);
  } else {
    const Driver driver = build_driver(config.driver, config.seeds.front());
    if (config.experiment == "simulate") {
      run_simulate(ctx, driver);
    } else if (config.experiment == "lln") {
      run_lln(ctx, driver);
    } else if (config.experiment == "clt") {
      run_clt(ctx, driver);
    } else if (config.experiment == "spectral") {
      run_spectral(ctx, driver);
    } else {
      throw ConfigError("/experiment", "unknown experiment '" + config.experiment + "'");
    }
  }
  std::sort(ctx.files.begin(), ctx.files.end());
  for (const auto& f : ctx.files) {
    report.manifest.push_back({f, sha256_file(out / f), fs::file_size(out / f)});
  }
  report.wall_clock =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_text(out / "report.json", report_to_json(report).dump(2) + "\n");
  write_text(out / "report.txt", report_render(report));
  return report;
}

std::string report_render(const ExperimentReport& report) {
  std::ostringstream os;
  os << "eqp report: " << report.config.experiment << "\n";
  for (const auto& v : report.verdicts) {
    os << v.name << ": " << (v.pass ? "PASS" : "FAIL") << " " << v.observed << " " << v.tolerance
       << "\n";
  }
  return os.str();
}

Json report_to_json(const ExperimentReport& report) {
  Json verdicts = Json::array();
  for (const auto& v : report.verdicts) {
    verdicts.push_back({{"name", v.name}, {"pass", v.pass}, {"observed", v.observed},
                        {"tolerance", v.tolerance}, {"invariant", v.invariant}});
  }
  Json manifest = Json::array();
  for (const auto& m : report.manifest) {
    manifest.push_back({{"file", m.file}, {"sha256", m.sha256}, {"bytes", m.bytes}});
  }
  return {{"config", config_to_json(report.config)},
          {"estimates", report.estimates},
          {"manifest", manifest},
          {"verdicts", verdicts},
          {"wall_clock_seconds", report.wall_clock}};
}

ExperimentReport report_from_json(const Json& j) {
  ExperimentReport r;
  try {
    r.config = config_from_json(j.at("config"));
    r.estimates = j.at("estimates");
    for (const auto& m : j.at("manifest")) {
      r.manifest.push_back({m.at("file").get<std::string>(), m.at("sha256").get<std::string>(),
                            m.at("bytes").get<std::uintmax_t>()});
    }
    for (const auto& v : j.at("verdicts")) {
      r.verdicts.push_back({v.at("name").get<std::string>(), v.at("pass").get<bool>(),
                            v.at("observed").get<std::string>(), v.at("tolerance").get<std::string>(),
                            v.at("invariant").get<std::string>()});
    }
    r.wall_clock = j.at("wall_clock_seconds").get<double>();
  } catch (const Json::exception& e) {
    throw ConfigError("/", std::string("malformed report: ") + e.what());
  }
  return r;
}

int exit_code(const ExperimentReport& report) { return report.all_pass() ? 0 : 1; }

}  // namespace eqp
