#include "eqp/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "eqp/errors.hpp"

namespace eqp {

namespace {

constexpr double kDestructiveTol = 1e-14;

void require_cover(const PathWindow& path, std::int64_t a, std::int64_t b, const char* what) {
  if (!path.covers(a, b)) {
    std::ostringstream os;
    os << what << ": path window [" << path.lo << ", " << path.hi << "] does not cover [" << a
       << ", " << b << "]";
    throw UsageError(os.str());
  }
}

[[noreturn]] void destructive(std::int64_t k, bool adjoint) {
  std::ostringstream os;
  os << (adjoint ? "adjoint of phi_" : "phi_") << k << " annihilated the current state";
  throw DestructiveImageError(os.str(), k);
}

double safe_contraction(const CMatrix& superop, int dim) {
  try {
    return contraction_coeff(superop, dim).lower;
  } catch (const DestructiveImageError&) {
    return 1.0;
  }
}

}  // namespace

CompiledTable::CompiledTable(std::shared_ptr<const std::vector<PositiveMap>> maps)
    : maps_(std::move(maps)) {
  if (!maps_ || maps_->empty()) throw UsageError("compiled table needs at least one map");
  dim_ = maps_->front().dim();
  entries_.reserve(maps_->size());
  for (const auto& phi : *maps_) {
    if (phi.dim() != dim_) throw UsageError("all maps in a table must share the dimension");
    Entry e;
    e.forward = phi.superop();
    e.adjoint = e.forward.adjoint();
    e.log_scale = std::log(phi.scale());
    e.tp = phi.base_trace_preserving();
    e.forward_norm = op_norm(phi);
    const CMatrix image_of_identity = unvec(e.forward * vec(CMatrix::Identity(dim_, dim_)), dim_);
    e.adjoint_norm = max_eigenvalue(HermitianMatrix(image_of_identity, 1e-8));
    entries_.push_back(std::move(e));
  }
  lazy_ = std::make_unique<Lazy[]>(entries_.size());
}

std::size_t CompiledTable::idx(int j) const {
  if (j < 0 || j >= size()) throw UsageError("map index out of range");
  return static_cast<std::size_t>(j);
}

double CompiledTable::step_forward(int j, CVector& x, CVector& scratch, std::int64_t k) const {
  const Entry& e = entries_[idx(j)];
  scratch.noalias() = e.forward * x;
  const double t = vec_trace(scratch, dim_);
  if (!(t > kDestructiveTol * e.forward_norm)) destructive(k, false);
  x = scratch / t;
  return e.tp ? e.log_scale : std::log(t);
}

double CompiledTable::step_adjoint(int j, CVector& y, CVector& scratch, std::int64_t k) const {
  const Entry& e = entries_[idx(j)];
  scratch.noalias() = e.adjoint * y;
  const double t = vec_trace(scratch, dim_);
  if (!(t > kDestructiveTol * e.adjoint_norm)) destructive(k, true);
  y = scratch / t;
  return std::log(t);
}

void CompiledTable::fill_contraction(int j) const {
  Lazy& l = lazy_[idx(j)];
  std::call_once(l.once, [&] {
    const Entry& e = entries_[static_cast<std::size_t>(j)];
    l.forward = safe_contraction(e.forward, dim_);
    l.adjoint = safe_contraction(e.adjoint, dim_);
  });
}

double CompiledTable::forward_contraction(int j) const {
  fill_contraction(j);
  return lazy_[static_cast<std::size_t>(j)].forward;
}

double CompiledTable::adjoint_contraction(int j) const {
  fill_contraction(j);
  return lazy_[static_cast<std::size_t>(j)].adjoint;
}

double vec_trace(const CVector& x, int dim) {
  double t = 0.0;
  for (int i = 0; i < dim; ++i) t += x[i + static_cast<Eigen::Index>(i) * dim].real();
  return t;
}

CVector vec_state(const HermitianMatrix& x) { return vec(x.matrix()); }

DensityMatrix state_from_vec(const CVector& x, int dim) {
  return DensityMatrix::from_positive_image(unvec(x, dim));
}

const char* to_string(Direction d) {
  return d == Direction::forward ? "forward" : "adjoint-backward";
}

const char* to_string(TauRule r) {
  return r == TauRule::submultiplicative_bound ? "submultiplicative_bound" : "composed_window";
}

double ScaledProduct::log_pairing(const HermitianMatrix& y) const {
  const double p = hs_inner(y, state);
  if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
  return log_norm + std::log(p);
}

Accumulator::Accumulator(std::shared_ptr<const CompiledTable> table, const DensityMatrix& x0,
                         Direction dir)
    : table_(std::move(table)), dir_(dir), x_(vec_state(x0)), scratch_(x_.size()) {
  if (x0.dim() != table_->dim()) throw UsageError("initial state dimension mismatch");
}

double Accumulator::step(int j, std::int64_t k) {
  const double s = dir_ == Direction::forward ? table_->step_forward(j, x_, scratch_, k)
                                              : table_->step_adjoint(j, x_, scratch_, k);
  log_norm_ += s;
  ++steps_;
  return s;
}

double Accumulator::pairing(const CVector& vec_y) const { return vec_y.dot(x_).real(); }

double Accumulator::log_pairing(const CVector& vec_y) const {
  const double p = pairing(vec_y);
  if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
  return log_norm_ + std::log(p);
}

ScaledProduct Accumulator::snapshot() const {
  return {state_from_vec(x_, table_->dim()), log_norm_, steps_, dir_};
}

std::shared_ptr<const CompiledTable> compiled(const PathWindow& path) {
  static std::mutex mu;
  static std::map<const void*, std::weak_ptr<const CompiledTable>> cache;
  const void* key = path.table.get();
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find(key); it != cache.end()) {
    if (auto sp = it->second.lock()) return sp;
  }
  auto sp = std::make_shared<const CompiledTable>(path.table);
  cache[key] = sp;
  return sp;
}

std::shared_ptr<const CompiledTable> compiled(const Driver& driver) {
  PathWindow w;
  w.table = driver.table();
  return compiled(w);
}

std::vector<ScaledProduct> forward_cocycle(const PathWindow& path, const DensityMatrix& x0,
                                           std::int64_t n) {
  if (n < 0) throw UsageError("forward_cocycle: n must be non-negative");
  if (n > 0) require_cover(path, 1, n, "forward_cocycle");
  Accumulator acc(compiled(path), x0);
  std::vector<ScaledProduct> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 1; k <= n; ++k) {
    acc.step(path.index_at(k), k);
    out.push_back(acc.snapshot());
  }
  return out;
}

CMatrix normalized_product(const CompiledTable& table, const PathWindow& path, std::int64_t lo,
                           std::int64_t hi, bool adjoint) {
  require_cover(path, lo, hi, "normalized_product");
  const int d2 = table.dim() * table.dim();
  CMatrix p = CMatrix::Identity(d2, d2);
  CMatrix tmp(d2, d2);
  auto push = [&](const CMatrix& s) {
    tmp.noalias() = s * p;
    const double m = tmp.cwiseAbs().maxCoeff();
    if (!(m > 0.0)) throw DestructiveImageError("window product vanished");
    p = tmp / m;
  };
  if (adjoint) {
    for (std::int64_t k = hi; k >= lo; --k) push(table.adjoint_superop(path.index_at(k)));
  } else {
    for (std::int64_t k = lo; k <= hi; ++k) push(table.superop(path.index_at(k)));
  }
  return p;
}

BackwardResult adjoint_backward(const PathWindow& path, const DensityMatrix& y, std::int64_t k,
                                std::int64_t n, bool with_bound) {
  if (k > n) throw UsageError("adjoint_backward needs k <= n");
  require_cover(path, k, n, "adjoint_backward");
  auto table = compiled(path);
  Accumulator acc(table, y, Direction::adjoint_backward);
  for (std::int64_t j = n; j >= k; --j) acc.step(path.index_at(j), j);
  BackwardResult r;
  r.state = state_from_vec(acc.vec(), table->dim());
  r.log_norm = acc.log_norm();
  r.exhaustive = table->contraction_exhaustive();
  r.contraction_bound = with_bound
                            ? safe_contraction(normalized_product(*table, path, k, n, true),
                                               table->dim())
                            : std::numeric_limits<double>::quiet_NaN();
  return r;
}

std::optional<std::int64_t> product_depth(const CompiledTable& table, const PathWindow& path,
                                          std::int64_t k, double tol, std::int64_t max_depth) {
  double prod = 1.0;
  const std::int64_t last = std::min(k + max_depth, path.hi);
  for (std::int64_t j = k; j <= last; ++j) {
    prod *= table.adjoint_contraction(path.index_at(j));
    if (prod <= tol) return j - k;
  }
  return std::nullopt;
}

namespace {

ZEstimate z_core(const CompiledTable& table, const PathWindow& path, std::int64_t k,
                 const ZOptions& opts) {
  require_cover(path, k, k, "estimate_Z");
  const std::int64_t max_depth = std::min(opts.max_depth, path.hi - k);
  const DensityMatrix mixed = DensityMatrix::maximally_mixed(table.dim());
  ZEstimate out;
  auto run = [&](std::int64_t depth) {
    return adjoint_backward(path, mixed, k, k + depth, false).state;
  };
  if (auto m = product_depth(table, path, k, opts.tol, max_depth)) {
    double prod = 1.0;
    for (std::int64_t j = k; j <= k + *m; ++j) prod *= table.adjoint_contraction(path.index_at(j));
    out.z = run(*m);
    out.bound = prod;
    out.depth_used = *m;
    out.certified = table.contraction_exhaustive();
    return out;
  }
  double prod = 1.0;
  for (std::int64_t j = k; j <= k + max_depth; ++j) {
    prod *= table.adjoint_contraction(path.index_at(j));
  }
  // The per-map product stalls; estimate the composed window instead.
  double window = 1.0;
  bool window_exact = false;
  std::int64_t depth = std::min<std::int64_t>(8, max_depth);
  while (true) {
    try {
      const ContractionEstimate c =
          contraction_coeff(normalized_product(table, path, k, k + depth, true), table.dim());
      window = c.lower;
      window_exact = c.exhaustive;
    } catch (const DestructiveImageError&) {
      window = 1.0;
      window_exact = false;
    }
    if (window <= opts.tol || depth == max_depth) break;
    depth = std::min(depth * 2, max_depth);
  }
  out.z = run(depth);
  out.depth_used = depth;
  if (window <= opts.tol) {
    out.bound = window;
    out.certified = window_exact;
    return out;
  }
  out.truncated = true;
  out.certified = prod < 1.0 && table.contraction_exhaustive();
  out.bound = out.certified ? prod : window;
  std::ostringstream os;
  os << "depth " << depth << " exhausted with bound " << out.bound << " > tol " << opts.tol;
  out.warning = os.str();
  return out;
}

}  // namespace

ZEstimate estimate_Z(const PathWindow& path, std::int64_t k, const ZOptions& opts) {
  auto table = compiled(path);
  ZEstimate z = z_core(*table, path, k, opts);
  z.residual = std::numeric_limits<double>::quiet_NaN();
  if (opts.residual && path.covers(k + 1, k + 1)) {
    const ZEstimate next = z_core(*table, path, k + 1, opts);
    CVector y = vec_state(next.z);
    CVector scratch(y.size());
    table->step_adjoint(path.index_at(k), y, scratch, k);
    z.residual = dist(state_from_vec(y, table->dim()), z.z).d;
  }
  return z;
}

StoppingRecord stopping_times(const PathWindow& path, const StoppingOptions& opts) {
  if (opts.horizon < 1) throw UsageError("stopping_times: horizon must be positive");
  if (opts.r && !opts.two_sided) throw UsageError("tau_r needs a two-sided path");
  if (opts.r && !(*opts.r > 0.0 && *opts.r < 1.0)) throw UsageError("r must lie in (0, 1)");
  const std::int64_t h = opts.horizon;
  require_cover(path, 1, h + opts.paranoid, "stopping_times");
  if (opts.two_sided) require_cover(path, -h, -1, "stopping_times");
  auto table = compiled(path);
  const int d = table->dim();
  const int d2 = d * d;

  StoppingRecord rec;
  rec.horizon = h;
  rec.r = opts.r;
  rec.rule = opts.rule;
  rec.lower_biased = opts.r && (opts.rule == TauRule::composed_window || d > 2);

  auto positive = [&](const CMatrix& s) {
    return is_strictly_positive(PositiveMap::from_superop(s), opts.positivity);
  };
  auto push = [](CMatrix& p, const CMatrix& s) {
    CMatrix t = s * p;
    const double m = t.cwiseAbs().maxCoeff();
    if (!(m > 0.0)) throw DestructiveImageError("window product vanished");
    p = t / m;
  };

  // Forward products Phi^(n) for n up to horizon + paranoid.
  std::vector<CMatrix> phi;
  CMatrix p = CMatrix::Identity(d2, d2);
  for (std::int64_t n = 1; n <= h + opts.paranoid; ++n) {
    push(p, table->superop(path.index_at(n)));
    phi.push_back(p);
  }
  std::optional<PositivityCertificate> prev;
  for (std::int64_t n = 1; n <= h && !rec.tau; ++n) {
    PositivityCertificate c = positive(phi[static_cast<std::size_t>(n - 1)]);
    if (c.verdict != Verdict::certified_yes) {
      prev = std::move(c);
      continue;
    }
    bool holds = true;
    for (int j = 1; j <= opts.paranoid && holds; ++j) {
      holds = positive(phi[static_cast<std::size_t>(n - 1 + j)]).verdict == Verdict::certified_yes;
    }
    if (!holds) continue;
    rec.tau = n;
    rec.certificates.push_back(std::move(c));
    if (prev) rec.certificates.push_back(*prev);
  }
  if (opts.paranoid > 0) rec.invertible_form = false;

  std::vector<CMatrix> psi;
  if (opts.two_sided) {
    CMatrix q = CMatrix::Identity(d2, d2);
    std::optional<std::int64_t> sigma;
    for (std::int64_t n = 1; n <= h; ++n) {
      push(q, table->adjoint_superop(path.index_at(-n)));
      psi.push_back(q);
      if (!sigma && positive(q).verdict == Verdict::certified_yes) sigma = n;
    }
    if (rec.tau && sigma) rec.tau_prime = std::max(*rec.tau, *sigma);
  }

  if (opts.r) {
    const double r = *opts.r;
    std::optional<std::int64_t> product_time;
    double cf = 1.0, cb = 1.0;
    for (std::int64_t n = 1; n <= h && !product_time; ++n) {
      cf *= table->forward_contraction(path.index_at(n));
      cb *= table->adjoint_contraction(path.index_at(-n));
      if (cf <= r && cb <= r) product_time = n;
    }
    std::optional<std::int64_t> window_time;
    std::optional<ContractionEstimate> last_fail;
    for (std::int64_t n = 1; n <= h && !window_time; ++n) {
      ContractionEstimate ef;
      double eb = 1.0;
      try {
        ef = contraction_coeff(phi[static_cast<std::size_t>(n - 1)], d);
        eb = contraction_coeff(psi[static_cast<std::size_t>(n - 1)], d).lower;
      } catch (const DestructiveImageError&) {
        ef.lower = 1.0;
      }
      if (ef.lower <= r && eb <= r) {
        window_time = n;
        rec.contraction.push_back(ef);
        if (last_fail) rec.contraction.push_back(*last_fail);
      } else {
        last_fail = ef;
      }
    }
    if (opts.rule == TauRule::submultiplicative_bound) {
      rec.tau_r = product_time;
      rec.tau_r_alternate = window_time;
    } else {
      rec.tau_r = window_time;
      rec.tau_r_alternate = product_time;
    }
  }

  std::ostringstream diag;
  if (!rec.tau) diag << "horizon " << h << " exhausted without strict positivity of Phi^(n); ";
  if (opts.two_sided && !rec.tau_prime) diag << "tau' not reached within horizon; ";
  if (opts.r && !rec.tau_r) diag << "tau_r not reached within horizon; ";
  diag << (rec.invertible_form ? "first-positivity form (invertible driver)"
                               : "paranoid scan of following steps");
  rec.diagnostics = diag.str();
  return rec;
}

namespace {

struct PowerResult {
  CVector x;
  double log_lambda = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

PowerResult power_iterate(const CompiledTable& table, const PathWindow& path, std::int64_t n,
                          bool adjoint, const PerronOptions& opts) {
  const int d = table.dim();
  PowerResult out;
  out.x = vec_state(DensityMatrix::maximally_mixed(d));
  CVector y(out.x.size());
  CVector scratch(out.x.size());
  for (int it = 1; it <= opts.max_iter; ++it) {
    y = out.x;
    double log_lambda = 0.0;
    if (adjoint) {
      for (std::int64_t k = n; k >= 1; --k) {
        log_lambda += table.step_adjoint(path.index_at(k), y, scratch, k);
      }
    } else {
      for (std::int64_t k = 1; k <= n; ++k) {
        log_lambda += table.step_forward(path.index_at(k), y, scratch, k);
      }
    }
    out.residual = trace_norm(HermitianMatrix(unvec(y - out.x, d), 1e-6));
    out.x = y;
    out.log_lambda = log_lambda;
    out.iterations = it;
    if (out.residual <= opts.tol) return out;
  }
  std::ostringstream os;
  os << "power iteration for Phi^(" << n << ") did not converge in " << opts.max_iter
     << " iterations";
  throw NonConvergenceError(os.str(), out.residual);
}

}  // namespace

std::vector<PerronEntry> perron_sequence(const PathWindow& path,
                                         const std::vector<std::int64_t>& n_list,
                                         const PerronOptions& opts) {
  auto table = compiled(path);
  const int d = table->dim();
  std::vector<PerronEntry> out;
  for (std::int64_t n : n_list) {
    PerronEntry e;
    e.n = n;
    try {
      if (n < 1) throw UsageError("perron_sequence needs n >= 1");
      require_cover(path, 1, n, "perron_sequence");
      const PowerResult right = power_iterate(*table, path, n, false, opts);
      const PowerResult left = power_iterate(*table, path, n, true, opts);
      e.log_lambda = right.log_lambda;
      e.right = state_from_vec(right.x, d);
      e.left = state_from_vec(left.x, d);
      e.iterations = right.iterations + left.iterations;
      e.residual = std::max(right.residual, left.residual);
      Accumulator acc(table, DensityMatrix::maximally_mixed(d));
      for (std::int64_t k = 1; k <= n; ++k) acc.step(path.index_at(k), k);
      const double cross = std::log(static_cast<double>(d)) + acc.log_pairing(left.x);
      e.identity_gap = std::abs(e.log_lambda - cross);
    } catch (const Error& err) {
      e.error = err.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

ZSweep backward_sweep(const PathWindow& path, bool keep_states) {
  auto table = compiled(path);
  const int d = table->dim();
  const auto len = static_cast<std::size_t>(path.hi - path.lo + 1);
  ZSweep s;
  s.lo = path.lo;
  s.log_step.resize(len);
  s.bound.resize(len);
  if (keep_states) s.z.resize(len);
  CVector y = vec_state(DensityMatrix::maximally_mixed(d));
  CVector scratch(y.size());
  double prod = 1.0;
  for (std::int64_t k = path.hi; k >= path.lo; --k) {
    const int j = path.index_at(k);
    const auto i = static_cast<std::size_t>(k - path.lo);
    s.log_step[i] = table->step_adjoint(j, y, scratch, k);
    prod *= table->adjoint_contraction(j);
    s.bound[i] = prod;
    if (keep_states) s.z[i] = y;
  }
  return s;
}

}  // namespace eqp
