#include "eqp/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "eqp/errors.hpp"

namespace eqp {

namespace {

// Independent counter streams per role.
constexpr std::uint64_t kIidStream = 0x11d;
constexpr std::uint64_t kStartStream = 0x5747;
constexpr std::uint64_t kForwardStream = 0xf0d;
constexpr std::uint64_t kBackwardStream = 0xbac;
constexpr std::uint64_t kRotationStream = 0x7073;

std::vector<double> cumulative(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  std::partial_sum(w.begin(), w.end(), c.begin());
  if (!c.empty()) c.back() = 1.0;
  return c;
}

std::vector<double> row(const RMatrix& m, Eigen::Index i) {
  std::vector<double> r(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
  return r;
}

void require_maps(const std::vector<PositiveMap>& maps) {
  if (maps.empty()) throw DriverError("driver needs at least one map");
  for (const auto& m : maps) {
    if (m.dim() != maps.front().dim()) throw DriverError("driver maps must share a dimension");
  }
}

void require_weights(const std::vector<double>& w, std::size_t n, const char* what) {
  if (w.size() != n) {
    std::ostringstream os;
    os << what << ": expected " << n << " entries, got " << w.size();
    throw DriverError(os.str());
  }
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw DriverError(std::string(what) + ": entries must be non-negative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    std::ostringstream os;
    os << what << " must sum to 1 (sum = " << sum << ")";
    throw DriverError(os.str());
  }
}

bool primitive(const RMatrix& p) {
  const Eigen::Index n = p.rows();
  RMatrix support = (p.array() > 0.0).cast<double>().matrix();
  RMatrix power = support;
  // Wielandt: a primitive n-state chain has P^k > 0 by k = (n-1)^2 + 1.
  const Eigen::Index limit = (n - 1) * (n - 1) + 1;
  for (Eigen::Index k = 1; k <= limit; ++k) {
    if ((power.array() > 0.0).all()) return true;
    power = ((power * support).array() > 0.0).cast<double>().matrix();
  }
  return (power.array() > 0.0).all();
}

}  // namespace

const char* to_string(DriverKind k) {
  switch (k) {
    case DriverKind::iid:
      return "iid";
    case DriverKind::markov:
      return "markov";
    case DriverKind::rotation:
      return "rotation";
    default:
      return "deterministic";
  }
}

StationaryResult stationary_dist(const RMatrix& p) {
  if (p.rows() != p.cols() || p.rows() < 1) throw DriverError("transition matrix must be square");
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if ((p.row(i).array() < 0.0).any()) throw DriverError("transition entries must be >= 0");
    if (std::abs(p.row(i).sum() - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "transition row " << i << " sums to " << p.row(i).sum();
      throw DriverError(os.str());
    }
  }
  if (!primitive(p)) throw DriverError("transition matrix is reducible or periodic");
  const Eigen::Index n = p.rows();
  RVector pi = RVector::Constant(n, 1.0 / static_cast<double>(n));
  RMatrix q = p;
  StationaryResult out;
  for (int it = 0; it < 64; ++it) {
    pi = (pi.transpose() * q).transpose();
    pi /= pi.sum();
    out.residual = ((pi.transpose() * p).transpose() - pi).lpNorm<1>();
    if (out.residual <= 1e-13) break;
    q = q * q;
  }
  out.pi = pi;
  return out;
}

const PositiveMap& PathWindow::at(std::int64_t k) const {
  return (*table)[static_cast<std::size_t>(index_at(k))];
}

int PathWindow::index_at(std::int64_t k) const {
  if (k < lo || k > hi) {
    std::ostringstream os;
    os << "index " << k << " outside window [" << lo << ", " << hi << "]";
    throw UsageError(os.str());
  }
  return index[static_cast<std::size_t>(k - lo)];
}

Driver Driver::iid(std::vector<PositiveMap> maps, std::vector<double> probs, std::uint64_t seed) {
  require_maps(maps);
  require_weights(probs, maps.size(), "iid probabilities");
  Driver d;
  d.kind_ = DriverKind::iid;
  d.maps_ = std::make_shared<const std::vector<PositiveMap>>(std::move(maps));
  d.seed_ = seed;
  d.cdf_ = cumulative(probs);
  d.probs_ = std::move(probs);
  return d;
}

Driver Driver::markov(std::vector<PositiveMap> maps, RMatrix transition, std::uint64_t seed) {
  require_maps(maps);
  if (transition.rows() != static_cast<Eigen::Index>(maps.size())) {
    throw DriverError("transition matrix size must equal the number of maps");
  }
  const StationaryResult st = stationary_dist(transition);
  Driver d;
  d.kind_ = DriverKind::markov;
  d.maps_ = std::make_shared<const std::vector<PositiveMap>>(std::move(maps));
  d.seed_ = seed;
  d.transition_ = std::move(transition);
  d.stationary_ = st.pi;
  const Eigen::Index n = d.transition_.rows();
  std::vector<double> pi(st.pi.data(), st.pi.data() + n);
  d.stationary_cdf_ = cumulative(pi);
  for (Eigen::Index x = 0; x < n; ++x) {
    d.forward_cdf_.push_back(cumulative(row(d.transition_, x)));
    std::vector<double> back(static_cast<std::size_t>(n));
    for (Eigen::Index y = 0; y < n; ++y) {
      back[static_cast<std::size_t>(y)] = st.pi(y) * d.transition_(y, x) / st.pi(x);
    }
    const double s = std::accumulate(back.begin(), back.end(), 0.0);
    for (double& b : back) b /= s;
    d.backward_cdf_.push_back(cumulative(back));
  }
  return d;
}

long long near_rational(double beta, long long max_q, double tol) {
  double x = beta - std::floor(beta);
  // Convergents p_k / q_k of the continued fraction of x.
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(x);
    const long long ai = static_cast<long long>(a);
    const long long p2 = ai * p1 + p0;
    const long long q2 = ai * q1 + q0;
    if (q2 > max_q) break;
    if (q2 > 0 && std::abs((beta - std::floor(beta)) - static_cast<double>(p2) / q2) <= tol) {
      return q2;
    }
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double frac = x - a;
    if (frac < 1e-300) break;
    x = 1.0 / frac;
  }
  return 0;
}

Driver Driver::rotation(std::vector<PositiveMap> maps, double beta, std::vector<double> arcs,
                        std::uint64_t seed) {
  require_maps(maps);
  require_weights(arcs, maps.size(), "rotation arcs");
  if (!std::isfinite(beta)) throw DriverError("rotation beta must be finite");
  if (const long long q = near_rational(beta); q != 0) {
    std::ostringstream os;
    os << "rotation beta " << beta << " is within 1e-9 of a rational with denominator " << q;
    throw DriverError(os.str());
  }
  Driver d;
  d.kind_ = DriverKind::rotation;
  d.maps_ = std::make_shared<const std::vector<PositiveMap>>(std::move(maps));
  d.seed_ = seed;
  d.beta_ = beta - std::floor(beta);
  d.arc_cdf_ = cumulative(arcs);
  d.arcs_ = std::move(arcs);
  return d;
}

Driver Driver::deterministic(std::vector<PositiveMap> maps, int index) {
  require_maps(maps);
  if (index < 0 || index >= static_cast<int>(maps.size())) {
    throw DriverError("deterministic index out of range");
  }
  Driver d;
  d.kind_ = DriverKind::deterministic;
  d.maps_ = std::make_shared<const std::vector<PositiveMap>>(std::move(maps));
  d.fixed_ = index;
  return d;
}

int Driver::pick(const std::vector<double>& cdf, double u) const {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const auto i = static_cast<int>(it - cdf.begin());
  return std::min(i, static_cast<int>(cdf.size()) - 1);
}

double Driver::rotation_point(StreamKey key, std::int64_t k) const {
  const double x0 = counter_uniform(key.seed, kRotationStream, 0);
  // Reduce (k + offset) beta mod 1 in long double before adding x0.
  const long double step = static_cast<long double>(k + key.offset) * beta_;
  const long double x = x0 + (step - std::floor(step));
  return static_cast<double>(x - std::floor(x));
}

int Driver::index_at(StreamKey key, std::int64_t k) const {
  switch (kind_) {
    case DriverKind::iid:
      return pick(cdf_, counter_uniform(key.seed, kIidStream, k + key.offset));
    case DriverKind::rotation:
      return pick(arc_cdf_, rotation_point(key, k));
    case DriverKind::deterministic:
      return fixed_;
    default:
      throw UsageError("markov drivers have no random access; use IndexStream");
  }
}

int Driver::markov_start(StreamKey key) const {
  const std::uint64_t s = hash_key(key.seed, 0, key.offset);
  return pick(stationary_cdf_, counter_uniform(s, kStartStream, 0));
}

int Driver::markov_forward(StreamKey key, int state, std::int64_t k) const {
  const std::uint64_t s = hash_key(key.seed, 0, key.offset);
  return pick(forward_cdf_[static_cast<std::size_t>(state)], counter_uniform(s, kForwardStream, k));
}

int Driver::markov_backward(StreamKey key, int state, std::int64_t k) const {
  const std::uint64_t s = hash_key(key.seed, 0, key.offset);
  return pick(backward_cdf_[static_cast<std::size_t>(state)],
              counter_uniform(s, kBackwardStream, k));
}

int Driver::draw_before(int next, double u) const {
  switch (kind_) {
    case DriverKind::iid:
      return pick(cdf_, u);
    case DriverKind::markov:
      return pick(backward_cdf_.at(static_cast<std::size_t>(next)), u);
    case DriverKind::deterministic:
      return fixed_;
    default:
      throw UsageError("rotation drivers have no resamplable past");
  }
}

PathWindow Driver::sample_path(std::uint64_t seed, std::int64_t lo, std::int64_t hi) const {
  return sample_path(StreamKey{seed, 0}, lo, hi);
}

PathWindow Driver::sample_path(StreamKey key, std::int64_t lo, std::int64_t hi) const {
  if (lo > hi) throw UsageError("sample_path: lo must not exceed hi");
  if (hi - lo + 1 > kMaxWindow) {
    std::ostringstream os;
    os << "window of " << (hi - lo + 1) << " maps exceeds the memory budget of " << kMaxWindow
       << "; use IndexStream";
    throw ResourceError(os.str());
  }
  PathWindow w;
  w.lo = lo;
  w.hi = hi;
  w.table = maps_;
  const auto n = static_cast<std::size_t>(hi - lo + 1);
  w.index.resize(n);
  w.trace.resize(n);
  if (kind_ != DriverKind::markov) {
    for (std::int64_t k = lo; k <= hi; ++k) {
      const auto i = static_cast<std::size_t>(k - lo);
      w.index[i] = index_at(key, k);
      switch (kind_) {
        case DriverKind::iid:
          w.trace[i] = counter_uniform(key.seed, kIidStream, k + key.offset);
          break;
        case DriverKind::rotation:
          w.trace[i] = rotation_point(key, k);
          break;
        default:
          w.trace[i] = fixed_;
      }
    }
    return w;
  }
  // Walk out from X_0 in both directions.
  const int x0 = markov_start(key);
  auto store = [&](std::int64_t k, int state) {
    if (k >= lo && k <= hi) {
      const auto i = static_cast<std::size_t>(k - lo);
      w.index[i] = state;
      w.trace[i] = state;
    }
  };
  int state = x0;
  store(0, state);
  for (std::int64_t k = 0; k < hi; ++k) {
    state = markov_forward(key, state, k);
    store(k + 1, state);
  }
  state = x0;
  for (std::int64_t k = 0; k > lo; --k) {
    state = markov_backward(key, state, k);
    store(k - 1, state);
  }
  return w;
}

double Driver::alpha_bound(int n) const {
  if (n < 1) throw UsageError("alpha_bound needs n >= 1");
  switch (kind_) {
    case DriverKind::iid:
    case DriverKind::deterministic:
      return 0.0;
    case DriverKind::rotation:
      return 1.0;
    default:
      break;
  }
  // P^n - 1 pi = (P - 1 pi)^n. Powering the deviation keeps its relative
  // accuracy as it decays, where P^n - 1 pi would stall at rounding level.
  const RMatrix dev =
      transition_ - RVector::Ones(transition_.rows()) * stationary_.transpose();
  RMatrix result = RMatrix::Identity(dev.rows(), dev.cols());
  RMatrix base = dev;
  bool first = true;
  for (int e = n; e > 0; e >>= 1) {
    if (e & 1) {
      result = first ? base : RMatrix(result * base);
      first = false;
    }
    if (e > 1) base = base * base;
  }
  double tv = 0.0;
  for (Eigen::Index x = 0; x < result.rows(); ++x) {
    tv = std::max(tv, 0.5 * result.row(x).lpNorm<1>());
  }
  return std::min(0.25, 0.5 * tv);
}

IndexStream::IndexStream(const Driver& driver, StreamKey key, std::int64_t start)
    : driver_(&driver), key_(key), k_(start) {
  if (driver.kind() != DriverKind::markov) return;
  state_ = driver.markov_start(key);
  for (std::int64_t k = 0; k < start; ++k) state_ = driver.markov_forward(key, state_, k);
  if (start < 0) {
    // Negative positions belong to the reversed chain; replay them in order.
    negative_.resize(static_cast<std::size_t>(-start));
    int s = state_;
    for (std::int64_t k = 0; k > start; --k) {
      s = driver.markov_backward(key, s, k);
      negative_[static_cast<std::size_t>(k - 1 - start)] = s;
    }
  }
}

int IndexStream::next() {
  if (driver_->kind() != DriverKind::markov) return driver_->index_at(key_, k_++);
  if (k_ < 0) {
    const int out = negative_[negative_.size() - static_cast<std::size_t>(-k_)];
    ++k_;
    return out;
  }
  const int out = state_;
  state_ = driver_->markov_forward(key_, state_, k_);
  ++k_;
  return out;
}

}  // namespace eqp
