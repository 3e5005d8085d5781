#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "eqp/matrix.hpp"
#include "eqp/positive_map.hpp"

namespace eqp {

enum class DriverKind { iid, markov, rotation, deterministic };
const char* to_string(DriverKind k);

/// Seed plus shift offset. Position k under `shifted(s)` is position k + s
/// under the original key for drivers with shift support.
struct StreamKey {
  std::uint64_t seed = 0;
  std::int64_t offset = 0;
  StreamKey shifted(std::int64_t s = 1) const { return {seed, offset + s}; }
  bool operator==(const StreamKey&) const = default;
};

struct StationaryResult {
  RVector pi;
  double residual = 0.0;  // ||pi P - pi||_1
};

/// pi P = pi by repeated squaring of P, to 1e-13. Throws DriverError when P
/// is not row stochastic or not primitive (irreducible and aperiodic).
StationaryResult stationary_dist(const RMatrix& p);

class Driver;

/// Maps phi_k for lo <= k <= hi, stored as indices into the driver's table.
struct PathWindow {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::vector<int> index;
  /// Uniform draw (iid), chain state (markov), circle point (rotation).
  std::vector<double> trace;
  std::shared_ptr<const std::vector<PositiveMap>> table;

  const PositiveMap& at(std::int64_t k) const;
  int index_at(std::int64_t k) const;
  bool covers(std::int64_t a, std::int64_t b) const { return lo <= a && b <= hi; }
};

/// Sequential access to phi_start, phi_{start+1}, ... without storing the path.
class IndexStream {
 public:
  IndexStream(const Driver& driver, StreamKey key, std::int64_t start);
  int next();
  std::int64_t position() const { return k_; }

 private:
  const Driver* driver_;
  StreamKey key_;
  std::int64_t k_;
  int state_ = 0;  // markov chain state at max(k_, 0)
  std::vector<int> negative_;
};

/// Stationary ergodic source of two-sided map sequences. All shipped kinds
/// are invertible, so paths exist for negative indices.
class Driver {
 public:
  static Driver iid(std::vector<PositiveMap> maps, std::vector<double> probs,
                    std::uint64_t seed = 0);
  /// Chain started from its stationary law; negative indices use the
  /// time-reversed chain pi(y) P(y, x) / pi(x).
  static Driver markov(std::vector<PositiveMap> maps, RMatrix transition, std::uint64_t seed = 0);
  /// x_k = x_0 + k beta mod 1 with x_0 uniform; phi_k is the map whose arc
  /// contains x_k. Arc lengths must sum to 1. beta within 1e-9 of a rational
  /// with denominator <= 1000 is rejected.
  static Driver rotation(std::vector<PositiveMap> maps, double beta, std::vector<double> arcs,
                         std::uint64_t seed = 0);
  static Driver deterministic(std::vector<PositiveMap> maps, int index = 0);

  DriverKind kind() const { return kind_; }
  int dim() const { return maps_->front().dim(); }
  const std::vector<PositiveMap>& maps() const { return *maps_; }
  std::shared_ptr<const std::vector<PositiveMap>> table() const { return maps_; }
  std::uint64_t seed() const { return seed_; }
  bool invertible() const { return true; }
  /// True for iid, rotation and deterministic drivers.
  bool shift_support() const { return kind_ != DriverKind::markov; }

  const std::vector<double>& probabilities() const { return probs_; }
  const RMatrix& transition() const { return transition_; }
  const RVector& stationary() const { return stationary_; }
  double beta() const { return beta_; }
  const std::vector<double>& arcs() const { return arcs_; }
  int fixed_index() const { return fixed_; }

  PathWindow sample_path(std::uint64_t seed, std::int64_t lo, std::int64_t hi) const;
  PathWindow sample_path(StreamKey key, std::int64_t lo, std::int64_t hi) const;
  /// Random access for kinds with shift support.
  int index_at(StreamKey key, std::int64_t k) const;

  /// Upper bound on the alpha-mixing coefficient alpha_n:
  /// 0 for iid and deterministic, 1 for rotation (not mixing), and
  /// min(1/4, (1/2) max_x ||P^n(x, .) - pi||_TV) for markov.
  double alpha_bound(int n) const;

  /// Largest window sample_path will materialize.
  static constexpr std::int64_t kMaxWindow = std::int64_t{1} << 26;

  /// Chain moves used by IndexStream and sample_path.
  int markov_start(StreamKey key) const;
  int markov_forward(StreamKey key, int state, std::int64_t k) const;
  int markov_backward(StreamKey key, int state, std::int64_t k) const;

  /// Draws the map index at k - 1 given the index `next` at k from a uniform
  /// u: the marginal for iid, the reversed kernel for markov and the fixed
  /// map for deterministic drivers. Rotation paths have no such law.
  int draw_before(int next, double u) const;

 private:
  Driver() = default;
  int pick(const std::vector<double>& cdf, double u) const;
  double rotation_point(StreamKey key, std::int64_t k) const;

  DriverKind kind_ = DriverKind::deterministic;
  std::shared_ptr<const std::vector<PositiveMap>> maps_;
  std::uint64_t seed_ = 0;
  std::vector<double> probs_;
  std::vector<double> cdf_;
  RMatrix transition_;
  RVector stationary_;
  std::vector<std::vector<double>> forward_cdf_;
  std::vector<std::vector<double>> backward_cdf_;
  std::vector<double> stationary_cdf_;
  double beta_ = 0.0;
  std::vector<double> arcs_;
  std::vector<double> arc_cdf_;
  int fixed_ = 0;
};

/// Checks whether beta is within tol of p/q for some q <= max_q, using the
/// continued-fraction convergents. Returns the offending q or 0.
long long near_rational(double beta, long long max_q = 1000, double tol = 1e-9);

}  // namespace eqp
