#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "eqp/drivers.hpp"
#include "eqp/matrix.hpp"
#include "eqp/metric.hpp"
#include "eqp/positive_map.hpp"

namespace eqp {

/// Per-table data for the hot loops: superoperators of every map and of its
/// adjoint, step-norm shortcuts, and lazily computed per-map contraction
/// coefficients. Safe to share between threads.
class CompiledTable {
 public:
  explicit CompiledTable(std::shared_ptr<const std::vector<PositiveMap>> maps);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(entries_.size()); }
  const PositiveMap& map(int j) const { return (*maps_)[static_cast<std::size_t>(j)]; }

  /// scale * base superoperator and its adjoint.
  const CMatrix& superop(int j) const { return entries_[idx(j)].forward; }
  const CMatrix& adjoint_superop(int j) const { return entries_[idx(j)].adjoint; }

  /// X <- phi_j . X on a vectorized state; returns ln ||phi_j(X)||_1. For
  /// trace-preserving bases the return value is exactly ln(scale).
  /// Throws DestructiveImageError carrying `k` when the image vanishes.
  double step_forward(int j, CVector& x, CVector& scratch, std::int64_t k) const;
  /// Y <- phi_j^* . Y; returns ln ||phi_j^*(Y)||_1.
  double step_adjoint(int j, CVector& y, CVector& scratch, std::int64_t k) const;

  /// c(phi_j) and c(phi_j^*); exhaustive at D = 2, sampled otherwise.
  double forward_contraction(int j) const;
  double adjoint_contraction(int j) const;
  bool contraction_exhaustive() const { return dim_ == 2; }

 private:
  struct Entry {
    CMatrix forward;
    CMatrix adjoint;
    double log_scale = 0.0;
    bool tp = false;
    double forward_norm = 0.0;  // lambda_max(phi^*(I))
    double adjoint_norm = 0.0;  // lambda_max(phi(I))
  };
  struct Lazy {
    std::once_flag once;
    double forward = 1.0;
    double adjoint = 1.0;
  };
  std::size_t idx(int j) const;
  void fill_contraction(int j) const;

  std::shared_ptr<const std::vector<PositiveMap>> maps_;
  int dim_ = 0;
  std::vector<Entry> entries_;
  std::unique_ptr<Lazy[]> lazy_;
};

/// Trace of a column-major vectorized D x D matrix (real part).
double vec_trace(const CVector& x, int dim);
CVector vec_state(const HermitianMatrix& x);
DensityMatrix state_from_vec(const CVector& x, int dim);

enum class Direction { forward, adjoint_backward };
const char* to_string(Direction d);

/// X_n = Phi^(n)(X) stored as a trace-one `state` and the log of its norm:
/// Phi^(n)(X) = exp(log_norm) * state.
struct ScaledProduct {
  DensityMatrix state = DensityMatrix::maximally_mixed(2);
  double log_norm = 0.0;
  std::int64_t steps = 0;
  Direction direction = Direction::forward;

  /// ln <Y, Phi^(n)(X)> = log_norm + ln <Y, state>; -inf when the pairing is 0.
  double log_pairing(const HermitianMatrix& y) const;
};

/// Streaming projective accumulator in either direction.
class Accumulator {
 public:
  Accumulator(std::shared_ptr<const CompiledTable> table, const DensityMatrix& x0,
              Direction dir = Direction::forward);
  /// Applies phi_j (forward) or phi_j^* (adjoint) carrying path index k.
  double step(int j, std::int64_t k);
  double log_norm() const { return log_norm_; }
  std::int64_t steps() const { return steps_; }
  const CVector& vec() const { return x_; }
  /// <Y, state> for Hermitian Y given as vec(Y).
  double pairing(const CVector& vec_y) const;
  double log_pairing(const CVector& vec_y) const;
  ScaledProduct snapshot() const;

 private:
  std::shared_ptr<const CompiledTable> table_;
  Direction dir_;
  CVector x_;
  CVector scratch_;
  double log_norm_ = 0.0;
  std::int64_t steps_ = 0;
};

/// Compiled tables are cached per map table.
std::shared_ptr<const CompiledTable> compiled(const PathWindow& path);
std::shared_ptr<const CompiledTable> compiled(const Driver& driver);

/// X_k = phi_k . X_{k-1} for k = 1..n; entry k-1 of the result is step k.
std::vector<ScaledProduct> forward_cocycle(const PathWindow& path, const DensityMatrix& x0,
                                           std::int64_t n);

struct BackwardResult {
  DensityMatrix state = DensityMatrix::maximally_mixed(2);
  double log_norm = 0.0;
  /// Estimated c(phi_k^* o ... o phi_n^*); NaN when not requested.
  double contraction_bound = 0.0;
  bool exhaustive = false;
};

/// (phi_k^* o ... o phi_n^*) . Y, applying phi_n^* first.
BackwardResult adjoint_backward(const PathWindow& path, const DensityMatrix& y, std::int64_t k,
                                std::int64_t n, bool with_bound = true);

struct ZOptions {
  double tol = 1e-8;
  std::int64_t max_depth = 1000;
  /// Also estimate Z_{k+1} and report the fixed-point residual.
  bool residual = true;
};

struct ZEstimate {
  DensityMatrix z = DensityMatrix::maximally_mixed(2);
  /// Upper bound on d(z, Z_k) when `certified`, otherwise an estimate.
  double bound = 1.0;
  std::int64_t depth_used = 0;
  bool truncated = false;
  bool certified = false;
  /// d(phi_k^* . Z_{k+1}, Z_k) with both ends estimated at the same horizon.
  double residual = 0.0;
  std::string warning;
};

/// Z_k ~ (phi_k^* o ... o phi_{k+depth}^*) . I/D with depth grown until the
/// bound is <= tol. The bound is the product of per-map c(phi_j^*) (a true
/// upper bound at D = 2); when that product stalls at 1 the composed window
/// is estimated at doubling depths. Path must cover [k, k + max_depth + 1].
ZEstimate estimate_Z(const PathWindow& path, std::int64_t k, const ZOptions& opts = {});

/// Smallest depth m with prod_{j=k}^{k+m} c(phi_j^*) <= tol, if any.
std::optional<std::int64_t> product_depth(const CompiledTable& table, const PathWindow& path,
                                          std::int64_t k, double tol, std::int64_t max_depth);

/// How tau_r reads "c(Phi^(n)) <= r".
enum class TauRule {
  /// Product of per-step coefficients: an upper bound on c of the product at
  /// D = 2, so the reported time is never early.
  submultiplicative_bound,
  /// Estimate of c on the composed window; matches the definition but the
  /// sampled estimate is lower biased.
  composed_window,
};
const char* to_string(TauRule r);

struct StoppingOptions {
  std::int64_t horizon = 64;
  std::optional<double> r;
  TauRule rule = TauRule::submultiplicative_bound;
  /// Also compute tau' (needs the path to cover [-horizon, -1]).
  bool two_sided = true;
  /// Verify strict positivity for the next `paranoid` steps after tau.
  int paranoid = 0;
  PositivityOptions positivity{};
};

struct StoppingRecord {
  std::optional<std::int64_t> tau;
  std::optional<std::int64_t> tau_prime;
  std::optional<std::int64_t> tau_r;
  std::optional<double> r;
  /// tau_r under the other rule, for comparison.
  std::optional<std::int64_t> tau_r_alternate;
  TauRule rule = TauRule::submultiplicative_bound;
  std::int64_t horizon = 0;
  /// First strict positivity, without the "stays positive thereafter" scan;
  /// valid because all shipped drivers are invertible.
  bool invertible_form = true;
  /// tau_r rests on sampled lower estimates (D > 2 or composed rule).
  bool lower_biased = false;
  /// Certificates for Phi^(tau) and Phi^(tau - 1) when available.
  std::vector<PositivityCertificate> certificates;
  std::vector<ContractionEstimate> contraction;
  std::string diagnostics;
};

/// Path must cover [1, horizon] and, for two-sided times, [-horizon, -1].
/// Psi^(n) = psi_n o ... o psi_1 with psi_j = phi_{-j}^*.
StoppingRecord stopping_times(const PathWindow& path, const StoppingOptions& opts = {});

struct PerronEntry {
  std::int64_t n = 0;
  double log_lambda = 0.0;
  DensityMatrix left = DensityMatrix::maximally_mixed(2);
  DensityMatrix right = DensityMatrix::maximally_mixed(2);
  int iterations = 0;
  double residual = 0.0;
  /// |ln Lambda_n - ln <L_n, Phi^(n)(I)>|.
  double identity_gap = 0.0;
  /// Non-empty when this entry failed (non-convergence, destructive step).
  std::string error;
};

struct PerronOptions {
  double tol = 1e-12;
  int max_iter = 100000;
};

/// Perron data of Phi^(n) for each n, by log-scaled power iteration through
/// the map actions (the product is never formed). Path must cover [1, max n].
std::vector<PerronEntry> perron_sequence(const PathWindow& path,
                                         const std::vector<std::int64_t>& n_list,
                                         const PerronOptions& opts = {});

/// Backward sweep Z_k = phi_k^* . Z_{k+1} started from I/D at path.hi.
/// Entry i holds data for k = path.lo + i: the state Z_k and the step
/// ln ||phi_k^*(Z_{k+1})||_1.
struct ZSweep {
  std::int64_t lo = 0;
  std::vector<CVector> z;
  std::vector<double> log_step;
  /// Bound on d(Z_k estimate, Z_k) from per-map coefficients.
  std::vector<double> bound;
};
ZSweep backward_sweep(const PathWindow& path, bool keep_states = false);

/// phi_hi o ... o phi_lo as a superoperator rescaled to unit max entry.
CMatrix normalized_product(const CompiledTable& table, const PathWindow& path, std::int64_t lo,
                           std::int64_t hi, bool adjoint = false);

}  // namespace eqp
