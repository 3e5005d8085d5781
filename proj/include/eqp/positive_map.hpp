#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eqp/matrix.hpp"

namespace eqp {

/// A positive linear map on D x D matrices, held either as a Kraus family
/// (X -> sum_i K_i X K_i*) or as a D^2 x D^2 superoperator acting on
/// column-major vectorized matrices, times a positive scalar `scale`.
///
/// Values are immutable and cheap to copy (shared state).
class PositiveMap {
 public:
  enum class Form { kraus, superop };

  /// Kraus families are completely positive by construction.
  static PositiveMap from_kraus(std::vector<CMatrix> ops, std::string label = {});
  /// The caller asserts positivity of a superoperator input.
  static PositiveMap from_superop(CMatrix superop, std::string label = {});
  static PositiveMap identity(int dim);

  /// c * this, for c > 0. Keeps the representation and records c exactly.
  PositiveMap scaled(double c) const;
  PositiveMap relabeled(std::string label) const;

  int dim() const;
  Form form() const;
  const std::string& label() const;
  double scale() const;

  /// Unscaled Kraus operators; throws UsageError for superoperator form.
  const std::vector<CMatrix>& kraus_ops() const;
  /// Unscaled superoperator.
  const CMatrix& base_superop() const;
  /// scale * base_superop().
  CMatrix superop() const;

  CMatrix apply(const CMatrix& x) const;
  HermitianMatrix apply(const HermitianMatrix& x) const;

  /// phi*(I), including the scale factor.
  const HermitianMatrix& dual_identity() const;
  /// True when the unscaled map is trace preserving (within 1e-12).
  bool base_trace_preserving() const;
  /// ln tr(image) where image = apply(X) for a state X. For trace-preserving
  /// bases this is exactly ln(scale).
  double log_trace(const CMatrix& image) const;

 private:
  struct Impl;
  explicit PositiveMap(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

/// Column-major vectorization helpers: vec(X)[i + j D] = X(i, j).
CVector vec(const CMatrix& x);
CMatrix unvec(const CVector& v, int dim);
/// Superoperator of X -> K X K*: conj(K) (x) K.
CMatrix conjugation_superop(const CMatrix& k);
/// Choi matrix sum_ij E_ij (x) phi(E_ij).
CMatrix choi_matrix(const PositiveMap& phi);

HermitianMatrix apply(const PositiveMap& phi, const HermitianMatrix& x);
PositiveMap adjoint(const PositiveMap& phi);
/// (phi o psi)(X) = phi(psi(X)). Kraus o Kraus stays Kraus while the product
/// family has at most D^2 operators; otherwise the result is a superoperator.
PositiveMap compose(const PositiveMap& phi, const PositiveMap& psi);

/// inf { ||phi(X)||_1 : X a state } = lambda_min(phi*(I)).
double v_of(const PositiveMap& phi);
/// 1 -> 1 operator norm, lambda_max(phi*(I)) for positive maps.
double op_norm(const PositiveMap& phi);

enum class Verdict { certified_yes, certified_no, inconclusive };
const char* to_string(Verdict v);

struct PositivityOptions {
  int n_samples = 2000;
  int n_refine = 50;
  double tol = 1e-9;
  std::uint64_t seed = 0x5eed5eedULL;
  /// At D = 2 scan the whole Bloch sphere on a 200 x 100 grid.
  bool qubit_grid = true;
};

/// Outcome of the randomized strict-positivity check. `min_value` estimates
/// min over unit u, v of <v, phi~(u u*) v> with phi~ = phi / ||phi||.
struct PositivityCertificate {
  Verdict verdict = Verdict::inconclusive;
  std::optional<CVector> witness_u;
  std::optional<CVector> witness_v;
  double min_value = 0.0;
  int samples_used = 0;
  std::uint64_t seed = 0;
  bool exhaustive = false;
  /// lambda_min of the normalized Choi matrix (sufficient certificate when > tol).
  std::optional<double> choi_min;
};

PositivityCertificate is_strictly_positive(const PositiveMap& phi,
                                           const PositivityOptions& opts = {});
/// Strict positivity of (id + phi~)^(D-1).
PositivityCertificate is_irreducible(const PositiveMap& phi, const PositivityOptions& opts = {});
/// Re-evaluates <v, phi~(u u*) v> for a witness pair.
double witness_value(const PositiveMap& phi, const CVector& u, const CVector& v);

struct PerronResult {
  double lambda = 0.0;
  double log_lambda = 0.0;
  DensityMatrix eigenmatrix = DensityMatrix::maximally_mixed(2);
  int iterations = 0;
  double residual = 0.0;  // ||phi(R) - Lambda R||_1 / Lambda
};

/// Power iteration of the projective action from I/D, stopped when the
/// relative residual ||phi(R) - Lambda R||_1 / Lambda drops to tol.
/// Throws NonConvergenceError after max_iter iterations.
PerronResult perron_right(const PositiveMap& phi, double tol = 1e-12, int max_iter = 100000);
PerronResult perron_left(const PositiveMap& phi, double tol = 1e-12, int max_iter = 100000);

/// Largest |eigenvalue| of the superoperator (dense oracle).
double superop_spectral_radius(const PositiveMap& phi);

}  // namespace eqp
