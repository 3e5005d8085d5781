#pragma once

#include <cstdint>
#include <utility>

#include "eqp/matrix.hpp"
#include "eqp/positive_map.hpp"

namespace eqp {

struct MetricValue {
  double d = 0.0;
  double m_ab = 0.0;
  double m_ba = 0.0;
  /// Exactly one argument is strictly positive, so d = 1 by the boundary rule.
  bool boundary = false;
};

/// sup { lambda : lambda B <= A }.
///
/// For strictly positive B this is lambda_min(B^-1/2 A B^-1/2). Otherwise the
/// infimum of tr[XA]/tr[XB] is taken on supp(B) through the generalized
/// Schur complement A11 - A12 A22^+ A21 of A with respect to ker(B); it is 0
/// whenever a kernel vector of A has positive B-expectation.
double m_coeff(const HermitianMatrix& a, const HermitianMatrix& b, double tol = 1e-12);

/// d(A, B) = (1 - m(A,B) m(B,A)) / (1 + m(A,B) m(B,A)), clamped to [0, 1].
MetricValue dist(const HermitianMatrix& a, const HermitianMatrix& b, double tol = 1e-12);

/// -ln(m(A,B) m(B,A)); +inf when either coefficient vanishes. d = tanh(h / 2).
double hilbert_metric(const HermitianMatrix& a, const HermitianMatrix& b, double tol = 1e-12);

struct ContractionOptions {
  int n_pairs = 2000;
  int n_refine = 50;
  /// Exhaustive Bloch-sphere search at D = 2.
  bool grid = true;
  std::uint64_t seed = 0xc0ffeeULL;
  /// Images with trace <= destructive_tol abort the estimate.
  double destructive_tol = 1e-14;
};

struct ContractionEstimate {
  double lower = 0.0;
  int pairs_sampled = 0;
  int refine_steps = 0;
  std::pair<CVector, CVector> attained_at;
  bool exhaustive = false;
};

/// Lower estimate of c(phi) = sup d(phi.A, phi.B) over pure-state pairs.
/// At D = 2 with `grid`, the search runs a 40 x 20 all-pairs scan, alternating
/// maximization over the 200 x 100 grid and 30 ascent steps, and reports
/// exhaustive = true. Throws DestructiveImageError naming a witness if some
/// sampled pure state is annihilated.
ContractionEstimate contraction_coeff(const PositiveMap& phi, const ContractionOptions& opts = {});
/// Same on a raw superoperator; c is invariant under positive rescaling, so
/// callers may pass normalized products.
ContractionEstimate contraction_coeff(const CMatrix& superop, int dim,
                                      const ContractionOptions& opts = {});

/// d(phi.uu*, phi.vv*) evaluated exactly as the estimator does.
double pair_distance(const CMatrix& superop, int dim, const CVector& u, const CVector& v);

}  // namespace eqp
