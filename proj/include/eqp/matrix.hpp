#pragma once

#include <complex>
#include <initializer_list>
#include <span>

#include <Eigen/Dense>

#include "eqp/rng.hpp"

namespace eqp {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Smallest eigenvalue accepted as "positive semi-definite" for trace-one
/// matrices; products of ~1e4 maps accumulate rounding of this size.
inline constexpr double kPsdTolerance = 1e-10;

/// D x D complex Hermitian matrix with D >= 2.
///
/// Construction symmetrizes the input, so Hermiticity holds exactly after
/// every operation; inputs further than `tol` (relative to the largest entry)
/// from Hermitian are rejected.
class HermitianMatrix {
 public:
  explicit HermitianMatrix(const CMatrix& m, double tol = 1e-9);

  static HermitianMatrix identity(int dim);
  static HermitianMatrix zero(int dim);
  static HermitianMatrix diagonal(std::span<const double> entries);
  static HermitianMatrix diagonal(std::initializer_list<double> entries);
  /// v v* / |v|^2.
  static HermitianMatrix projector(const CVector& v);

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(int i, int j) const { return m_(i, j); }
  double trace() const { return m_.trace().real(); }

  HermitianMatrix operator+(const HermitianMatrix& other) const;
  HermitianMatrix operator-(const HermitianMatrix& other) const;
  HermitianMatrix operator*(double s) const;

 protected:
  struct Trusted {};
  HermitianMatrix(Trusted, CMatrix m) : m_(std::move(m)) {}

  CMatrix m_;
};

inline HermitianMatrix operator*(double s, const HermitianMatrix& a) { return a * s; }

/// Positive semi-definite, trace-one Hermitian matrix (a quantum state).
class DensityMatrix : public HermitianMatrix {
 public:
  /// Validates PSD (lambda_min >= -psd_tol) and |tr - 1| <= trace_tol.
  static DensityMatrix from(const HermitianMatrix& a, double psd_tol = kPsdTolerance,
                            double trace_tol = 1e-12);
  static DensityMatrix maximally_mixed(int dim);
  static DensityMatrix pure(const CVector& v);
  /// Normalizes the image of a PSD matrix under a positive map without the
  /// eigenvalue check; the caller guarantees positivity. Throws
  /// DestructiveImageError when the trace is <= tol.
  static DensityMatrix from_positive_image(const CMatrix& m, double tol = 0.0);

  bool strictly_positive(double tol = kPsdTolerance) const;

 private:
  using HermitianMatrix::HermitianMatrix;
};

struct EigenDecomposition {
  RVector values;   // ascending
  CMatrix vectors;  // orthonormal columns
};

/// A = V diag(values) V*. Throws NumericalError if the solver fails.
EigenDecomposition eigh(const HermitianMatrix& a);
RVector eigvalsh(const HermitianMatrix& a);
double min_eigenvalue(const HermitianMatrix& a);
double max_eigenvalue(const HermitianMatrix& a);

/// Hilbert-Schmidt inner product tr(A* B).
Complex hs_inner(const CMatrix& a, const CMatrix& b);
/// Real for Hermitian arguments; throws UsageError on dimension mismatch.
double hs_inner(const HermitianMatrix& a, const HermitianMatrix& b);

/// Sum of absolute eigenvalues.
double trace_norm(const HermitianMatrix& a);
/// Sum of singular values of an arbitrary square matrix.
double trace_norm(const CMatrix& a);

/// A / tr(A). Throws DestructiveImageError if tr(A) <= tol.
DensityMatrix normalize_state(const HermitianMatrix& a, double tol = 1e-14);

// Random test inputs.
CVector haar_vector(Rng& rng, int dim);
HermitianMatrix random_hermitian(Rng& rng, int dim);
/// Random PSD matrix G G* with G a dim x rank Ginibre matrix.
HermitianMatrix random_psd(Rng& rng, int dim, int rank = -1);
DensityMatrix random_state(Rng& rng, int dim, int rank = -1);
CMatrix ginibre(Rng& rng, int rows, int cols);

}  // namespace eqp
