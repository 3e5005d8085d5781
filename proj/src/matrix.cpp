#include "eqp/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eqp/errors.hpp"

namespace eqp {

namespace {

void require_square(const CMatrix& m) {
  if (m.rows() != m.cols()) {
    throw UsageError("matrix must be square");
  }
  if (m.rows() < 2) {
    throw UsageError("dimension must be at least 2");
  }
}

void require_same_dim(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << "dimension mismatch: " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x"
       << b.cols();
    throw UsageError(os.str());
  }
}

CMatrix symmetrized(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

HermitianMatrix::HermitianMatrix(const CMatrix& m, double tol) {
  require_square(m);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (!(asym <= tol * scale)) {
    std::ostringstream os;
    os << "matrix is not Hermitian (max |A - A*| = " << asym << ")";
    throw UsageError(os.str());
  }
  m_ = symmetrized(m);
}

HermitianMatrix HermitianMatrix::identity(int dim) {
  if (dim < 2) throw UsageError("dimension must be at least 2");
  return HermitianMatrix(Trusted{}, CMatrix::Identity(dim, dim));
}

HermitianMatrix HermitianMatrix::zero(int dim) {
  if (dim < 2) throw UsageError("dimension must be at least 2");
  return HermitianMatrix(Trusted{}, CMatrix::Zero(dim, dim));
}

HermitianMatrix HermitianMatrix::diagonal(std::span<const double> entries) {
  const int d = static_cast<int>(entries.size());
  if (d < 2) throw UsageError("dimension must be at least 2");
  CMatrix m = CMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) m(i, i) = entries[static_cast<std::size_t>(i)];
  return HermitianMatrix(Trusted{}, std::move(m));
}

HermitianMatrix HermitianMatrix::diagonal(std::initializer_list<double> entries) {
  return diagonal(std::span<const double>(entries.begin(), entries.size()));
}

HermitianMatrix HermitianMatrix::projector(const CVector& v) {
  const double n2 = v.squaredNorm();
  if (!(n2 > 0.0)) throw UsageError("projector of the zero vector");
  if (v.size() < 2) throw UsageError("dimension must be at least 2");
  return HermitianMatrix(Trusted{}, symmetrized(v * v.adjoint() / n2));
}

HermitianMatrix HermitianMatrix::operator+(const HermitianMatrix& other) const {
  require_same_dim(m_, other.m_);
  return HermitianMatrix(Trusted{}, m_ + other.m_);
}

HermitianMatrix HermitianMatrix::operator-(const HermitianMatrix& other) const {
  require_same_dim(m_, other.m_);
  return HermitianMatrix(Trusted{}, m_ - other.m_);
}

HermitianMatrix HermitianMatrix::operator*(double s) const {
  return HermitianMatrix(Trusted{}, m_ * s);
}

DensityMatrix DensityMatrix::from(const HermitianMatrix& a, double psd_tol, double trace_tol) {
  if (std::abs(a.trace() - 1.0) > trace_tol) {
    std::ostringstream os;
    os << "state must have unit trace (tr = " << a.trace() << ")";
    throw UsageError(os.str());
  }
  const double lmin = min_eigenvalue(a);
  if (lmin < -psd_tol) {
    std::ostringstream os;
    os << "state must be positive semi-definite (lambda_min = " << lmin << ")";
    throw UsageError(os.str());
  }
  return DensityMatrix(Trusted{}, a.matrix());
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  if (dim < 2) throw UsageError("dimension must be at least 2");
  return DensityMatrix(Trusted{}, CMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::pure(const CVector& v) {
  const HermitianMatrix p = HermitianMatrix::projector(v);
  return DensityMatrix(Trusted{}, p.matrix());
}

DensityMatrix DensityMatrix::from_positive_image(const CMatrix& m, double tol) {
  const double tr = m.trace().real();
  if (!(tr > tol)) {
    std::ostringstream os;
    os << "destructive image: trace " << tr << " <= " << tol;
    throw DestructiveImageError(os.str());
  }
  return DensityMatrix(Trusted{}, symmetrized(m) / tr);
}

bool DensityMatrix::strictly_positive(double tol) const { return min_eigenvalue(*this) > tol; }

EigenDecomposition eigh(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(a.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    const double residual = (a.matrix() * solver.eigenvectors() -
                             solver.eigenvectors() * solver.eigenvalues().asDiagonal())
                                .cwiseAbs()
                                .maxCoeff();
    throw NumericalError("Hermitian eigensolver did not converge", residual);
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

RVector eigvalsh(const HermitianMatrix& a) {
  if (a.dim() == 2) {
    // Closed form keeps the hot 2x2 path allocation-light.
    const double p = a(0, 0).real();
    const double q = a(1, 1).real();
    const double mid = 0.5 * (p + q);
    const double rad = std::hypot(0.5 * (p - q), std::abs(a(0, 1)));
    RVector v(2);
    v << mid - rad, mid + rad;
    return v;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(a.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("Hermitian eigensolver did not converge", -1.0);
  }
  return solver.eigenvalues();
}

double min_eigenvalue(const HermitianMatrix& a) { return eigvalsh(a)(0); }

double max_eigenvalue(const HermitianMatrix& a) {
  const RVector v = eigvalsh(a);
  return v(v.size() - 1);
}

Complex hs_inner(const CMatrix& a, const CMatrix& b) {
  require_same_dim(a, b);
  // tr(A* B) = sum_ij conj(A_ij) B_ij
  return (a.conjugate().cwiseProduct(b)).sum();
}

double hs_inner(const HermitianMatrix& a, const HermitianMatrix& b) {
  return hs_inner(a.matrix(), b.matrix()).real();
}

double trace_norm(const HermitianMatrix& a) { return eigvalsh(a).cwiseAbs().sum(); }

double trace_norm(const CMatrix& a) {
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues().sum();
}

DensityMatrix normalize_state(const HermitianMatrix& a, double tol) {
  const double tr = a.trace();
  if (!(tr > tol)) {
    std::ostringstream os;
    os << "destructive image: trace " << tr << " <= " << tol;
    throw DestructiveImageError(os.str());
  }
  return DensityMatrix::from(a * (1.0 / tr), kPsdTolerance, 1e-12);
}

CMatrix ginibre(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix g(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im) * M_SQRT1_2;
    }
  }
  return g;
}

CVector haar_vector(Rng& rng, int dim) {
  CVector v = ginibre(rng, dim, 1).col(0);
  return v / v.norm();
}

HermitianMatrix random_hermitian(Rng& rng, int dim) {
  const CMatrix g = ginibre(rng, dim, dim);
  return HermitianMatrix(0.5 * (g + g.adjoint()));
}

HermitianMatrix random_psd(Rng& rng, int dim, int rank) {
  if (rank <= 0) rank = dim;
  const CMatrix g = ginibre(rng, dim, rank);
  return HermitianMatrix(g * g.adjoint());
}

DensityMatrix random_state(Rng& rng, int dim, int rank) {
  return normalize_state(random_psd(rng, dim, rank));
}

}  // namespace eqp
