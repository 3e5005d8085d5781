#include "eqp/metric.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "eqp/errors.hpp"
#include "eqp/qubit.hpp"

namespace eqp {

namespace {

CMatrix inv_sqrt_diag(const RVector& values) {
  return values.cwiseSqrt().cwiseInverse().asDiagonal().toDenseMatrix().cast<Complex>();
}

// Blocks of a state can be 1x1, so this works on raw matrices.
double lambda_min(const CMatrix& m) {
  const CMatrix h = 0.5 * (m + m.adjoint());
  return Eigen::SelfAdjointEigenSolver<CMatrix>(h, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

}  // namespace

double m_coeff(const HermitianMatrix& a, const HermitianMatrix& b, double tol) {
  if (a.dim() != b.dim()) throw UsageError("m_coeff: dimension mismatch");
  const EigenDecomposition eb = eigh(b);
  const int d = b.dim();
  int n_ker = 0;
  while (n_ker < d && eb.values(n_ker) <= tol) ++n_ker;
  if (n_ker == d) throw UsageError("m_coeff: B has no support");
  const int n_supp = d - n_ker;
  const CMatrix v1 = eb.vectors.rightCols(n_supp);
  const CMatrix w1 = inv_sqrt_diag(eb.values.tail(n_supp));
  if (n_ker == 0) {
    const CMatrix c = w1 * v1.adjoint() * a.matrix() * v1 * w1;
    return std::max(0.0, lambda_min(c));
  }
  const CMatrix v2 = eb.vectors.leftCols(n_ker);
  const CMatrix a11 = v1.adjoint() * a.matrix() * v1;
  const CMatrix a12 = v1.adjoint() * a.matrix() * v2;
  const CMatrix a22 = v2.adjoint() * a.matrix() * v2;
  // Pseudo-inverse of the kernel block.
  const Eigen::SelfAdjointEigenSolver<CMatrix> e22(0.5 * (a22 + a22.adjoint()));
  const double cut = tol * std::max(1.0, a.matrix().cwiseAbs().maxCoeff());
  RVector inv = RVector::Zero(n_ker);
  for (int i = 0; i < n_ker; ++i) {
    if (e22.eigenvalues()(i) > cut) inv(i) = 1.0 / e22.eigenvalues()(i);
  }
  const CMatrix a22_pinv =
      e22.eigenvectors() * inv.cast<Complex>().asDiagonal() * e22.eigenvectors().adjoint();
  const CMatrix s = a11 - a12 * a22_pinv * a12.adjoint();
  return std::max(0.0, lambda_min(w1 * s * w1));
}

MetricValue dist(const HermitianMatrix& a, const HermitianMatrix& b, double tol) {
  MetricValue out;
  out.m_ab = m_coeff(a, b, tol);
  out.m_ba = m_coeff(b, a, tol);
  const bool pa = min_eigenvalue(a) > tol;
  const bool pb = min_eigenvalue(b) > tol;
  if (pa != pb) {
    out.boundary = true;
    out.d = 1.0;
    return out;
  }
  const double mm = out.m_ab * out.m_ba;
  out.d = std::clamp((1.0 - mm) / (1.0 + mm), 0.0, 1.0);
  return out;
}

double hilbert_metric(const HermitianMatrix& a, const HermitianMatrix& b, double tol) {
  const double mm = m_coeff(a, b, tol) * m_coeff(b, a, tol);
  if (!(mm > 0.0)) return std::numeric_limits<double>::infinity();
  return -std::log(mm);
}

namespace {

[[noreturn]] void destructive(const CVector& u, double tr) {
  std::ostringstream os;
  os << "map annihilates the pure state u = (";
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    os << (i ? ", " : "") << u(i).real() << (u(i).imag() < 0 ? "-" : "+")
       << std::abs(u(i).imag()) << "i";
  }
  os << "): tr = " << tr;
  throw DestructiveImageError(os.str());
}

HermitianMatrix projective_image(const CMatrix& superop, int dim, const CVector& u, double tol) {
  const CMatrix y = unvec(superop * vec(u * u.adjoint()), dim);
  const double tr = y.trace().real();
  if (!(tr > tol)) destructive(u, tr);
  return HermitianMatrix(0.5 * (y + y.adjoint()) / tr, 1e-6);
}

double transfer_scale(const qubit::Transfer& t) { return std::max(1e-300, t.cwiseAbs().maxCoeff()); }

qubit::Vec3 qubit_image(const qubit::Transfer& t, const qubit::Vec3& n, double tol) {
  Eigen::Vector4d in;
  in << 1.0, n;
  const Eigen::Vector4d out = t * in;
  if (!(out(0) > tol * transfer_scale(t))) return qubit::Vec3::Constant(std::nan(""));
  return out.tail<3>() / out(0);
}

double qubit_pair(const qubit::Transfer& t, double th1, double az1, double th2, double az2,
                  double tol) {
  const qubit::Vec3 a = qubit_image(t, qubit::direction(th1, az1), tol);
  const qubit::Vec3 b = qubit_image(t, qubit::direction(th2, az2), tol);
  if (std::isnan(a(0)) || std::isnan(b(0))) return -1.0;
  return qubit::bloch_distance(a, b);
}

ContractionEstimate qubit_search(const CMatrix& superop, const ContractionOptions& opts) {
  const qubit::Transfer t = qubit::transfer_matrix(superop);
  const double tol = opts.destructive_tol;

  auto images = [&](const qubit::Grid& g) {
    std::vector<qubit::Vec3> out;
    out.reserve(g.points.size());
    for (std::size_t i = 0; i < g.points.size(); ++i) {
      out.push_back(qubit_image(t, g.points[i], tol));
      if (std::isnan(out.back()(0))) {
        const int ip = static_cast<int>(i) / g.n_azimuth;
        const int ia = static_cast<int>(i) % g.n_azimuth;
        Eigen::Vector4d in;
        in << 1.0, g.points[i];
        destructive(qubit::pure_vector(g.theta[ip], g.azimuth[ia]), (t * in)(0));
      }
    }
    return out;
  };

  const qubit::Grid& coarse = qubit::grid(40, 20);
  const qubit::Grid& fine = qubit::default_grid();
  const std::vector<qubit::Vec3> ci = images(coarse);
  const std::vector<qubit::Vec3> fi = images(fine);

  // Best few coarse pairs seed the finer searches.
  constexpr int kStarts = 3;
  std::array<std::pair<double, std::pair<std::size_t, std::size_t>>, kStarts> top;
  top.fill({-1.0, {0, 0}});
  for (std::size_t i = 0; i < ci.size(); ++i) {
    for (std::size_t j = i + 1; j < ci.size(); ++j) {
      const double dij = qubit::bloch_distance(ci[i], ci[j]);
      if (dij > top.back().first) {
        top.back() = {dij, {i, j}};
        std::sort(top.begin(), top.end(), [](auto& x, auto& y) { return x.first > y.first; });
      }
    }
  }
  int pairs = static_cast<int>(ci.size() * (ci.size() - 1) / 2);

  auto angles = [](const qubit::Grid& g, std::size_t idx) {
    return std::make_pair(g.theta[idx / static_cast<std::size_t>(g.n_azimuth)],
                          g.azimuth[idx % static_cast<std::size_t>(g.n_azimuth)]);
  };
  auto farthest = [](const std::vector<qubit::Vec3>& imgs, const qubit::Vec3& fixed) {
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < imgs.size(); ++k) {
      const double dk = qubit::bloch_distance(fixed, imgs[k]);
      if (dk > best) {
        best = dk;
        arg = k;
      }
    }
    return std::make_pair(best, arg);
  };

  double best = -1.0;
  std::array<double, 4> best_x{};
  int steps = 0;
  for (const auto& [score, ij] : top) {
    if (score < 0.0) continue;
    auto [th1, az1] = angles(coarse, ij.first);
    auto [th2, az2] = angles(coarse, ij.second);
    // Alternating maximization over the fine grid, one state at a time.
    qubit::Vec3 a = ci[ij.first];
    double cur = score;
    for (int round = 0; round < 5; ++round) {
      auto [vb, jb] = farthest(fi, a);
      pairs += static_cast<int>(fi.size());
      const qubit::Vec3 b = fi[jb];
      std::tie(th2, az2) = angles(fine, jb);
      auto [va, ja] = farthest(fi, b);
      pairs += static_cast<int>(fi.size());
      a = fi[ja];
      std::tie(th1, az1) = angles(fine, ja);
      const double next = std::max(vb, va);
      if (!(next > cur + 1e-15)) {
        cur = std::max(cur, next);
        break;
      }
      cur = next;
    }
    // Pattern-search ascent in the four angles.
    std::array<double, 4> x{th1, az1, th2, az2};
    double fx = qubit_pair(t, x[0], x[1], x[2], x[3], tol);
    double h = std::numbers::pi / 99.0;
    for (int it = 0; it < 30; ++it) {
      bool improved = false;
      for (int c = 0; c < 4; ++c) {
        for (double sgn : {1.0, -1.0}) {
          std::array<double, 4> y = x;
          y[static_cast<std::size_t>(c)] += sgn * h;
          const double fy = qubit_pair(t, y[0], y[1], y[2], y[3], tol);
          if (fy > fx) {
            x = y;
            fx = fy;
            improved = true;
          }
        }
      }
      ++steps;
      if (!improved) h *= 0.5;
    }
    if (fx > best) {
      best = fx;
      best_x = x;
    }
  }

  ContractionEstimate est;
  est.exhaustive = true;
  est.pairs_sampled = pairs;
  est.refine_steps = steps;
  est.attained_at = {qubit::pure_vector(best_x[0], best_x[1]),
                     qubit::pure_vector(best_x[2], best_x[3])};
  est.lower = pair_distance(superop, 2, est.attained_at.first, est.attained_at.second);
  return est;
}

ContractionEstimate sampled_search(const CMatrix& superop, int dim,
                                   const ContractionOptions& opts) {
  Rng rng = make_rng(opts.seed, 0xd15ULL);
  const double tol = opts.destructive_tol;
  auto eval = [&](const CVector& u, const CVector& v) {
    return dist(projective_image(superop, dim, u, tol), projective_image(superop, dim, v, tol)).d;
  };
  ContractionEstimate est;
  double best = -1.0;
  CVector bu, bv;
  for (int i = 0; i < std::max(1, opts.n_pairs); ++i) {
    CVector u = haar_vector(rng, dim);
    CVector v = haar_vector(rng, dim);
    const double val = eval(u, v);
    if (val > best) {
      best = val;
      bu = std::move(u);
      bv = std::move(v);
    }
  }
  est.pairs_sampled = std::max(1, opts.n_pairs);
  double h = 0.3;
  for (int it = 0; it < opts.n_refine; ++it) {
    CVector u = bu + h * ginibre(rng, dim, 1).col(0);
    CVector v = bv + h * ginibre(rng, dim, 1).col(0);
    u.normalize();
    v.normalize();
    const double val = eval(u, v);
    if (val > best) {
      best = val;
      bu = std::move(u);
      bv = std::move(v);
      h *= 1.5;
    } else {
      h *= 0.5;
    }
    ++est.refine_steps;
  }
  est.attained_at = {bu, bv};
  est.lower = best;
  return est;
}

}  // namespace

double pair_distance(const CMatrix& superop, int dim, const CVector& u, const CVector& v) {
  if (dim == 2) {
    const qubit::Transfer t = qubit::transfer_matrix(superop);
    const qubit::Vec3 a = qubit_image(t, qubit::direction_of(u), 0.0);
    const qubit::Vec3 b = qubit_image(t, qubit::direction_of(v), 0.0);
    if (std::isnan(a(0)) || std::isnan(b(0))) {
      throw DestructiveImageError("pair_distance: destructive image");
    }
    return qubit::bloch_distance(a, b);
  }
  return dist(projective_image(superop, dim, u, 0.0), projective_image(superop, dim, v, 0.0)).d;
}

ContractionEstimate contraction_coeff(const CMatrix& superop, int dim,
                                      const ContractionOptions& opts) {
  if (superop.rows() != dim * dim || superop.cols() != dim * dim) {
    throw UsageError("contraction_coeff: superoperator shape does not match dimension");
  }
  if (dim == 2 && opts.grid) return qubit_search(superop, opts);
  return sampled_search(superop, dim, opts);
}

ContractionEstimate contraction_coeff(const PositiveMap& phi, const ContractionOptions& opts) {
  return contraction_coeff(phi.base_superop(), phi.dim(), opts);
}

}  // namespace eqp
