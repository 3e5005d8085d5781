#include "eqp/qubit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "eqp/errors.hpp"
#include "eqp/positive_map.hpp"

namespace eqp::qubit {

namespace {

CMatrix pauli(int k) {
  CMatrix s = CMatrix::Zero(2, 2);
  switch (k) {
    case 0:
      s(0, 0) = 1.0;
      s(1, 1) = 1.0;
      break;
    case 1:
      s(0, 1) = 1.0;
      s(1, 0) = 1.0;
      break;
    case 2:
      s(0, 1) = Complex(0.0, -1.0);
      s(1, 0) = Complex(0.0, 1.0);
      break;
    default:
      s(0, 0) = 1.0;
      s(1, 1) = -1.0;
      break;
  }
  return s;
}

}  // namespace

Eigen::Vector4d pauli_coefficients(const CMatrix& m) {
  Eigen::Vector4d c;
  c(0) = (m(0, 0) + m(1, 1)).real();
  c(1) = (m(0, 1) + m(1, 0)).real();
  c(2) = (Complex(0.0, 1.0) * (m(0, 1) - m(1, 0))).real();
  c(3) = (m(0, 0) - m(1, 1)).real();
  return c;
}

CMatrix from_pauli(const Eigen::Vector4d& c) {
  CMatrix m(2, 2);
  m(0, 0) = 0.5 * (c(0) + c(3));
  m(1, 1) = 0.5 * (c(0) - c(3));
  m(0, 1) = 0.5 * Complex(c(1), -c(2));
  m(1, 0) = 0.5 * Complex(c(1), c(2));
  return m;
}

Transfer transfer_matrix(const CMatrix& superop) {
  if (superop.rows() != 4 || superop.cols() != 4) {
    throw UsageError("transfer matrix requires a qubit superoperator");
  }
  Transfer t;
  for (int k = 0; k < 4; ++k) {
    const CMatrix in = 0.5 * pauli(k);
    const CVector out = superop * vec(in);
    t.col(k) = pauli_coefficients(unvec(out, 2));
  }
  return t;
}

Transfer transfer_matrix(const PositiveMap& phi) {
  return phi.scale() * transfer_matrix(phi.base_superop());
}

Vec3 direction(double theta, double azimuth) {
  return Vec3(std::sin(theta) * std::cos(azimuth), std::sin(theta) * std::sin(azimuth),
              std::cos(theta));
}

CVector pure_vector(double theta, double azimuth) {
  CVector u(2);
  u(0) = std::cos(0.5 * theta);
  u(1) = std::polar(std::sin(0.5 * theta), azimuth);
  return u;
}

Vec3 direction_of(const CVector& u) {
  const CMatrix p = u * u.adjoint() / u.squaredNorm();
  const Eigen::Vector4d c = pauli_coefficients(p);
  return c.tail<3>();
}

double bloch_distance(const Vec3& a, const Vec3& b, double tol) {
  const double na = a.norm();
  const double nb = b.norm();
  const bool sa = (1.0 - na) * (1.0 + na) <= tol;
  const bool sb = (1.0 - nb) * (1.0 + nb) <= tol;
  if (sa && sb) {
    return (a - b).norm() <= 1e-9 ? 0.0 : 1.0;
  }
  if (sa != sb) return 1.0;
  const double num = (a - b).squaredNorm() - a.cross(b).squaredNorm();
  const double den = 1.0 - a.dot(b);
  const double d = std::sqrt(std::max(num, 0.0)) / den;
  return std::clamp(d, 0.0, 1.0);
}

const Grid& grid(int n_azimuth, int n_polar) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, Grid> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n_azimuth, n_polar);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  if (n_azimuth < 1 || n_polar < 2) throw UsageError("grid needs n_azimuth >= 1, n_polar >= 2");
  Grid g;
  g.n_azimuth = n_azimuth;
  g.n_polar = n_polar;
  for (int j = 0; j < n_polar; ++j) {
    g.theta.push_back(std::numbers::pi * j / (n_polar - 1));
  }
  for (int i = 0; i < n_azimuth; ++i) {
    g.azimuth.push_back(2.0 * std::numbers::pi * i / n_azimuth);
  }
  g.points.reserve(static_cast<std::size_t>(n_azimuth * n_polar));
  for (int j = 0; j < n_polar; ++j) {
    for (int i = 0; i < n_azimuth; ++i) {
      g.points.push_back(direction(g.theta[j], g.azimuth[i]));
    }
  }
  return cache.emplace(key, std::move(g)).first->second;
}

const Grid& default_grid() { return grid(200, 100); }

}  // namespace eqp::qubit
