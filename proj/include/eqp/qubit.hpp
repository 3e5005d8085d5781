#pragma once

// Qubit (D = 2) fast paths: Pauli transfer matrices, Bloch-ball geometry and
// the Bloch-sphere grid used for exhaustive searches.

#include <vector>

#include <Eigen/Dense>

#include "eqp/matrix.hpp"

namespace eqp {
class PositiveMap;
}

namespace eqp::qubit {

using Vec3 = Eigen::Vector3d;
using Transfer = Eigen::Matrix4d;

/// T with phi((I + r.sigma)/2) = (t0 I + t.sigma)/2 and (t0, t) = T (1, r).
Transfer transfer_matrix(const CMatrix& superop);
Transfer transfer_matrix(const PositiveMap& phi);

/// (t0, t) of a 2x2 Hermitian matrix written as (t0 I + t.sigma)/2.
Eigen::Vector4d pauli_coefficients(const CMatrix& m);
CMatrix from_pauli(const Eigen::Vector4d& coeffs);

Vec3 direction(double theta, double azimuth);
/// Unit vector whose projector has Bloch direction (theta, azimuth).
CVector pure_vector(double theta, double azimuth);
/// Bloch direction of the pure state u u* / |u|^2.
Vec3 direction_of(const CVector& u);

/// d(A, B) for A = (I + a.sigma)/2, B = (I + b.sigma)/2, |a|, |b| <= 1,
///   d = sqrt(|a - b|^2 - |a x b|^2) / (1 - a.b),
/// which stays accurate when A and B are close. Boundary points (|a| = 1
/// within tol) follow the singular-state rules of the metric.
double bloch_distance(const Vec3& a, const Vec3& b, double tol = 1e-12);

struct Grid {
  int n_azimuth = 0;
  int n_polar = 0;
  std::vector<double> theta;
  std::vector<double> azimuth;
  std::vector<Vec3> points;  // index = i_polar * n_azimuth + i_azimuth
};

/// Polar angles include both poles; azimuths are equispaced on [0, 2 pi).
const Grid& grid(int n_azimuth, int n_polar);
/// The documented 200 x 100 grid.
const Grid& default_grid();

}  // namespace eqp::qubit
