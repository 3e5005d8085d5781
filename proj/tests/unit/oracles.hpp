#pragma once

// Test-side reference computations. None of these call the library's metric,
// contraction or statistics code; they rebuild each quantity a different way.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "eqp/positive_map.hpp"

namespace oracle {

using eqp::CMatrix;
using eqp::CVector;

/// Superoperator from the action on matrix units: column i + jD is vec(phi(E_ij)).
CMatrix superop_by_basis(const std::function<CMatrix(const CMatrix&)>& phi, int dim);
CMatrix superop_by_basis(const eqp::PositiveMap& phi);

/// Largest |eigenvalue| of a dense complex matrix.
double spectral_radius(const CMatrix& m);

/// sup { t : A - t B >= 0 } for 2x2 Hermitian A, B with B > 0, from the
/// smaller root of det(A - t B) = 0.
double m_qubit(const CMatrix& a, const CMatrix& b);
/// (1 - m m') / (1 + m m') for strictly positive 2x2 A, B.
double d_qubit(const CMatrix& a, const CMatrix& b);
/// Same for any dimension by bisection on lambda_min(A - t B).
double m_bisect(const CMatrix& a, const CMatrix& b);
double d_bisect(const CMatrix& a, const CMatrix& b);

/// Max over pairs of pure states on a Fibonacci sphere of n points of
/// d(phi.uu*, phi.vv*), for a qubit superoperator with strictly positive images.
double c_qubit_grid(const CMatrix& superop, int n_points = 500);

/// 2s / (1 + s^2) with s = 1 - p.
double c_depolarizing(double p);

/// Kolmogorov distribution P(K > x) via the theta-function form
/// sqrt(2 pi)/x sum_k exp(-(2k-1)^2 pi^2 / (8 x^2)).
double kolmogorov_sf(double x);
/// Standard normal cdf by Simpson integration of the density.
double normal_cdf(double x);

/// Row-stochastic matrix power and stationary vector by linear solve.
Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& p, int n);
Eigen::VectorXd stationary(const Eigen::MatrixXd& p);
/// max_i TV(P^n(i,.), pi).
double max_tv(const Eigen::MatrixXd& p, int n);
/// Asymptotic variance of sum f(X_k) for the stationary chain, via the
/// fundamental matrix (I - P + 1 pi)^-1.
double markov_clt_variance(const Eigen::MatrixXd& p, const Eigen::VectorXd& f);

}  // namespace oracle
