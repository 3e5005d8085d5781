#include "eqp/positive_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "eqp/errors.hpp"
#include "eqp/qubit.hpp"

namespace eqp {

struct PositiveMap::Impl {
  int dim = 0;
  Form form = Form::superop;
  std::vector<CMatrix> kraus;
  CMatrix base;  // unscaled superoperator
  double scale = 1.0;
  std::string label;
  HermitianMatrix dual_identity = HermitianMatrix::identity(2);
  bool base_tp = false;

  void finish();
};

namespace {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

void require_dim(const PositiveMap& phi, Eigen::Index rows, Eigen::Index cols) {
  if (rows != phi.dim() || cols != phi.dim()) {
    std::ostringstream os;
    os << "dimension mismatch: map acts on " << phi.dim() << "x" << phi.dim() << ", got " << rows
       << "x" << cols;
    throw UsageError(os.str());
  }
}

}  // namespace

void PositiveMap::Impl::finish() {
  const int d = dim;
  const CVector id = vec(CMatrix::Identity(d, d));
  const CMatrix dual = unvec(base.adjoint() * id, d);
  const double dev = (dual - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
  base_tp = dev <= 1e-12;
  dual_identity = HermitianMatrix(dual * scale, 1e-8);
}

CVector vec(const CMatrix& x) { return Eigen::Map<const CVector>(x.data(), x.size()); }

CMatrix unvec(const CVector& v, int dim) {
  if (v.size() != static_cast<Eigen::Index>(dim) * dim) {
    throw UsageError("unvec: length is not dim^2");
  }
  return Eigen::Map<const CMatrix>(v.data(), dim, dim);
}

CMatrix conjugation_superop(const CMatrix& k) { return kron(k.conjugate(), k); }

PositiveMap PositiveMap::from_kraus(std::vector<CMatrix> ops, std::string label) {
  if (ops.empty()) throw UsageError("Kraus family must be non-empty");
  const Eigen::Index d = ops.front().rows();
  if (d < 2) throw UsageError("dimension must be at least 2");
  for (const auto& k : ops) {
    if (k.rows() != d || k.cols() != d) throw UsageError("Kraus operators must be D x D");
  }
  if (ops.size() > static_cast<std::size_t>(d * d)) {
    throw UsageError("Kraus family has more than D^2 operators");
  }
  auto impl = std::make_shared<Impl>();
  impl->dim = static_cast<int>(d);
  impl->form = Form::kraus;
  impl->base = CMatrix::Zero(d * d, d * d);
  for (const auto& k : ops) impl->base += conjugation_superop(k);
  impl->kraus = std::move(ops);
  impl->label = std::move(label);
  impl->finish();
  return PositiveMap(std::move(impl));
}

PositiveMap PositiveMap::from_superop(CMatrix superop, std::string label) {
  const Eigen::Index n = superop.rows();
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (superop.cols() != n || d * d != n || d < 2) {
    throw UsageError("superoperator must be D^2 x D^2 with D >= 2");
  }
  auto impl = std::make_shared<Impl>();
  impl->dim = static_cast<int>(d);
  impl->form = Form::superop;
  impl->base = std::move(superop);
  impl->label = std::move(label);
  impl->finish();
  return PositiveMap(std::move(impl));
}

PositiveMap PositiveMap::identity(int dim) {
  if (dim < 2) throw UsageError("dimension must be at least 2");
  return from_kraus({CMatrix::Identity(dim, dim)}, "identity");
}

PositiveMap PositiveMap::scaled(double c) const {
  if (!(c > 0.0) || !std::isfinite(c)) throw UsageError("scale must be positive and finite");
  auto impl = std::make_shared<Impl>(*impl_);
  impl->scale *= c;
  impl->dual_identity = impl_->dual_identity * c;
  return PositiveMap(std::move(impl));
}

PositiveMap PositiveMap::relabeled(std::string label) const {
  auto impl = std::make_shared<Impl>(*impl_);
  impl->label = std::move(label);
  return PositiveMap(std::move(impl));
}

int PositiveMap::dim() const { return impl_->dim; }
PositiveMap::Form PositiveMap::form() const { return impl_->form; }
const std::string& PositiveMap::label() const { return impl_->label; }
double PositiveMap::scale() const { return impl_->scale; }

const std::vector<CMatrix>& PositiveMap::kraus_ops() const {
  if (impl_->form != Form::kraus) throw UsageError("map is not in Kraus form");
  return impl_->kraus;
}

const CMatrix& PositiveMap::base_superop() const { return impl_->base; }
CMatrix PositiveMap::superop() const { return impl_->scale * impl_->base; }

CMatrix PositiveMap::apply(const CMatrix& x) const {
  require_dim(*this, x.rows(), x.cols());
  if (impl_->form == Form::kraus && impl_->kraus.size() <= static_cast<std::size_t>(impl_->dim)) {
    CMatrix out = CMatrix::Zero(impl_->dim, impl_->dim);
    for (const auto& k : impl_->kraus) out.noalias() += k * x * k.adjoint();
    return impl_->scale * out;
  }
  return impl_->scale * unvec(impl_->base * vec(x), impl_->dim);
}

HermitianMatrix PositiveMap::apply(const HermitianMatrix& x) const {
  const CMatrix y = apply(x.matrix());
  return HermitianMatrix(y, 1e-8);
}

const HermitianMatrix& PositiveMap::dual_identity() const { return impl_->dual_identity; }
bool PositiveMap::base_trace_preserving() const { return impl_->base_tp; }

double PositiveMap::log_trace(const CMatrix& image) const {
  if (impl_->base_tp) return std::log(impl_->scale);
  return std::log(image.trace().real());
}

CMatrix choi_matrix(const PositiveMap& phi) {
  const int d = phi.dim();
  CMatrix j = CMatrix::Zero(d * d, d * d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      CMatrix e = CMatrix::Zero(d, d);
      e(a, b) = 1.0;
      j.block(a * d, b * d, d, d) = phi.apply(e);
    }
  }
  return j;
}

HermitianMatrix apply(const PositiveMap& phi, const HermitianMatrix& x) { return phi.apply(x); }

PositiveMap adjoint(const PositiveMap& phi) {
  PositiveMap out = [&] {
    if (phi.form() == PositiveMap::Form::kraus) {
      std::vector<CMatrix> ops;
      for (const auto& k : phi.kraus_ops()) ops.push_back(k.adjoint());
      return PositiveMap::from_kraus(std::move(ops));
    }
    return PositiveMap::from_superop(phi.base_superop().adjoint());
  }();
  if (phi.scale() != 1.0) out = out.scaled(phi.scale());
  return out.relabeled(phi.label().empty() ? std::string{} : "adjoint(" + phi.label() + ")");
}

PositiveMap compose(const PositiveMap& phi, const PositiveMap& psi) {
  if (phi.dim() != psi.dim()) throw UsageError("compose: dimension mismatch");
  const int d = phi.dim();
  const std::string label =
      phi.label().empty() || psi.label().empty() ? std::string{}
                                                 : phi.label() + " o " + psi.label();
  PositiveMap out = [&] {
    if (phi.form() == PositiveMap::Form::kraus && psi.form() == PositiveMap::Form::kraus &&
        phi.kraus_ops().size() * psi.kraus_ops().size() <= static_cast<std::size_t>(d * d)) {
      std::vector<CMatrix> ops;
      for (const auto& a : phi.kraus_ops()) {
        for (const auto& b : psi.kraus_ops()) ops.push_back(a * b);
      }
      return PositiveMap::from_kraus(std::move(ops), label);
    }
    return PositiveMap::from_superop(phi.base_superop() * psi.base_superop(), label);
  }();
  const double s = phi.scale() * psi.scale();
  return s == 1.0 ? out : out.scaled(s);
}

double v_of(const PositiveMap& phi) { return std::max(0.0, min_eigenvalue(phi.dual_identity())); }
double op_norm(const PositiveMap& phi) { return max_eigenvalue(phi.dual_identity()); }

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::certified_yes:
      return "certified_yes";
    case Verdict::certified_no:
      return "certified_no";
    default:
      return "inconclusive";
  }
}

namespace {

// Bottom eigenpair of a Hermitian matrix given as a CMatrix.
std::pair<double, CVector> bottom(const CMatrix& m) {
  const EigenDecomposition e = eigh(HermitianMatrix(0.5 * (m + m.adjoint()), 1e-6));
  return {e.values(0), e.vectors.col(0)};
}

PositivityCertificate certify(const CMatrix& superop, int d, const PositivityOptions& opts) {
  PositivityCertificate cert;
  cert.seed = opts.seed;
  const CVector id = vec(CMatrix::Identity(d, d));
  const double norm =
      max_eigenvalue(HermitianMatrix(unvec(superop.adjoint() * id, d), 1e-6));
  if (!(norm > 0.0)) {
    // The zero map.
    CVector u = CVector::Zero(d);
    u(0) = 1.0;
    cert.verdict = Verdict::certified_no;
    cert.witness_u = u;
    cert.witness_v = u;
    return cert;
  }
  const CMatrix s = superop / norm;
  const CMatrix s_adj = s.adjoint();
  auto image = [&](const CVector& u) { return unvec(s * vec(u * u.adjoint()), d); };

  double best = std::numeric_limits<double>::infinity();
  CVector best_u;
  if (d == 2 && opts.qubit_grid) {
    const qubit::Transfer t = qubit::transfer_matrix(s);
    const qubit::Grid& g = qubit::default_grid();
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < g.points.size(); ++i) {
      Eigen::Vector4d in;
      in << 1.0, g.points[i];
      const Eigen::Vector4d out = t * in;
      const double lmin = 0.5 * (out(0) - out.tail<3>().norm());
      if (lmin < best) {
        best = lmin;
        best_idx = i;
      }
    }
    const int ip = static_cast<int>(best_idx) / g.n_azimuth;
    const int ia = static_cast<int>(best_idx) % g.n_azimuth;
    best_u = qubit::pure_vector(g.theta[ip], g.azimuth[ia]);
    cert.samples_used = static_cast<int>(g.points.size());
    cert.exhaustive = true;
  } else {
    Rng rng = make_rng(opts.seed, 0x9051ULL);
    for (int i = 0; i < std::max(1, opts.n_samples); ++i) {
      CVector u = haar_vector(rng, d);
      const double val = bottom(image(u)).first;
      if (val < best) {
        best = val;
        best_u = std::move(u);
      }
    }
    cert.samples_used = std::max(1, opts.n_samples);
  }

  // Alternating descent: for fixed u the best v is the bottom eigenvector of
  // phi(uu*), and for fixed v the best u is the bottom eigenvector of phi*(vv*).
  CVector u = best_u;
  auto [val, v] = bottom(image(u));
  for (int it = 0; it < opts.n_refine; ++it) {
    const CMatrix dual = unvec(s_adj * vec(v * v.adjoint()), d);
    CVector u_next = bottom(dual).second;
    auto [val_next, v_next] = bottom(image(u_next));
    if (!(val_next < val)) break;
    u = std::move(u_next);
    v = std::move(v_next);
    val = val_next;
  }
  cert.min_value = val;
  cert.witness_u = u;
  cert.witness_v = v;

  const CMatrix j = [&] {
    CMatrix out = CMatrix::Zero(d * d, d * d);
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        CMatrix e = CMatrix::Zero(d, d);
        e(a, b) = 1.0;
        out.block(a * d, b * d, d, d) = unvec(s * vec(e), d);
      }
    }
    return out;
  }();
  cert.choi_min = bottom(j).first;

  if (val <= opts.tol) {
    cert.verdict = Verdict::certified_no;
  } else if (val > 10.0 * opts.tol && (*cert.choi_min > opts.tol || cert.exhaustive)) {
    cert.verdict = Verdict::certified_yes;
  } else {
    cert.verdict = Verdict::inconclusive;
  }
  return cert;
}

}  // namespace

PositivityCertificate is_strictly_positive(const PositiveMap& phi, const PositivityOptions& opts) {
  return certify(phi.base_superop(), phi.dim(), opts);
}

PositivityCertificate is_irreducible(const PositiveMap& phi, const PositivityOptions& opts) {
  const int d = phi.dim();
  const double norm = op_norm(phi);
  const CMatrix one = CMatrix::Identity(d * d, d * d);
  const CMatrix step = norm > 0.0 ? CMatrix(one + phi.superop() / norm) : one;
  CMatrix power = one;
  for (int k = 0; k < d - 1; ++k) power = step * power;
  return certify(power, d, opts);
}

double witness_value(const PositiveMap& phi, const CVector& u, const CVector& v) {
  const double norm = op_norm(phi);
  if (!(norm > 0.0)) return 0.0;
  const CMatrix img = phi.apply(CMatrix(u * u.adjoint()));
  return (v.adjoint() * img * v)(0, 0).real() / norm;
}

PerronResult perron_right(const PositiveMap& phi, double tol, int max_iter) {
  const int d = phi.dim();
  const CMatrix& s = phi.base_superop();
  CMatrix x = CMatrix::Identity(d, d) / static_cast<double>(d);
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iter; ++it) {
    CMatrix y = unvec(s * vec(x), d);
    const double tr = y.trace().real();
    if (!(tr > 0.0)) {
      throw DestructiveImageError("Perron iteration hit a destructive image", it);
    }
    y /= tr;
    y = 0.5 * (y + y.adjoint());
    // Relative residual ||phi(X)/Lambda - X||_1 of the current iterate.
    residual = trace_norm(HermitianMatrix(y - x, 1e-6));
    x = std::move(y);
    if (residual <= tol) {
      PerronResult r;
      const CMatrix img = phi.apply(x);
      r.lambda = img.trace().real();
      r.log_lambda = std::log(r.lambda);
      r.eigenmatrix = DensityMatrix::from_positive_image(x);
      r.iterations = it;
      r.residual = trace_norm(HermitianMatrix(img / r.lambda - x, 1e-6));
      return r;
    }
  }
  std::ostringstream os;
  os << "Perron iteration did not converge in " << max_iter << " steps";
  throw NonConvergenceError(os.str(), residual);
}

PerronResult perron_left(const PositiveMap& phi, double tol, int max_iter) {
  return perron_right(adjoint(phi), tol, max_iter);
}

double superop_spectral_radius(const PositiveMap& phi) {
  Eigen::ComplexEigenSolver<CMatrix> solver(phi.superop(), false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("superoperator eigensolver did not converge", -1.0);
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace eqp
