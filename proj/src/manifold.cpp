#include "cgd/manifold.hpp"

#include <cmath>
#include <sstream>

namespace cgd {

namespace {

void require_hpd_spectrum(const CMat& m, const char* op) {
  const EigH ed = eig_h(m);
  const double lambda_max = ed.eigenvalues(ed.eigenvalues.size() - 1);
  const double lambda_min = ed.eigenvalues(0);
  if (lambda_max <= 0.0 || lambda_min <= kEigFloorRel * lambda_max) {
    std::ostringstream msg;
    msg << op << ": matrix is not positive definite (lambda_min = " << lambda_min
        << ", lambda_max = " << lambda_max << ")";
    throw DomainError(msg.str());
  }
}

void require_same_shape(const CGPoint& a, const CGPoint& b, const char* op) {
  if (a.p() != b.p() || a.n() != b.n()) {
    std::ostringstream msg;
    msg << op << ": points have different shapes (p,n) = (" << a.p() << "," << a.n()
        << ") vs (" << b.p() << "," << b.n() << ")";
    throw DimensionError(msg.str());
  }
}

bool same_point(const CGPoint& a, const CGPoint& b) {
  if (a.p() != b.p() || a.n() != b.n()) return false;
  const double sigma_scale = std::max(1.0, a.sigma.matrix().norm());
  const double tau_scale = std::max(1.0, a.tau.values().norm());
  return (a.sigma.matrix() - b.sigma.matrix()).norm() <= kHermTol * sigma_scale &&
         (a.tau.values() - b.tau.values()).norm() <= kHermTol * tau_scale;
}

void require_tangent_at(const CGPoint& theta, const CGTangent& xi, const char* op) {
  if (xi.sigma_part().rows() != theta.p() || xi.tau_part().size() != theta.n()) {
    std::ostringstream msg;
    msg << op << ": tangent shape does not match the point";
    throw DimensionError(msg.str());
  }
  if (!same_point(theta, xi.base())) {
    throw DimensionError(std::string(op) + ": tangent vector is based at a different point");
  }
}

double trace_sigma_inv(const CMat& sigma, const CMat& x) {
  Eigen::LLT<CMat> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw DomainError("trace_sigma_inv: base matrix is not positive definite");
  }
  return llt.solve(x).trace().real();
}

}  // namespace

UnitDetHpd::UnitDetHpd(CMat m) : m_(std::move(m)) {
  if (!is_hermitian(m_)) {
    throw DomainError("UnitDetHpd: matrix is not Hermitian");
  }
  require_hpd_spectrum(m_, "UnitDetHpd");
  const double ld = logdet(m_);
  if (std::abs(ld) > kUnitDetTol) {
    std::ostringstream msg;
    msg << "UnitDetHpd: determinant is not 1 (log det = " << ld << ")";
    throw DomainError(msg.str());
  }
}

UnitDetHpd UnitDetHpd::normalized(const CMat& hpd) {
  if (!is_hermitian(hpd)) {
    throw DomainError("UnitDetHpd::normalized: matrix is not Hermitian");
  }
  require_hpd_spectrum(hpd, "UnitDetHpd::normalized");
  return UnitDetHpd(det_normalize(hpd), Trusted{});
}

UnitDetHpd UnitDetHpd::identity(Index p) {
  if (p < 1) throw DimensionError("UnitDetHpd::identity: p must be >= 1");
  return UnitDetHpd(CMat::Identity(p, p), Trusted{});
}

TextureVector::TextureVector(RVec v) : v_(std::move(v)) {
  if (v_.size() < 1) throw DimensionError("TextureVector: length must be >= 1");
  if (!(v_.array() > 0.0).all()) {
    throw DomainError("TextureVector: all entries must be strictly positive");
  }
}

TextureVector TextureVector::ones(Index n) { return TextureVector(RVec::Ones(n)); }

CGTangent::CGTangent(CGPoint base, CMat xi_sigma, RVec xi_tau)
    : base_(std::move(base)), xi_sigma_(std::move(xi_sigma)), xi_tau_(std::move(xi_tau)) {
  if (xi_sigma_.rows() != base_.p() || xi_sigma_.cols() != base_.p() ||
      xi_tau_.size() != base_.n()) {
    throw DimensionError("CGTangent: component shapes do not match the base point");
  }
  if (!is_hermitian(xi_sigma_)) {
    throw DomainError("CGTangent: xi_sigma is not Hermitian");
  }
  const double trace = trace_sigma_inv(base_.sigma.matrix(), xi_sigma_);
  const double scale = xi_sigma_.norm();
  if (std::abs(trace) > kTracelessTol * std::max(1e-30, scale)) {
    std::ostringstream msg;
    msg << "CGTangent: tr(Sigma^{-1} xi_sigma) = " << trace << " is not 0 relative to ||xi_sigma|| = " << scale;
    throw DomainError(msg.str());
  }
}

CGTangent CGTangent::zero(const CGPoint& base) {
  const Index p = base.p();
  const Index n = base.n();
  return CGTangent(base, CMat::Zero(p, p), RVec::Zero(n), Trusted{});
}

CGTangent CGTangent::scaled(double s) const {
  return CGTangent(base_, s * xi_sigma_, s * xi_tau_, Trusted{});
}

double metric(const CGPoint& theta, const CGTangent& xi, const CGTangent& eta) {
  require_tangent_at(theta, xi, "metric");
  require_tangent_at(theta, eta, "metric");
  Eigen::LLT<CMat> llt(theta.sigma.matrix());
  if (llt.info() != Eigen::Success) {
    throw DomainError("metric: base matrix is not positive definite");
  }
  const CMat a = llt.solve(xi.sigma_part());
  const CMat b = llt.solve(eta.sigma_part());
  const double sigma_term = (a * b).trace().real() / static_cast<double>(theta.p());
  const RVec& tau = theta.tau.values();
  const double tau_term =
      (xi.tau_part().array() * eta.tau_part().array() / tau.array().square()).sum() /
      static_cast<double>(theta.n());
  return sigma_term + tau_term;
}

CGTangent project_tangent(const CGPoint& theta, const CMat& a_sigma, const RVec& a_tau) {
  if (a_sigma.rows() != theta.p() || a_sigma.cols() != theta.p() ||
      a_tau.size() != theta.n()) {
    throw DimensionError("project_tangent: ambient shapes do not match the point");
  }
  const CMat h = herm_part(a_sigma);
  const double trace = trace_sigma_inv(theta.sigma.matrix(), h);
  CMat xi_sigma = h - (trace / static_cast<double>(theta.p())) * theta.sigma.matrix();
  return CGTangent(theta, std::move(xi_sigma), a_tau, CGTangent::Trusted{});
}

CGPoint exp_map(const CGPoint& theta, const CGTangent& xi) {
  require_tangent_at(theta, xi, "exp_map");
  const CMat& sigma = theta.sigma.matrix();
  const CMat sqrt_sigma = mat_sqrt(sigma);
  const CMat inv_sqrt_sigma = mat_inv_sqrt(sigma);
  const CMat inner = herm_part(inv_sqrt_sigma * xi.sigma_part() * inv_sqrt_sigma);
  CMat sigma_next = herm_part(sqrt_sigma * mat_exp(inner) * sqrt_sigma);
  // tr(Sigma^{-1} xi_sigma) = 0 keeps the determinant at 1 analytically;
  // normalization only repairs round-off.
  UnitDetHpd sigma_out = UnitDetHpd::normalized(sigma_next);

  const RVec& tau = theta.tau.values();
  RVec tau_next = tau.array() * (xi.tau_part().array() / tau.array()).exp();
  return CGPoint(std::move(sigma_out), TextureVector(std::move(tau_next)));
}

CGTangent log_map(const CGPoint& theta0, const CGPoint& theta1) {
  require_same_shape(theta0, theta1, "log_map");
  const CMat sqrt0 = mat_sqrt(theta0.sigma.matrix());
  const CMat inv_sqrt0 = mat_inv_sqrt(theta0.sigma.matrix());
  const CMat middle = herm_part(inv_sqrt0 * theta1.sigma.matrix() * inv_sqrt0);
  CMat xi_sigma = herm_part(sqrt0 * mat_log(middle) * sqrt0);

  const RVec& tau0 = theta0.tau.values();
  const RVec& tau1 = theta1.tau.values();
  RVec xi_tau = tau0.array() * (tau1.array() / tau0.array()).log();
  return CGTangent(theta0, std::move(xi_sigma), std::move(xi_tau), CGTangent::Trusted{});
}

CGPoint geodesic(const CGPoint& theta0, const CGPoint& theta1, double t) {
  require_same_shape(theta0, theta1, "geodesic");
  const CMat sqrt0 = mat_sqrt(theta0.sigma.matrix());
  const CMat inv_sqrt0 = mat_inv_sqrt(theta0.sigma.matrix());
  const CMat middle = herm_part(inv_sqrt0 * theta1.sigma.matrix() * inv_sqrt0);
  CMat sigma_t = herm_part(sqrt0 * mat_pow(middle, t) * sqrt0);
  UnitDetHpd sigma_out = UnitDetHpd::normalized(sigma_t);

  const auto& tau0 = theta0.tau.values().array();
  const auto& tau1 = theta1.tau.values().array();
  RVec tau_t = tau0.pow(1.0 - t) * tau1.pow(t);
  return CGPoint(std::move(sigma_out), TextureVector(std::move(tau_t)));
}

double spd_distance_squared(const CMat& s0, const CMat& s1) {
  if (s0.rows() != s1.rows() || s0.cols() != s1.cols()) {
    throw DimensionError("spd_distance_squared: matrices have different shapes");
  }
  if (!is_hermitian(s0) || !is_hermitian(s1)) {
    throw DomainError("spd_distance_squared: inputs must be Hermitian");
  }
  // Eigenvalues of S0^{-1/2} S1 S0^{-1/2} equal the generalized eigenvalues
  // of (S1, S0); this avoids forming matrix square roots.
  Eigen::GeneralizedSelfAdjointEigenSolver<CMat> solver(
      s1, s0, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("spd_distance_squared: generalized eigensolver failed");
  }
  const RVec lambdas = solver.eigenvalues();
  if (!(lambdas.array() > 0.0).all()) {
    throw DomainError("spd_distance_squared: inputs must be positive definite");
  }
  return lambdas.array().log().square().sum();
}

double texture_distance_squared(const RVec& t0, const RVec& t1) {
  if (t0.size() != t1.size()) {
    throw DimensionError("texture_distance_squared: vectors have different lengths");
  }
  return (t1.array() / t0.array()).log().square().sum();
}

double distance_squared(const CGPoint& theta0, const CGPoint& theta1) {
  require_same_shape(theta0, theta1, "distance_squared");
  return spd_distance_squared(theta0.sigma.matrix(), theta1.sigma.matrix()) /
             static_cast<double>(theta0.p()) +
         texture_distance_squared(theta0.tau.values(), theta1.tau.values()) /
             static_cast<double>(theta0.n());
}

double distance(const CGPoint& theta0, const CGPoint& theta1) {
  return std::sqrt(distance_squared(theta0, theta1));
}

HpdPoint::HpdPoint(CMat sigma_in, RVec tau_in)
    : sigma(std::move(sigma_in)), tau(std::move(tau_in)) {
  if (sigma.rows() != sigma.cols()) {
    throw DimensionError("HpdPoint: sigma must be square");
  }
  if (!is_hermitian(sigma)) throw DomainError("HpdPoint: sigma is not Hermitian");
  if (!(tau.array() > 0.0).all()) {
    throw DomainError("HpdPoint: all textures must be strictly positive");
  }
}

double distance_squared(const CGPoint& theta, const HpdPoint& other) {
  if (theta.p() != other.sigma.rows() || theta.n() != other.tau.size()) {
    throw DimensionError("distance_squared: shapes do not match");
  }
  return spd_distance_squared(theta.sigma.matrix(), other.sigma) /
             static_cast<double>(theta.p()) +
         texture_distance_squared(theta.tau.values(), other.tau) /
             static_cast<double>(theta.n());
}

}  // namespace cgd
