// The parameter manifold of the compound Gaussian model: unit-determinant
// Hermitian positive definite scatter matrices paired with positive texture
// vectors, carrying the Fisher information metric with its exact geodesics,
// exponential/logarithm maps and distance.

#pragma once

#include "cgd/core.hpp"
#include "cgd/hermitian.hpp"

namespace cgd {

/// Hermitian positive definite matrix with determinant 1.
class UnitDetHpd {
 public:
  /// Validates Hermitian symmetry, positive definiteness and
  /// |log det| <= kUnitDetTol; throws DomainError otherwise.
  explicit UnitDetHpd(CMat m);

  /// Rescales an HPD matrix to determinant 1, then wraps it.
  static UnitDetHpd normalized(const CMat& hpd);

  static UnitDetHpd identity(Index p);

  const CMat& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }

 private:
  struct Trusted {};
  UnitDetHpd(CMat m, Trusted) : m_(std::move(m)) {}
  CMat m_;
};

/// Strictly positive per-sample power factors.
class TextureVector {
 public:
  explicit TextureVector(RVec v);
  static TextureVector ones(Index n);

  const RVec& values() const { return v_; }
  Index size() const { return v_.size(); }

 private:
  RVec v_;
};

/// A point theta = (Sigma, tau) of the product manifold.
struct CGPoint {
  CGPoint(UnitDetHpd sigma_in, TextureVector tau_in)
      : sigma(std::move(sigma_in)), tau(std::move(tau_in)) {}

  static CGPoint identity(Index p, Index n) {
    return CGPoint(UnitDetHpd::identity(p), TextureVector::ones(n));
  }

  UnitDetHpd sigma;
  TextureVector tau;

  Index p() const { return sigma.dim(); }
  Index n() const { return tau.size(); }
};

/// Tangent vector (xi_sigma, xi_tau) at a base point. xi_sigma is Hermitian
/// with tr(Sigma^{-1} xi_sigma) = 0; xi_tau lives in the ambient R^n
/// coordinates.
class CGTangent {
 public:
  /// Validates the Hermitian and trace conditions against `base`.
  CGTangent(CGPoint base, CMat xi_sigma, RVec xi_tau);

  static CGTangent zero(const CGPoint& base);

  const CMat& sigma_part() const { return xi_sigma_; }
  const RVec& tau_part() const { return xi_tau_; }
  const CGPoint& base() const { return base_; }

  CGTangent scaled(double s) const;

 private:
  struct Trusted {};
  CGTangent(CGPoint base, CMat xi_sigma, RVec xi_tau, Trusted)
      : base_(std::move(base)), xi_sigma_(std::move(xi_sigma)), xi_tau_(std::move(xi_tau)) {}

  CGPoint base_;
  CMat xi_sigma_;
  RVec xi_tau_;

  friend CGTangent project_tangent(const CGPoint&, const CMat&, const RVec&);
  friend CGTangent log_map(const CGPoint&, const CGPoint&);
};

/// Fisher information inner product at theta:
///   (1/p) tr(Sigma^{-1} xi_S Sigma^{-1} eta_S) + (1/n) sum_i xi_t,i eta_t,i / tau_i^2.
double metric(const CGPoint& theta, const CGTangent& xi, const CGTangent& eta);

/// Orthogonal projection of an ambient pair onto the tangent space at theta:
///   xi_S = herm(a_S) - (1/p) tr(Sigma^{-1} herm(a_S)) Sigma,  xi_t = a_t.
CGTangent project_tangent(const CGPoint& theta, const CMat& a_sigma, const RVec& a_tau);

/// Geodesic endpoint exp_theta(xi):
///   Sigma' = Sigma^{1/2} exp(Sigma^{-1/2} xi_S Sigma^{-1/2}) Sigma^{1/2},
///   tau'_i = tau_i exp(xi_t,i / tau_i).
CGPoint exp_map(const CGPoint& theta, const CGTangent& xi);

/// Inverse of exp_map:
///   xi_S = Sigma0^{1/2} log(Sigma0^{-1/2} Sigma1 Sigma0^{-1/2}) Sigma0^{1/2},
///   xi_t,i = tau0_i log(tau1_i / tau0_i).
CGTangent log_map(const CGPoint& theta0, const CGPoint& theta1);

/// Point at parameter t on the geodesic through theta0 (t=0) and theta1 (t=1);
/// extrapolation outside [0, 1] is allowed.
CGPoint geodesic(const CGPoint& theta0, const CGPoint& theta1, double t);

/// Squared affine-invariant distance on Hermitian positive definite matrices:
///   || log(S0^{-1/2} S1 S0^{-1/2}) ||_F^2.
/// Defined for any HPD pair, unit determinant or not.
double spd_distance_squared(const CMat& s0, const CMat& s1);

/// Squared log-Euclidean distance on positive vectors: sum_i log^2(t1_i/t0_i).
double texture_distance_squared(const RVec& t0, const RVec& t1);

/// delta^2(theta0, theta1) = (1/p) spd_distance_squared + (1/n) texture_distance_squared.
double distance_squared(const CGPoint& theta0, const CGPoint& theta1);
double distance(const CGPoint& theta0, const CGPoint& theta1);

/// Unconstrained ambient pair (HPD matrix, positive vector). Entrywise
/// averaging of manifold points lands here: the determinant drifts away
/// from 1.
struct HpdPoint {
  HpdPoint(CMat sigma_in, RVec tau_in);
  explicit HpdPoint(const CGPoint& point)
      : sigma(point.sigma.matrix()), tau(point.tau.values()) {}

  CMat sigma;
  RVec tau;
};

/// Same distance formulas evaluated off the unit-determinant slice.
double distance_squared(const CGPoint& theta, const HpdPoint& other);

}  // namespace cgd
