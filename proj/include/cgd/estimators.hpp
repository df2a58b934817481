// Parameter estimation for the compound Gaussian model: Tyler's per-batch
// fixed point, the pooled null-hypothesis MLE, the per-batch log-likelihood
// with its Riemannian gradient, the recursive manifold estimator, the
// entrywise-mean baseline, and the intrinsic error lower bound.

#pragma once

#include <string>
#include <vector>

#include "cgd/core.hpp"
#include "cgd/manifold.hpp"

namespace cgd {

/// n complex p-vectors observed at one time index. Columns of `samples` are
/// the individual vectors; none may be zero.
struct DataBatch {
  DataBatch(CMat samples_in, int t_in);

  CMat samples;  // p x n
  int t = 0;

  Index p() const { return samples.rows(); }
  Index n() const { return samples.cols(); }
};

struct EstimatorReport {
  CGPoint point;
  int iterations = 0;
  double residual = 0.0;  // relative Frobenius change at the last iteration
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Pooled-MLE report; tau0_per_batch(i, t) holds the per-batch texture
/// summands whose column sums over t give point.tau.
struct H0Report {
  CGPoint point;
  RMat tau0_per_batch;  // n x T
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Tyler's scatter/texture fixed point on one batch:
///   Sigma = (p/n) sum_i x_i x_i^H / (x_i^H Sigma^{-1} x_i),
/// det-normalized each iteration; tau_i = x_i^H Sigma^{-1} x_i / p at the
/// converged, normalized scatter.
EstimatorReport tyler_estimate(const DataBatch& batch, double tol = 1e-8,
                               int max_iter = 100);

/// Per-pixel sums of outer products over time, the sufficient statistic of
/// the pooled fixed point. Absorbing batches one by one lets long-horizon
/// callers re-solve without touching earlier data.
struct PooledStats {
  static PooledStats empty(Index p, Index n);
  void absorb(const DataBatch& batch);

  std::vector<CMat> outer_sums;  // n matrices of size p x p
  int t_count = 0;
  Index p = 0;
};

/// Pooled fixed point over all absorbed batches:
///   Sigma = (p/n) sum_i S_i / tr(Sigma^{-1} S_i),  S_i = sum_t x_i x_i^H,
/// with textures tau_i = tr(Sigma^{-1} S_i) / (T p).
EstimatorReport mle_h0_from_stats(const PooledStats& stats, double tol = 1e-8,
                                  int max_iter = 100);

/// Joint null-hypothesis MLE over a batch list; also reports the per-batch
/// texture summands tau0(i, t) = x_i^{(t)H} Sigma0^{-1} x_i^{(t)} / (T p).
H0Report mle_h0(const std::vector<DataBatch>& batches, double tol = 1e-8,
                int max_iter = 100);

/// x_i^H Sigma^{-1} x_i for every column of `samples`; requires HPD Sigma.
RVec quadratic_forms(const CMat& sigma, const CMat& samples);

/// sum_i [ -p log(tau_i) - x_i^H Sigma^{-1} x_i / tau_i ]
/// (additive constants dropped; log det Sigma = 0 on the manifold).
double cg_log_likelihood(const CGPoint& theta, const DataBatch& batch);

/// Riemannian gradient of cg_log_likelihood at theta:
///   sigma part: sum_i [ p x_i x_i^H - (x_i^H Sigma^{-1} x_i) Sigma ] / tau_i,
///   tau part:   n (a - p tau),  a_i = x_i^H Sigma^{-1} x_i.
CGTangent riemannian_gradient(const CGPoint& theta, const DataBatch& batch);

/// State of the stochastic manifold ascent; t counts absorbed batches.
struct RecursiveState {
  CGPoint current;
  int t = 0;
  double alpha0 = 0.0;

  static RecursiveState initial(Index p, Index n, double alpha0);
  static RecursiveState from_point(CGPoint point, int t, double alpha0);
};

/// One stochastic gradient-ascent step along the exact exponential map with
/// stepsize alpha0 / (t + 1).
RecursiveState recursive_step(const RecursiveState& state, const DataBatch& batch);

/// Entrywise running mean (t previous estimates absorbed):
///   mean' = (t * mean + new_tyler) / (t + 1).
/// The scatter average is deliberately not re-normalized; its determinant
/// bias is the baseline's defect.
HpdPoint arithmetic_mean_update(const HpdPoint& mean, const CGPoint& new_tyler, int t);

/// Lower bound on E[ delta^2(theta, theta_hat) ] for unbiased estimators
/// from T batches: (p^2 - 1 + n) / (T p n).
double icrb(int p, int n, int T);

/// Stepsize default alpha0 = 1 / (p n).
double default_alpha0(Index p, Index n);

}  // namespace cgd
