// Synthetic compound Gaussian data generation and the Monte Carlo study of
// estimator MSE versus the intrinsic bound over growing time horizons.

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include "cgd/core.hpp"
#include "cgd/estimators.hpp"
#include "cgd/manifold.hpp"
#include "cgd/rng.hpp"

namespace cgd {

/// Random unit-determinant HPD matrix: Haar-distributed unitary eigenvectors
/// (QR of a complex Ginibre matrix with phase correction) and chi-squared(2)
/// eigenvalues renormalized to unit product.
UnitDetHpd random_unit_det_covariance(Index p, Rng& rng);

/// Draws batches x_i = sqrt(tau_i) Sigma^{1/2} z_i with z_i circular standard
/// complex Gaussian, so E[x_i x_i^H] = tau_i Sigma.
class CgSampler {
 public:
  CgSampler(const UnitDetHpd& sigma, TextureVector tau);

  DataBatch sample(Rng& rng, int t) const;

  Index p() const { return sigma_sqrt_.rows(); }
  Index n() const { return tau_.size(); }

 private:
  CMat sigma_sqrt_;
  TextureVector tau_;
};

DataBatch sample_cg_batch(const UnitDetHpd& sigma, const TextureVector& tau, Rng& rng,
                          int t = 0);

/// Pluggable texture law used when the truth is redrawn per trial.
using TextureSampler = std::function<double(Rng&)>;

/// Gamma(shape, scale) texture law.
TextureSampler gamma_texture(double shape, double scale);

/// Draws a strictly positive texture vector from the law.
TextureVector sample_textures(Index n, const TextureSampler& law, Rng& rng);

enum class EstimatorKind { mle, arithmetic, recursive };

struct ScenarioConfig {
  int p = 10;
  int n = 20;
  int T = 1000;
  double alpha0 = 0.0;  // 0 selects 1/(p n)
  double texture_gamma_shape = 1.0;
  double texture_gamma_scale = 1.0;
  int trials = 200;
  std::uint64_t seed = 0;
  std::set<EstimatorKind> estimators = {EstimatorKind::mle, EstimatorKind::arithmetic,
                                        EstimatorKind::recursive};
  double tol = 1e-8;
  int max_iter = 100;
  int threads = 1;  // 0 = hardware concurrency

  double resolved_alpha0() const;
  void validate() const;
};

/// One checkpoint of the study; MSE values are linear-scale averages of
/// delta^2(theta_true, theta_hat), NaN for estimators not requested.
struct MseRecord {
  int T = 0;
  double icrb = 0.0;
  double mle = std::numeric_limits<double>::quiet_NaN();
  double arithmetic = std::numeric_limits<double>::quiet_NaN();
  double recursive = std::numeric_limits<double>::quiet_NaN();
};

struct MseCurve {
  std::vector<MseRecord> records;
  int trials_used = 0;
  int trials_failed = 0;
};

/// Logarithmic horizon grid {1, 3, 10, 30, 100, 300, 1000} truncated to T.
std::vector<int> checkpoint_grid(int T);

/// 10 log10(x).
double to_db(double x);

/// Per trial: draw (Sigma*, tau*), generate T batches, maintain the requested
/// estimators, record delta^2 to the truth at every checkpoint; average over
/// trials. Deterministic for a fixed config, independent of thread count.
/// Both the recursive estimator and the entrywise mean start from the first
/// batch's Tyler estimate, and the pooled MLE is re-solved at checkpoints
/// from running sufficient statistics.
MseCurve run_mse_experiment(const ScenarioConfig& config);

}  // namespace cgd
