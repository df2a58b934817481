#include "cgd/estimators.hpp"

#include <cmath>
#include <sstream>

namespace cgd {

namespace {

void require_batch_shape(const CGPoint& theta, const DataBatch& batch, const char* op) {
  if (theta.p() != batch.p() || theta.n() != batch.n()) {
    std::ostringstream msg;
    msg << op << ": point (p,n) = (" << theta.p() << "," << theta.n()
        << ") does not match batch (" << batch.p() << "," << batch.n() << ")";
    throw DimensionError(msg.str());
  }
}

// x_i^H Sigma^{-1} x_i for every column, guarded against underflow.
RVec quadratic_forms(const Eigen::LLT<CMat>& llt, const CMat& samples, const char* op) {
  const CMat solved = llt.solve(samples);
  RVec a(samples.cols());
  for (Index i = 0; i < samples.cols(); ++i) {
    a(i) = samples.col(i).dot(solved.col(i)).real();
    if (!(a(i) > kUnderflowGuard)) {
      std::ostringstream msg;
      msg << op << ": quadratic form " << i << " underflowed (" << a(i) << ")";
      throw NumericalError(msg.str());
    }
  }
  return a;
}

struct FixedPointResult {
  CMat sigma;  // unit determinant
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Iterates Sigma <- (p/n) sum_i M_i / w_i(Sigma) with det-normalization after
// every update; `weights` maps the current scatter to the n denominators.
template <typename WeightFn, typename NumeratorFn>
FixedPointResult scatter_fixed_point(Index p, Index n, const WeightFn& weights,
                                     const NumeratorFn& numerator_sum, double tol,
                                     int max_iter, const char* op) {
  if (!(tol > 0.0)) throw DomainError(std::string(op) + ": tol must be positive");
  if (max_iter < 1) throw DomainError(std::string(op) + ": max_iter must be >= 1");

  FixedPointResult out;
  out.sigma = CMat::Identity(p, p);
  double residual = std::numeric_limits<double>::infinity();
  for (int k = 0; k < max_iter; ++k) {
    Eigen::LLT<CMat> llt(out.sigma);
    if (llt.info() != Eigen::Success) {
      throw NumericalError(std::string(op) + ": scatter iterate lost positive definiteness");
    }
    const RVec w = weights(llt);
    CMat next = numerator_sum(w) * (static_cast<double>(p) / static_cast<double>(n));
    next = det_normalize(herm_part(next));
    residual = (next - out.sigma).norm() / out.sigma.norm();
    out.sigma = std::move(next);
    out.iterations = k + 1;
    if (residual < tol) {
      out.converged = true;
      break;
    }
  }
  out.residual = residual;
  if (!out.sigma.allFinite()) {
    throw NumericalError(std::string(op) + ": scatter iterate is not finite");
  }
  return out;
}

}  // namespace

DataBatch::DataBatch(CMat samples_in, int t_in) : samples(std::move(samples_in)), t(t_in) {
  if (samples.cols() < 1 || samples.rows() < 1) {
    throw DimensionError("DataBatch: need at least one sample of dimension >= 1");
  }
  for (Index i = 0; i < samples.cols(); ++i) {
    if (samples.col(i).norm() == 0.0) {
      std::ostringstream msg;
      msg << "DataBatch: sample " << i << " is the zero vector";
      throw DomainError(msg.str());
    }
  }
}

EstimatorReport tyler_estimate(const DataBatch& batch, double tol, int max_iter) {
  const Index p = batch.p();
  const Index n = batch.n();

  const FixedPointResult fp = scatter_fixed_point(
      p, n,
      [&](const Eigen::LLT<CMat>& llt) {
        return quadratic_forms(llt, batch.samples, "tyler_estimate");
      },
      [&](const RVec& a) {
        CMat sum = CMat::Zero(p, p);
        for (Index i = 0; i < n; ++i) {
          sum.noalias() += batch.samples.col(i) * batch.samples.col(i).adjoint() / a(i);
        }
        return sum;
      },
      tol, max_iter, "tyler_estimate");

  Eigen::LLT<CMat> llt(fp.sigma);
  const RVec a = quadratic_forms(llt, batch.samples, "tyler_estimate");
  RVec tau = a / static_cast<double>(p);

  EstimatorReport report{
      CGPoint(UnitDetHpd::normalized(fp.sigma), TextureVector(std::move(tau))),
      fp.iterations, fp.residual, fp.converged};
  if (n < p) {
    report.warnings.push_back("tyler_estimate: n < p, the fixed point may be degenerate");
  }
  return report;
}

PooledStats PooledStats::empty(Index p, Index n) {
  PooledStats stats;
  stats.p = p;
  stats.outer_sums.assign(static_cast<size_t>(n), CMat::Zero(p, p));
  return stats;
}

void PooledStats::absorb(const DataBatch& batch) {
  if (batch.p() != p || batch.n() != static_cast<Index>(outer_sums.size())) {
    throw DimensionError("PooledStats::absorb: batch shape does not match");
  }
  for (Index i = 0; i < batch.n(); ++i) {
    outer_sums[static_cast<size_t>(i)].noalias() +=
        batch.samples.col(i) * batch.samples.col(i).adjoint();
  }
  ++t_count;
}

EstimatorReport mle_h0_from_stats(const PooledStats& stats, double tol, int max_iter) {
  if (stats.t_count < 1) {
    throw DomainError("mle_h0_from_stats: no batches absorbed");
  }
  const Index p = stats.p;
  const Index n = static_cast<Index>(stats.outer_sums.size());

  auto pooled_traces = [&](const Eigen::LLT<CMat>& llt) {
    RVec w(n);
    for (Index i = 0; i < n; ++i) {
      w(i) = llt.solve(stats.outer_sums[static_cast<size_t>(i)]).trace().real();
      if (!(w(i) > kUnderflowGuard)) {
        throw NumericalError("mle_h0: pooled quadratic form underflowed");
      }
    }
    return w;
  };

  const FixedPointResult fp = scatter_fixed_point(
      p, n, pooled_traces,
      [&](const RVec& w) {
        CMat sum = CMat::Zero(p, p);
        for (Index i = 0; i < n; ++i) {
          sum.noalias() += stats.outer_sums[static_cast<size_t>(i)] / w(i);
        }
        return sum;
      },
      tol, max_iter, "mle_h0");

  Eigen::LLT<CMat> llt(fp.sigma);
  const RVec w = pooled_traces(llt);
  RVec tau = w / (static_cast<double>(stats.t_count) * static_cast<double>(p));

  EstimatorReport report{
      CGPoint(UnitDetHpd::normalized(fp.sigma), TextureVector(std::move(tau))),
      fp.iterations, fp.residual, fp.converged};
  if (static_cast<Index>(stats.t_count) * n < p) {
    report.warnings.push_back("mle_h0: fewer pooled samples than dimensions");
  }
  return report;
}

H0Report mle_h0(const std::vector<DataBatch>& batches, double tol, int max_iter) {
  if (batches.empty()) throw DomainError("mle_h0: need at least one batch");
  const Index p = batches.front().p();
  const Index n = batches.front().n();
  PooledStats stats = PooledStats::empty(p, n);
  for (const DataBatch& b : batches) stats.absorb(b);

  EstimatorReport pooled = mle_h0_from_stats(stats, tol, max_iter);

  const int T = static_cast<int>(batches.size());
  Eigen::LLT<CMat> llt(pooled.point.sigma.matrix());
  RMat tau0(n, T);
  for (int t = 0; t < T; ++t) {
    const RVec a = quadratic_forms(llt, batches[static_cast<size_t>(t)].samples, "mle_h0");
    tau0.col(t) = a / (static_cast<double>(T) * static_cast<double>(p));
  }
  return H0Report{std::move(pooled.point), std::move(tau0),
                  pooled.iterations,       pooled.residual,
                  pooled.converged,        std::move(pooled.warnings)};
}

RVec quadratic_forms(const CMat& sigma, const CMat& samples) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != samples.rows()) {
    throw DimensionError("quadratic_forms: matrix and samples shapes do not match");
  }
  Eigen::LLT<CMat> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw DomainError("quadratic_forms: matrix is not positive definite");
  }
  return quadratic_forms(llt, samples, "quadratic_forms");
}

double cg_log_likelihood(const CGPoint& theta, const DataBatch& batch) {
  require_batch_shape(theta, batch, "cg_log_likelihood");
  Eigen::LLT<CMat> llt(theta.sigma.matrix());
  if (llt.info() != Eigen::Success) {
    throw DomainError("cg_log_likelihood: scatter is not positive definite");
  }
  const RVec a = quadratic_forms(llt, batch.samples, "cg_log_likelihood");
  const RVec& tau = theta.tau.values();
  const double p = static_cast<double>(theta.p());
  return (-p * tau.array().log() - a.array() / tau.array()).sum();
}

CGTangent riemannian_gradient(const CGPoint& theta, const DataBatch& batch) {
  require_batch_shape(theta, batch, "riemannian_gradient");
  const Index p = theta.p();
  const Index n = theta.n();
  const CMat& sigma = theta.sigma.matrix();
  const RVec& tau = theta.tau.values();

  Eigen::LLT<CMat> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw DomainError("riemannian_gradient: scatter is not positive definite");
  }
  const RVec a = quadratic_forms(llt, batch.samples, "riemannian_gradient");

  CMat grad_sigma = CMat::Zero(p, p);
  for (Index i = 0; i < n; ++i) {
    grad_sigma.noalias() +=
        (static_cast<double>(p) * batch.samples.col(i) * batch.samples.col(i).adjoint() -
         a(i) * sigma) /
        tau(i);
  }
  RVec grad_tau = static_cast<double>(n) * (a - static_cast<double>(p) * tau);
  if (!grad_sigma.allFinite() || !grad_tau.allFinite()) {
    throw NumericalError("riemannian_gradient: gradient is not finite");
  }
  // Already tangent analytically; the projection removes round-off drift.
  return project_tangent(theta, grad_sigma, grad_tau);
}

RecursiveState RecursiveState::initial(Index p, Index n, double alpha0) {
  return from_point(CGPoint::identity(p, n), 0, alpha0);
}

RecursiveState RecursiveState::from_point(CGPoint point, int t, double alpha0) {
  if (!(alpha0 > 0.0)) throw DomainError("RecursiveState: alpha0 must be positive");
  if (t < 0) throw DomainError("RecursiveState: t must be >= 0");
  return RecursiveState{std::move(point), t, alpha0};
}

RecursiveState recursive_step(const RecursiveState& state, const DataBatch& batch) {
  require_batch_shape(state.current, batch, "recursive_step");
  const CGTangent grad = riemannian_gradient(state.current, batch);
  const double step = state.alpha0 / static_cast<double>(state.t + 1);
  CGPoint next = exp_map(state.current, grad.scaled(step));
  return RecursiveState{std::move(next), state.t + 1, state.alpha0};
}

HpdPoint arithmetic_mean_update(const HpdPoint& mean, const CGPoint& new_tyler, int t) {
  if (mean.sigma.rows() != new_tyler.p() || mean.tau.size() != new_tyler.n()) {
    throw DimensionError("arithmetic_mean_update: shapes do not match");
  }
  if (t < 1) throw DomainError("arithmetic_mean_update: t must be >= 1");
  const double weight = static_cast<double>(t);
  CMat sigma = (weight * mean.sigma + new_tyler.sigma.matrix()) / (weight + 1.0);
  RVec tau = (weight * mean.tau + new_tyler.tau.values()) / (weight + 1.0);
  return HpdPoint(std::move(sigma), std::move(tau));
}

double icrb(int p, int n, int T) {
  if (p < 1 || n < 1 || T < 1) throw DomainError("icrb: p, n, T must be >= 1");
  return (static_cast<double>(p) * p - 1.0 + n) /
         (static_cast<double>(T) * p * n);
}

double default_alpha0(Index p, Index n) {
  return 1.0 / (static_cast<double>(p) * static_cast<double>(n));
}

}  // namespace cgd
