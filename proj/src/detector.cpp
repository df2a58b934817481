#include "cgd/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "cgd/hermitian.hpp"
#include "cgd/parallel.hpp"
#include "cgd/rng.hpp"
#include "cgd/simulation.hpp"

namespace cgd {

namespace {

void warn_not_converged(std::vector<std::string>& warnings, const char* what, int t,
                        const EstimatorReport& report) {
  if (report.converged) return;
  std::ostringstream msg;
  msg << what << ": fit at t = " << t << " stopped at max_iter with residual "
      << report.residual;
  warnings.push_back(msg.str());
}

}  // namespace

double glrt_log_lambda(Index p, Index n, int t_count, double logdet_sigma0,
                       const RVec& tau0_sums, double sum_logdet_per_batch,
                       double sum_log_tau_per_batch) {
  if (t_count < 1) throw DomainError("glrt_log_lambda: t_count must be >= 1");
  if (tau0_sums.size() != n) {
    throw DimensionError("glrt_log_lambda: tau0_sums length does not match n");
  }
  for (Index i = 0; i < n; ++i) {
    if (!(tau0_sums(i) > 0.0)) {
      throw NumericalError("glrt_log_lambda: aggregated null texture is not positive");
    }
  }
  const double T = static_cast<double>(t_count);
  return static_cast<double>(n) * (T * logdet_sigma0 - sum_logdet_per_batch) +
         static_cast<double>(p) *
             (T * tau0_sums.array().log().sum() - sum_log_tau_per_batch);
}

DetectionResult glrt_batch(const std::vector<DataBatch>& batches, double tol, int max_iter,
                           double threshold_log) {
  if (batches.empty()) throw DimensionError("glrt_batch: need at least one batch");
  const Index p = batches.front().p();
  const Index n = batches.front().n();
  for (const DataBatch& b : batches) {
    if (b.p() != p || b.n() != n) {
      throw DimensionError("glrt_batch: batches disagree on (p, n)");
    }
  }

  DetectionResult out;
  out.threshold_log = threshold_log;
  out.t_first = batches.front().t;
  out.t_last = batches.back().t;
  out.t_count = static_cast<int>(batches.size());

  H0Report h0 = mle_h0(batches, tol, max_iter);
  out.warnings = std::move(h0.warnings);
  if (!h0.converged) {
    std::ostringstream msg;
    msg << "glrt_batch: pooled fit stopped at max_iter with residual " << h0.residual;
    out.warnings.push_back(msg.str());
  }
  const double logdet_sigma0 = logdet(h0.point.sigma.matrix());
  const RVec tau0_sums = h0.tau0_per_batch.rowwise().sum();

  double sum_logdet = 0.0;
  double sum_log_tau = 0.0;
  for (std::size_t t = 0; t < batches.size(); ++t) {
    const EstimatorReport tyl = tyler_estimate(batches[t], tol, max_iter);
    warn_not_converged(out.warnings, "glrt_batch", batches[t].t, tyl);
    sum_logdet += logdet(tyl.point.sigma.matrix());
    sum_log_tau += tyl.point.tau.values().array().log().sum();
  }

  out.log_lambda =
      glrt_log_lambda(p, n, out.t_count, logdet_sigma0, tau0_sums, sum_logdet, sum_log_tau);
  out.logdet_term_h0 = static_cast<double>(n) * out.t_count * logdet_sigma0;
  out.logdet_term_h1 = static_cast<double>(n) * sum_logdet;
  out.change_detected = out.log_lambda > threshold_log;
  return out;
}

RunningSufficientStats RunningSufficientStats::empty(Index n) {
  if (n < 1) throw DimensionError("RunningSufficientStats: n must be >= 1");
  RunningSufficientStats h;
  h.s = RVec::Zero(n);
  return h;
}

RecursiveGlrtStep glrt_recursive(const RecursiveState& state,
                                 const RunningSufficientStats& history,
                                 const DataBatch& batch, double tol, int max_iter,
                                 double threshold_log) {
  const Index p = state.current.p();
  const Index n = state.current.n();
  if (batch.p() != p || batch.n() != n || history.s.size() != n) {
    throw DimensionError("glrt_recursive: state, history and batch shapes do not match");
  }
  if (history.t_count != state.t) {
    throw DomainError("glrt_recursive: history t_count does not match state t");
  }

  RecursiveGlrtStep step{DetectionResult{}, state, history};

  const EstimatorReport tyl = tyler_estimate(batch, tol, max_iter);
  warn_not_converged(step.result.warnings, "glrt_recursive", batch.t, tyl);

  // First batch seeds the null estimate outright; the statistic then
  // cancels exactly, matching the exact test at T = 1.
  step.state = (history.t_count == 0)
                   ? RecursiveState::from_point(tyl.point, 1, state.alpha0)
                   : recursive_step(state, batch);

  const RVec a = quadratic_forms(step.state.current.sigma.matrix(), batch.samples);
  step.history.s += a;
  step.history.sum_logdet_per_batch += logdet(tyl.point.sigma.matrix());
  step.history.sum_log_tau_per_batch += tyl.point.tau.values().array().log().sum();
  step.history.t_count += 1;
  step.history.t_first = history.t_count == 0 ? batch.t : history.t_first;
  step.history.t_last = batch.t;

  const int T = step.history.t_count;
  const RVec tau0_sums =
      step.history.s / (static_cast<double>(T) * static_cast<double>(p));
  const double logdet_sigma0 = logdet(step.state.current.sigma.matrix());

  step.result.log_lambda =
      glrt_log_lambda(p, n, T, logdet_sigma0, tau0_sums,
                      step.history.sum_logdet_per_batch, step.history.sum_log_tau_per_batch);
  step.result.threshold_log = threshold_log;
  step.result.change_detected = step.result.log_lambda > threshold_log;
  step.result.t_first = step.history.t_first;
  step.result.t_last = step.history.t_last;
  step.result.t_count = T;
  step.result.logdet_term_h0 = static_cast<double>(n) * T * logdet_sigma0;
  step.result.logdet_term_h1 = static_cast<double>(n) * step.history.sum_logdet_per_batch;
  return step;
}

DetectionResult glrt_recursive_sequence(const std::vector<DataBatch>& batches, double alpha0,
                                        double tol, int max_iter, double threshold_log) {
  if (batches.empty()) {
    throw DimensionError("glrt_recursive_sequence: need at least one batch");
  }
  const Index p = batches.front().p();
  const Index n = batches.front().n();
  const double step = alpha0 == 0.0 ? default_alpha0(p, n) : alpha0;

  RecursiveState state = RecursiveState::initial(p, n, step);
  RunningSufficientStats history = RunningSufficientStats::empty(n);
  DetectionResult last;
  for (const DataBatch& batch : batches) {
    RecursiveGlrtStep stepped =
        glrt_recursive(state, history, batch, tol, max_iter, threshold_log);
    state = std::move(stepped.state);
    history = std::move(stepped.history);
    last = std::move(stepped.result);
  }
  return last;
}

void CalibrationConfig::validate() const {
  if (p < 1 || n < 1) throw DimensionError("calibrate_threshold: p and n must be >= 1");
  if (T < 1) throw DomainError("calibrate_threshold: T must be >= 1");
  if (!(pfa > 0.0 && pfa < 1.0)) {
    throw DomainError("calibrate_threshold: pfa must lie strictly inside (0, 1)");
  }
  if (trials < 1) throw DomainError("calibrate_threshold: trials must be >= 1");
  if (!(texture_gamma_shape > 0.0) || !(texture_gamma_scale > 0.0)) {
    throw DomainError("calibrate_threshold: texture gamma parameters must be positive");
  }
  if (!(tol > 0.0)) throw DomainError("calibrate_threshold: tol must be positive");
  if (max_iter < 1) throw DomainError("calibrate_threshold: max_iter must be >= 1");
  if (alpha0 < 0.0) throw DomainError("calibrate_threshold: alpha0 must be nonnegative");
  if (threads < 0) throw DomainError("calibrate_threshold: threads must be nonnegative");
  if (sigma_truth && (sigma_truth->rows() != p || sigma_truth->cols() != p)) {
    throw DimensionError("calibrate_threshold: sigma_truth must be p x p");
  }
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DomainError("sorted_quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("sorted_quantile: q must be in [0, 1]");
  const std::size_t count = sorted.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(count)));
  rank = std::min(std::max<std::size_t>(rank, 1), count);
  return sorted[rank - 1];
}

CalibrationResult calibrate_threshold(const CalibrationConfig& config) {
  config.validate();
  const double alpha0 =
      config.alpha0 == 0.0 ? default_alpha0(config.p, config.n) : config.alpha0;

  std::optional<UnitDetHpd> fixed_sigma;
  if (config.sigma_truth) {
    fixed_sigma = UnitDetHpd::normalized(herm_part(*config.sigma_truth));
  }

  std::vector<double> slots(static_cast<std::size_t>(config.trials),
                            std::numeric_limits<double>::quiet_NaN());
  std::vector<char> ok(static_cast<std::size_t>(config.trials), 0);

  parallel_for(config.trials, config.threads, [&](int trial) {
    Rng rng = make_rng_stream(config.seed, static_cast<std::uint64_t>(trial));
    try {
      const UnitDetHpd sigma =
          fixed_sigma ? *fixed_sigma : random_unit_det_covariance(config.p, rng);
      const TextureVector tau = sample_textures(
          config.n, gamma_texture(config.texture_gamma_shape, config.texture_gamma_scale),
          rng);
      const CgSampler sampler(sigma, tau);

      std::vector<DataBatch> batches;
      batches.reserve(static_cast<std::size_t>(config.T));
      for (int t = 1; t <= config.T; ++t) batches.push_back(sampler.sample(rng, t));
      const double value =
          config.mode == GlrtMode::batch
              ? glrt_batch(batches, config.tol, config.max_iter).log_lambda
              : glrt_recursive_sequence(batches, alpha0, config.tol, config.max_iter)
                    .log_lambda;
      slots[static_cast<std::size_t>(trial)] = value;
      ok[static_cast<std::size_t>(trial)] = 1;
    } catch (const DomainError&) {
      // degenerate draw; trial excluded
    } catch (const NumericalError&) {
      // failed solve; trial excluded
    }
  });

  CalibrationResult out;
  out.null_samples.reserve(static_cast<std::size_t>(config.trials));
  for (int trial = 0; trial < config.trials; ++trial) {
    if (ok[static_cast<std::size_t>(trial)]) {
      out.null_samples.push_back(slots[static_cast<std::size_t>(trial)]);
    }
  }
  out.trials_used = static_cast<int>(out.null_samples.size());
  out.trials_failed = config.trials - out.trials_used;
  if (out.null_samples.empty()) {
    throw NumericalError("calibrate_threshold: every trial failed");
  }
  std::sort(out.null_samples.begin(), out.null_samples.end());
  out.threshold_log = sorted_quantile(out.null_samples, 1.0 - config.pfa);

  if (static_cast<double>(config.trials) * config.pfa < 100.0) {
    out.warnings.push_back(
        "calibrate_threshold: trials below the recommended 100 / pfa for a stable "
        "tail quantile");
  }
  if (out.trials_failed > 0) {
    out.warnings.push_back("calibrate_threshold: " + std::to_string(out.trials_failed) +
                           " trials failed and were excluded");
  }
  return out;
}

}  // namespace cgd
