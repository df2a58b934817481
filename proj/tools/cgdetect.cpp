// Command-line front end: dataset simulation, estimation, change detection,
// intrinsic-bound queries and the MSE-vs-horizon benchmark, all file based.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cgd/detector.hpp"
#include "cgd/estimators.hpp"
#include "cgd/io.hpp"
#include "cgd/manifold.hpp"
#include "cgd/rng.hpp"
#include "cgd/simulation.hpp"
#include "cgd/version.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void make_output_dir(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    throw cgd::IoError("cannot create output directory " + out.string() + ": " + ec.message());
  }
}

void write_manifest(const fs::path& out_dir, const std::string& command, const json& config,
                    const json& seed, const std::vector<std::string>& outputs,
                    double duration_seconds) {
  json manifest;
  manifest["command"] = command;
  manifest["config"] = config;
  manifest["seed"] = seed;
  manifest["library_version"] = cgd::kVersion;
  manifest["duration_seconds"] = duration_seconds;
  manifest["outputs"] = outputs;
  cgd::io::write_text_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

json point_summary(const cgd::CGPoint& point) {
  return json{{"p", point.p()}, {"n", point.n()}};
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  int p = 10;
  int n = 20;
  int T = 10;
  std::uint64_t seed = 0;
  double texture_shape = 1.0;
  double texture_scale = 1.0;
  std::string out;
};

void run_simulate(const SimulateOpts& o) {
  Stopwatch clock;
  if (o.p < 1 || o.n < 1 || o.T < 1) {
    throw cgd::DomainError("simulate: p, n and T must be >= 1");
  }
  make_output_dir(o.out);

  cgd::Rng rng = cgd::make_rng_stream(o.seed, 0);
  const cgd::UnitDetHpd sigma = cgd::random_unit_det_covariance(o.p, rng);
  const cgd::TextureVector tau =
      cgd::sample_textures(o.n, cgd::gamma_texture(o.texture_shape, o.texture_scale), rng);
  const cgd::CgSampler sampler(sigma, tau);

  std::vector<std::string> outputs;
  cgd::io::write_theta_file(fs::path(o.out) / "theta_star.theta",
                            cgd::CGPoint(sigma, tau));
  outputs.push_back("theta_star.theta");

  for (int t = 1; t <= o.T; ++t) {
    const std::string name = cgd::io::batch_file_name(t);
    cgd::io::write_batch_file(fs::path(o.out) / name, sampler.sample(rng, t));
    outputs.push_back(name);
  }

  const json config = {{"p", o.p},
                       {"n", o.n},
                       {"T", o.T},
                       {"texture_gamma_shape", o.texture_shape},
                       {"texture_gamma_scale", o.texture_scale},
                       {"out", o.out}};
  write_manifest(o.out, "simulate", config, o.seed, outputs, clock.seconds());
  std::cout << "wrote " << o.T << " batch files and theta_star.theta to " << o.out << "\n";
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateOpts {
  std::string data;
  std::string method = "tyler";
  std::string out;
  double tol = 1e-8;
  int max_iter = 100;
  double alpha0 = 0.0;
};

json report_entry(const cgd::EstimatorReport& rep, const std::string& output) {
  return json{{"iterations", rep.iterations}, {"residual", rep.residual},
              {"converged", rep.converged},   {"warnings", rep.warnings},
              {"output", output},             {"shape", point_summary(rep.point)}};
}

void run_estimate(const EstimateOpts& o) {
  Stopwatch clock;
  const std::vector<cgd::DataBatch> batches = cgd::io::read_batch_dir(o.data);
  make_output_dir(o.out);

  json report;
  report["method"] = o.method;
  report["batches"] = batches.size();
  std::vector<std::string> outputs;

  if (o.method == "tyler") {
    json entries = json::array();
    for (const cgd::DataBatch& batch : batches) {
      const cgd::EstimatorReport rep = cgd::tyler_estimate(batch, o.tol, o.max_iter);
      char name[48];
      std::snprintf(name, sizeof(name), "theta_tyler_%04d.theta", batch.t);
      cgd::io::write_theta_file(fs::path(o.out) / name, rep.point);
      outputs.emplace_back(name);
      json entry = report_entry(rep, name);
      entry["t"] = batch.t;
      entries.push_back(std::move(entry));
    }
    report["estimates"] = std::move(entries);
  } else if (o.method == "mle0") {
    const cgd::H0Report rep = cgd::mle_h0(batches, o.tol, o.max_iter);
    const std::string name = "theta_mle0.theta";
    cgd::io::write_theta_file(fs::path(o.out) / name, rep.point);
    outputs.push_back(name);
    report["estimates"] = json::array({json{{"iterations", rep.iterations},
                                            {"residual", rep.residual},
                                            {"converged", rep.converged},
                                            {"warnings", rep.warnings},
                                            {"output", name},
                                            {"shape", point_summary(rep.point)}}});
  } else if (o.method == "recursive") {
    const cgd::Index p = batches.front().p();
    const cgd::Index n = batches.front().n();
    const double alpha0 = o.alpha0 == 0.0 ? cgd::default_alpha0(p, n) : o.alpha0;
    cgd::RecursiveState state = cgd::RecursiveState::initial(p, n, alpha0);
    for (const cgd::DataBatch& batch : batches) state = cgd::recursive_step(state, batch);
    const std::string name = "theta_recursive.theta";
    cgd::io::write_theta_file(fs::path(o.out) / name, state.current);
    outputs.push_back(name);
    report["estimates"] = json::array(
        {json{{"steps", state.t}, {"alpha0", alpha0}, {"output", name},
              {"shape", point_summary(state.current)}}});
  } else if (o.method == "arithmetic") {
    std::optional<cgd::HpdPoint> mean;
    int absorbed = 0;
    for (const cgd::DataBatch& batch : batches) {
      const cgd::CGPoint tyler = cgd::tyler_estimate(batch, o.tol, o.max_iter).point;
      mean = absorbed == 0 ? cgd::HpdPoint(tyler)
                           : cgd::arithmetic_mean_update(*mean, tyler, absorbed);
      ++absorbed;
    }
    const std::string name = "theta_arithmetic.theta";
    cgd::io::write_theta_file(fs::path(o.out) / name, mean->sigma, mean->tau);
    outputs.push_back(name);
    report["estimates"] =
        json::array({json{{"averaged_fits", absorbed}, {"output", name}}});
  } else {
    throw cgd::DomainError("estimate: unknown method '" + o.method +
                           "' (expected tyler, mle0, recursive or arithmetic)");
  }

  cgd::io::write_text_atomic(fs::path(o.out) / "estimate_report.json",
                             report.dump(2) + "\n");
  outputs.push_back("estimate_report.json");

  const json config = {{"data", o.data},         {"method", o.method}, {"out", o.out},
                       {"tol", o.tol},           {"max_iter", o.max_iter},
                       {"alpha0", o.alpha0}};
  write_manifest(o.out, "estimate", config, nullptr, outputs, clock.seconds());
  std::cout << report.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// detect

struct DetectOpts {
  std::string data;
  std::string mode = "batch";
  double pfa = 0.05;
  int trials = 2000;
  std::uint64_t seed = 0;
  double texture_shape = 1.0;
  double texture_scale = 1.0;
  int threads = 1;
  double tol = 1e-8;
  int max_iter = 100;
  double alpha0 = 0.0;
  std::string out;  // optional
};

void run_detect(const DetectOpts& o) {
  Stopwatch clock;
  const std::vector<cgd::DataBatch> batches = cgd::io::read_batch_dir(o.data);
  const auto p = static_cast<int>(batches.front().p());
  const auto n = static_cast<int>(batches.front().n());
  const auto T = static_cast<int>(batches.size());

  cgd::GlrtMode mode;
  if (o.mode == "batch") {
    mode = cgd::GlrtMode::batch;
  } else if (o.mode == "recursive") {
    mode = cgd::GlrtMode::recursive;
  } else {
    throw cgd::DomainError("detect: unknown mode '" + o.mode +
                           "' (expected batch or recursive)");
  }

  cgd::CalibrationConfig calib_config;
  calib_config.p = p;
  calib_config.n = n;
  calib_config.T = T;
  calib_config.pfa = o.pfa;
  calib_config.trials = o.trials;
  calib_config.texture_gamma_shape = o.texture_shape;
  calib_config.texture_gamma_scale = o.texture_scale;
  calib_config.seed = o.seed;
  calib_config.mode = mode;
  calib_config.tol = o.tol;
  calib_config.max_iter = o.max_iter;
  calib_config.alpha0 = o.alpha0;
  calib_config.threads = o.threads;
  const cgd::CalibrationResult calib = cgd::calibrate_threshold(calib_config);

  const cgd::DetectionResult result =
      mode == cgd::GlrtMode::batch
          ? cgd::glrt_batch(batches, o.tol, o.max_iter, calib.threshold_log)
          : cgd::glrt_recursive_sequence(batches, o.alpha0, o.tol, o.max_iter,
                                         calib.threshold_log);

  json report;
  report["mode"] = o.mode;
  report["p"] = p;
  report["n"] = n;
  report["T"] = T;
  report["log_lambda"] = result.log_lambda;
  report["threshold_log"] = result.threshold_log;
  report["decision"] = result.change_detected ? "H1" : "H0";
  report["pfa"] = o.pfa;
  report["t_first"] = result.t_first;
  report["t_last"] = result.t_last;
  report["logdet_term_h0"] = result.logdet_term_h0;
  report["logdet_term_h1"] = result.logdet_term_h1;
  report["warnings"] = result.warnings;
  report["calibration"] = json{{"trials", o.trials},
                               {"trials_used", calib.trials_used},
                               {"trials_failed", calib.trials_failed},
                               {"warnings", calib.warnings}};

  std::cout << report.dump(2) << "\n";

  if (!o.out.empty()) {
    make_output_dir(o.out);
    cgd::io::write_text_atomic(fs::path(o.out) / "detection.json", report.dump(2) + "\n");
    const json config = {{"data", o.data},
                         {"mode", o.mode},
                         {"pfa", o.pfa},
                         {"trials", o.trials},
                         {"texture_gamma_shape", o.texture_shape},
                         {"texture_gamma_scale", o.texture_scale},
                         {"threads", o.threads},
                         {"tol", o.tol},
                         {"max_iter", o.max_iter},
                         {"alpha0", o.alpha0},
                         {"out", o.out}};
    write_manifest(o.out, "detect", config, o.seed, {"detection.json"}, clock.seconds());
  }
}

// ---------------------------------------------------------------------------
// icrb

void run_icrb(int p, int n, int T) {
  const double value = cgd::icrb(p, n, T);
  std::cout << cgd::io::format_double(value) << " (" << cgd::io::format_double(cgd::to_db(value))
            << " dB)\n";
}

// ---------------------------------------------------------------------------
// bench-fig1

struct BenchOpts {
  cgd::ScenarioConfig scenario;
  std::string estimators = "mle,arithmetic,recursive";
  std::string out;
};

std::set<cgd::EstimatorKind> parse_estimators(const std::string& csv) {
  static const std::map<std::string, cgd::EstimatorKind> names = {
      {"mle", cgd::EstimatorKind::mle},
      {"arithmetic", cgd::EstimatorKind::arithmetic},
      {"recursive", cgd::EstimatorKind::recursive}};
  std::set<cgd::EstimatorKind> kinds;
  std::string token;
  std::istringstream stream(csv);
  while (std::getline(stream, token, ',')) {
    const auto it = names.find(token);
    if (it == names.end()) {
      throw cgd::DomainError("bench-fig1: unknown estimator '" + token +
                             "' (expected mle, arithmetic, recursive)");
    }
    kinds.insert(it->second);
  }
  if (kinds.empty()) throw cgd::DomainError("bench-fig1: no estimators selected");
  return kinds;
}

void run_bench(const BenchOpts& o) {
  Stopwatch clock;
  cgd::ScenarioConfig scenario = o.scenario;
  scenario.estimators = parse_estimators(o.estimators);
  scenario.validate();
  make_output_dir(o.out);

  const cgd::MseCurve curve = cgd::run_mse_experiment(scenario);

  cgd::io::write_mse_csv(fs::path(o.out) / "mse.csv", curve);

  json records = json::array();
  for (const cgd::MseRecord& rec : curve.records) {
    records.push_back(json{{"T", rec.T},
                           {"icrb", rec.icrb},
                           {"icrb_db", cgd::to_db(rec.icrb)},
                           {"mle", rec.mle},
                           {"arithmetic", rec.arithmetic},
                           {"recursive", rec.recursive}});
  }
  json curve_json;
  curve_json["records"] = std::move(records);
  curve_json["trials_used"] = curve.trials_used;
  curve_json["trials_failed"] = curve.trials_failed;
  cgd::io::write_text_atomic(fs::path(o.out) / "mse.json", curve_json.dump(2) + "\n");

  const json config = {{"p", scenario.p},
                       {"n", scenario.n},
                       {"T", scenario.T},
                       {"alpha0", scenario.alpha0},
                       {"resolved_alpha0", scenario.resolved_alpha0()},
                       {"texture_gamma_shape", scenario.texture_gamma_shape},
                       {"texture_gamma_scale", scenario.texture_gamma_scale},
                       {"trials", scenario.trials},
                       {"estimators", o.estimators},
                       {"tol", scenario.tol},
                       {"max_iter", scenario.max_iter},
                       {"threads", scenario.threads},
                       {"out", o.out}};
  write_manifest(o.out, "bench-fig1", config, scenario.seed,
                 {"mse.csv", "mse.json"}, clock.seconds());

  std::cout << "T,icrb_db,mle_db,arithmetic_db,recursive_db\n";
  for (const cgd::MseRecord& rec : curve.records) {
    std::cout << rec.T << "," << cgd::to_db(rec.icrb) << "," << cgd::to_db(rec.mle) << ","
              << cgd::to_db(rec.arithmetic) << "," << cgd::to_db(rec.recursive) << "\n";
  }
  std::cout << "trials_used=" << curve.trials_used
            << " trials_failed=" << curve.trials_failed << "\n";
}

int report_error(int code, const char* type, const std::string& message) {
  const json err = {{"error", {{"type", type}, {"message", message}}}};
  std::cerr << err.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compound Gaussian covariance/texture estimation and change detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cgd::kVersion);
  app.set_config("--config", "", "flat key=value config file; flags take precedence");

  SimulateOpts sim;
  CLI::App* simulate = app.add_subcommand("simulate", "generate synthetic batch files");
  simulate->add_option("--p", sim.p, "vector dimension");
  simulate->add_option("--n", sim.n, "samples per batch");
  simulate->add_option("--T", sim.T, "number of batches");
  simulate->add_option("--seed", sim.seed, "RNG seed");
  simulate->add_option("--texture-shape", sim.texture_shape, "gamma shape of the textures");
  simulate->add_option("--texture-scale", sim.texture_scale, "gamma scale of the textures");
  simulate->add_option("--out", sim.out, "output directory")->required();
  simulate->callback([&sim]() { run_simulate(sim); });

  EstimateOpts est;
  CLI::App* estimate = app.add_subcommand("estimate", "fit parameters from batch files");
  estimate->add_option("--data", est.data, "directory of batch_*.csv files")->required();
  estimate->add_option("--method", est.method, "tyler | mle0 | recursive | arithmetic");
  estimate->add_option("--out", est.out, "output directory")->required();
  estimate->add_option("--tol", est.tol, "fixed-point tolerance");
  estimate->add_option("--max-iter", est.max_iter, "fixed-point iteration cap");
  estimate->add_option("--alpha0", est.alpha0, "recursive stepsize scale, 0 = 1/(p n)");
  estimate->callback([&est]() { run_estimate(est); });

  DetectOpts det;
  CLI::App* detect = app.add_subcommand("detect", "run the change test on batch files");
  detect->add_option("--data", det.data, "directory of batch_*.csv files")->required();
  detect->add_option("--mode", det.mode, "batch | recursive");
  detect->add_option("--pfa", det.pfa, "target false-alarm probability");
  detect->add_option("--trials", det.trials, "calibration Monte Carlo trials");
  detect->add_option("--seed", det.seed, "calibration RNG seed");
  detect->add_option("--texture-shape", det.texture_shape, "calibration texture gamma shape");
  detect->add_option("--texture-scale", det.texture_scale, "calibration texture gamma scale");
  detect->add_option("--threads", det.threads, "calibration worker threads, 0 = all cores");
  detect->add_option("--tol", det.tol, "fixed-point tolerance");
  detect->add_option("--max-iter", det.max_iter, "fixed-point iteration cap");
  detect->add_option("--alpha0", det.alpha0, "recursive stepsize scale, 0 = 1/(p n)");
  detect->add_option("--out", det.out, "optional output directory for the report");
  detect->callback([&det]() { run_detect(det); });

  int icrb_p = 0;
  int icrb_n = 0;
  int icrb_T = 0;
  CLI::App* icrb_cmd = app.add_subcommand("icrb", "print the error lower bound");
  icrb_cmd->add_option("p", icrb_p, "vector dimension")->required();
  icrb_cmd->add_option("n", icrb_n, "samples per batch")->required();
  icrb_cmd->add_option("T", icrb_T, "number of batches")->required();
  icrb_cmd->callback([&]() { run_icrb(icrb_p, icrb_n, icrb_T); });

  BenchOpts bench;
  CLI::App* fig1 = app.add_subcommand("bench-fig1", "MSE-vs-horizon Monte Carlo study");
  fig1->add_option("--p", bench.scenario.p, "vector dimension");
  fig1->add_option("--n", bench.scenario.n, "samples per batch");
  fig1->add_option("--T", bench.scenario.T, "horizon");
  fig1->add_option("--trials", bench.scenario.trials, "Monte Carlo trials");
  fig1->add_option("--seed", bench.scenario.seed, "RNG seed");
  fig1->add_option("--alpha0", bench.scenario.alpha0, "recursive stepsize scale, 0 = 1/(p n)");
  fig1->add_option("--texture-shape", bench.scenario.texture_gamma_shape,
                   "gamma shape of the textures");
  fig1->add_option("--texture-scale", bench.scenario.texture_gamma_scale,
                   "gamma scale of the textures");
  fig1->add_option("--tol", bench.scenario.tol, "fixed-point tolerance");
  fig1->add_option("--max-iter", bench.scenario.max_iter, "fixed-point iteration cap");
  fig1->add_option("--threads", bench.scenario.threads, "worker threads, 0 = all cores");
  fig1->add_option("--estimators", bench.estimators,
                   "comma list of mle, arithmetic, recursive");
  fig1->add_option("--out", bench.out, "output directory")->required();
  fig1->callback([&bench]() { run_bench(bench); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const cgd::IoError& e) {
    return report_error(kExitIo, "io", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error(kExitIo, "io", e.what());
  } catch (const cgd::NumericalError& e) {
    return report_error(kExitNumerical, "numerical", e.what());
  } catch (const cgd::DimensionError& e) {
    return report_error(kExitUsage, "usage", e.what());
  } catch (const cgd::DomainError& e) {
    return report_error(kExitUsage, "usage", e.what());
  } catch (const std::exception& e) {
    return report_error(kExitNumerical, "internal", e.what());
  }
  return 0;
}
