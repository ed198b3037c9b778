// poisonlab command-line front end.
//
//   poisonlab run --config exp.json [--out DIR]
//   poisonlab demo-fig1 [--out DIR]
//   poisonlab gradcheck [--instances N] [--seed S]
//   poisonlab oracle-check [--instances N] [--seed S]
//
// Any failure prints one line `error: {"kind": ..., "message": ...}` to
// stderr and exits with status 1 (2 for usage errors).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "poisonlab/error.hpp"
#include "poisonlab/harness.hpp"
#include "poisonlab/oracles/checks.hpp"

namespace fs = std::filesystem;
using namespace poisonlab;

namespace {

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << "error: " << nlohmann::json{{"kind", kind}, {"message", message}}.dump() << '\n';
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

void write_runs(const fs::path& path, const ExperimentReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "repetition,attack,defence,alpha,fraction,test_error,n_training,n_poison,"
         "removed_poison,removed_genuine,kept\n";
  for (const auto& r : report.runs)
    out << r.repetition << ',' << r.attack << ',' << r.defence << ',' << r.alpha << ','
        << r.fraction << ',' << r.test_error << ',' << r.n_training << ',' << r.n_poison << ','
        << r.removed_poison << ',' << r.removed_genuine << ',' << r.kept << '\n';
}

int cmd_run(const fs::path& config_path, const fs::path& out_dir) {
  const ExperimentConfig config = config_from_json(read_file(config_path));
  fs::create_directories(out_dir);
  const std::string stem = config_path.stem().string();

  nlohmann::json sidecar = nlohmann::json::parse(config_to_json(config));
  write_file(out_dir / (stem + ".config.json"), sidecar.dump(2) + "\n");

  const ExperimentReport report = run_experiment(config);
  emit_report(report, out_dir / (stem + ".report.csv"));
  write_runs(out_dir / (stem + ".runs.csv"), report);
  if (!report.failures.empty()) {
    sidecar["failures"] = report.failures;
    write_file(out_dir / (stem + ".config.json"), sidecar.dump(2) + "\n");
  }
  write_report(std::cout, report);
  return 0;
}

int cmd_demo(const fs::path& out_dir, std::uint64_t seed) {
  DemoConfig config;
  config.seed = seed;
  const DemoResult result = run_trajectory_demo(config);
  fs::create_directories(out_dir);
  {
    std::ofstream trace(out_dir / "fig1_trace.csv");
    if (!trace) throw IoError("cannot write fig1_trace.csv");
    write_demo_trace(trace, result);
  }
  {
    std::ofstream attack(out_dir / "fig1_attack_trace.csv");
    if (!attack) throw IoError("cannot write fig1_attack_trace.csv");
    write_attack_trace(attack, result.attack.trace);
  }
  write_file(out_dir / "fig1_boundaries.json", demo_boundaries_json(result) + "\n");

  const auto& last = result.trajectory.back();
  std::printf("outer iterations   %d (converged: %s)\n", result.attack.outer_iterations,
              result.attack.converged ? "yes" : "no");
  std::printf("final point        (%.6f, %.6f)\n", last[0], last[1]);
  std::printf("validation MSE     clean %.6f  poisoned %.6f\n", result.clean_val_mse,
              result.poisoned_val_mse);
  return 0;
}

int cmd_gradcheck(std::size_t instances, std::uint64_t seed, double tolerance) {
  const auto report = oracles::run_gradcheck(instances, seed);
  for (std::size_t i = 0; i < report.instances.size(); ++i)
    std::printf("instance %2zu  relative error %.3e  (redrawn %d)\n", i,
                report.instances[i].relative_error, report.instances[i].rejected_draws);
  const bool ok = report.worst <= tolerance;
  std::printf("worst %.3e  tolerance %.1e  %s\n", report.worst, tolerance, ok ? "ok" : "FAIL");
  if (!ok) print_error("gradcheck", "relative error above tolerance");
  return ok ? 0 : 1;
}

int cmd_oracle_check(std::size_t instances, std::uint64_t seed) {
  const auto r = oracles::run_detector_checks(instances, seed);
  const bool exact = r.knn == 0.0 && r.sampled_knn == 0.0 && r.sp == 0.0;
  const bool ok = exact && r.lof <= 1e-9 && r.ocsvm_objective <= 1e-4;
  std::printf("instances %zu\n", r.instances);
  std::printf("knn          max |diff| %.3e\n", r.knn);
  std::printf("sampled_knn  max |diff| %.3e\n", r.sampled_knn);
  std::printf("sp           max |diff| %.3e\n", r.sp);
  std::printf("lof          max |diff| %.3e\n", r.lof);
  std::printf("ocsvm        max |objective diff| %.3e over %zu fits\n", r.ocsvm_objective,
              r.ocsvm_instances);
  std::printf("%s\n", ok ? "ok" : "FAIL");
  if (!ok) print_error("oracle_check", "detector disagrees with its oracle");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisoning attacks and outlier-detection defences for lasso classifiers"};
  app.require_subcommand(1);

  fs::path config_path;
  fs::path out_dir = ".";
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory");

  fs::path demo_out = ".";
  std::uint64_t demo_seed = DemoConfig{}.seed;
  auto* demo = app.add_subcommand("demo-fig1", "Single-point trajectory on 2-D Gaussians");
  demo->add_option("--out", demo_out, "Output directory");
  demo->add_option("--seed", demo_seed, "Data seed");

  std::size_t grad_instances = 20;
  std::uint64_t grad_seed = 2024;
  double grad_tol = 1e-2;
  auto* grad = app.add_subcommand("gradcheck", "Attack gradient against finite differences");
  grad->add_option("--instances", grad_instances);
  grad->add_option("--seed", grad_seed);
  grad->add_option("--tolerance", grad_tol);

  std::size_t oracle_instances = 100;
  std::uint64_t oracle_seed = 7;
  auto* oracle = app.add_subcommand("oracle-check", "Detectors against brute-force oracles");
  oracle->add_option("--instances", oracle_instances);
  oracle->add_option("--seed", oracle_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir);
    if (*demo) return cmd_demo(demo_out, demo_seed);
    if (*grad) return cmd_gradcheck(grad_instances, grad_seed, grad_tol);
    if (*oracle) return cmd_oracle_check(oracle_instances, oracle_seed);
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
