#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "poisonlab/attack_optimal.hpp"
#include "poisonlab/dataset.hpp"
#include "poisonlab/defence.hpp"
#include "poisonlab/linear_model.hpp"
#include "poisonlab/outlier.hpp"

namespace poisonlab {

enum class DatasetKind { synthetic, synthetic_binary, spambase, mnist17 };
enum class AttackKind { none, optimal, rlf, ilf };
enum class DefenceKind { none, detector, rls };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::synthetic;
  std::filesystem::path spambase_path;
  std::filesystem::path mnist_images;
  std::filesystem::path mnist_labels;
  /// synthetic: two isotropic Gaussians.
  GaussianSpec gaussian{Vector::Constant(2, 0.0), Vector::Constant(2, 0.0), 0.6, 500, 1};
  /// synthetic_binary: seed of the Spambase-shaped Bernoulli surrogate.
  std::uint64_t surrogate_seed = 1;
};

struct AttackSettings {
  AttackKind kind = AttackKind::none;
  double epsilon = 1e-4;
  /// Box bounds broadcast over every feature unless vectors are given.
  double box_low = 0.0;
  double box_high = 1.0;
  int max_outer_iters = 20;
  double gs_tol = 1e-3;
  bool round_binary = false;
  StepScale step_scale = StepScale::box_diagonal;
  TargetLabels targets = TargetLabels::alternate;
  SingularPolicy singular = SingularPolicy::pseudo_inverse;
  /// Extra random draws per split for rlf.
  std::size_t flip_repetitions = 1;
};

struct DefenceSettings {
  DefenceKind kind = DefenceKind::none;
  ScorerConfig detector;
  double alpha = 0.99;
};

struct LambdaPolicy {
  enum class Kind { fixed, cv_on_warm_start } kind = Kind::fixed;
  double lambda = 0.0;
  std::size_t folds = 5;
  std::vector<double> grid;  // empty: lambda_max * {1e-4, ..., 1}
};

struct ExperimentConfig {
  DatasetConfig dataset;
  SplitSpec split{200, 200, 400, 0};
  AttackSettings attack;
  std::vector<double> poison_fractions{0.0, 0.05, 0.10, 0.15, 0.20};
  std::vector<DefenceSettings> defences{DefenceSettings{}};
  std::size_t repetitions = 10;
  /// Runs per split for randomised detectors (sampled_knn, sp).
  std::size_t detector_repetitions = 10;
  std::uint64_t base_seed = 0;
  LambdaPolicy lambda_policy;
  RlsConfig rls;
  std::size_t rls_folds = 5;
  TrainConfig train;
  /// When false the wall_time column is written as 0 so reports are
  /// byte-identical across runs.
  bool record_wall_time = true;
};

/// Budget of poisoning points for a fraction of the training size.
std::size_t poison_budget(double fraction, std::size_t n_train);

ExperimentConfig config_from_json(const std::string& text);
/// Fully resolved configuration, every default expanded.
std::string config_to_json(const ExperimentConfig& config);

struct ReportRow {
  std::string dataset;
  std::string attack;
  std::string defence;
  double alpha = 0.0;
  double fraction = 0.0;
  double mean_test_error = 0.0;
  double std_test_error = 0.0;
  double mean_removed_poison_fraction = 0.0;
  double mean_removed_genuine_fraction = 0.0;
  double wall_time = 0.0;
};

/// One trained-and-scored pipeline run.
struct RunRecord {
  std::size_t repetition = 0;
  std::string attack;
  std::string defence;
  double alpha = 0.0;
  double fraction = 0.0;
  double test_error = 0.0;
  std::size_t n_training = 0;  // size of the poisoned training set
  std::size_t n_poison = 0;
  std::size_t removed_poison = 0;
  std::size_t removed_genuine = 0;
  std::size_t kept = 0;
  double seconds = 0.0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::vector<RunRecord> runs;
  std::vector<std::string> failures;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Training set seen by the learner, with poison membership per row.
struct PoisonedTrainingSet {
  LabeledDataset data;
  std::vector<bool> is_poison;
  std::size_t poison_count() const;
};

struct DefenceOutcome {
  LinearClassifier model;
  std::vector<std::size_t> removed;
  std::size_t removed_poison = 0;
  std::size_t removed_genuine = 0;
  std::size_t kept = 0;
};

/// Filter (or robust-train) the poisoned set and fit the final classifier.
/// `rls_symmetric` restricts the noise-rate search to rho_pos == rho_neg.
DefenceOutcome defend_and_train(const PoisonedTrainingSet& poisoned, const LabeledDataset& trusted,
                                const DefenceSettings& defence, std::uint64_t detector_seed,
                                const TrainConfig& train, const RlsConfig& rls,
                                std::size_t rls_folds, bool rls_symmetric);

LabeledDataset load_dataset(const DatasetConfig& config);

/// Report columns, in order.
extern const char* const kReportHeader;

void emit_report(const ExperimentReport& report, const std::filesystem::path& path);
void write_report(std::ostream& out, const ExperimentReport& report);
ExperimentReport load_report(const std::filesystem::path& path);

// --- single-point trajectory demo --------------------------------------

struct DemoConfig {
  Vector mean_pos = (Vector(2) << 1.5, 0.0).finished();
  Vector mean_neg = (Vector(2) << -1.5, 0.0).finished();
  double cov_scale = 0.6;
  std::size_t train_per_class = 25;
  std::size_t val_per_class = 5000;
  double lambda = 0.01;
  double box = 4.0;
  int max_outer_iters = 300;
  double epsilon = 1e-9;
  double gs_tol = 1e-3;
  std::uint64_t seed = 7;
};

struct DemoResult {
  LabeledDataset train;
  LabeledDataset val;
  AttackResult attack;
  double clean_val_mse = 0.0;
  double poisoned_val_mse = 0.0;
  /// (x1, x2, O_A) after initialisation and after every outer iteration.
  std::vector<std::array<double, 3>> trajectory;
};

DemoResult run_trajectory_demo(const DemoConfig& config);

/// CSV with header iter,x1,x2,objective.
void write_demo_trace(std::ostream& out, const DemoResult& result);
/// {"clean": {"w": [...], "b": ...}, "poisoned": {...}, "clean_val_mse", "poisoned_val_mse"}
std::string demo_boundaries_json(const DemoResult& result);

}  // namespace poisonlab
