#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "poisonlab/dataset.hpp"
#include "poisonlab/linear_model.hpp"
#include "poisonlab/outlier.hpp"

namespace poisonlab {

/// Nearest-rank alpha-percentile: sorted[ceil(alpha * n) - 1].
double ecdf_threshold(std::span<const double> scores, double alpha);

/// Per-class detectors with their ECDF thresholds.
struct DefenceModel {
  OutlierScorer scorer_pos;
  OutlierScorer scorer_neg;
  double t_pos = 0.0;
  double t_neg = 0.0;
  double alpha = 1.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

DefenceModel fit_defence(const LabeledDataset& trusted, const ScorerConfig& detector,
                         double alpha);

struct FilterResult {
  LabeledDataset kept;
  std::vector<std::size_t> removed;  // indices into the untrusted set
};

/// Drops x when the detector of its label scores it above that label's
/// threshold. Row i is scored with query id i.
FilterResult filter(const DefenceModel& model, const LabeledDataset& untrusted);

/// {"detector_kind", "alpha", "t_pos", "t_neg", "class_sizes": {"pos", "neg"}}
std::string defence_summary_json(const DefenceModel& model);

// --- learning with noisy labels ----------------------------------------

struct NoiseRates {
  double rho_pos = 0.0;
  double rho_neg = 0.0;
  friend bool operator==(const NoiseRates&, const NoiseRates&) = default;
};

struct RlsConfig {
  NoiseRates rates;
  double learning_rate = 0.1;
  int iters = 1000;
  std::vector<double> noise_grid = {0.0, 0.05, 0.1, 0.15, 0.2};
  /// Search rho_pos == rho_neg only.
  bool symmetric = false;
};

/// Squared loss (w.x + b - y)^2.
double squared_loss(const LinearClassifier& model, const RowRef& x, double y);

/// ((1 - rho_{-y}) l(y) - rho_y l(-y)) / (1 - rho_pos - rho_neg)
double robust_loss(const LinearClassifier& model, const RowRef& x, double y,
                   const NoiseRates& rates);

/// Fixed-step full-batch gradient descent on the mean robust loss from
/// (w, b) = 0.
LinearClassifier train_rls(const LabeledDataset& data, const RlsConfig& config);

/// Plain gradient descent on the mean squared loss, same schedule.
LinearClassifier train_least_squares_gd(const LabeledDataset& data, double learning_rate,
                                        int iters);

/// Candidate pairs in evaluation order: sorted by rho_pos + rho_neg, then
/// rho_pos.
std::vector<NoiseRates> noise_candidates(const RlsConfig& config);

/// Pair with the lowest mean fold error of train_rls; ties keep the
/// earlier (smaller) candidate.
NoiseRates cv_noise_rates(const LabeledDataset& data, const RlsConfig& config,
                          std::size_t folds = 5);

}  // namespace poisonlab
