#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "poisonlab/dataset.hpp"

namespace poisonlab {

/// h(x) = sign(w.x + b), with sign(0) = +1.
struct LinearClassifier {
  Vector w;
  double b = 0.0;

  static LinearClassifier zeros(Eigen::Index d) { return {Vector::Zero(d), 0.0}; }

  Eigen::Index dim() const noexcept { return w.size(); }
  double decision(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return x.dot(w.transpose()) + b;
  }
};

enum class StepRule {
  /// 1/L with L = ||[X 1]||_F^2 / n, an upper bound on the largest
  /// eigenvalue of the MSE Hessian.
  inverse_frobenius,
};

enum class LassoSolver {
  /// Cyclic exact coordinate minimisation, bias updated after each sweep.
  coordinate_descent,
  /// Soft-thresholded gradient steps of size 1/L (see StepRule).
  proximal_gradient,
};

struct TrainConfig {
  double lambda = 0.0;
  /// Sweeps (coordinate descent) or steps (proximal gradient).
  int max_iters = 50000;
  /// Bound on the KKT violation of the returned model.
  double tol = 1e-8;
  LassoSolver solver = LassoSolver::coordinate_descent;
  StepRule step_rule = StepRule::inverse_frobenius;
  /// Try the exact active-set solve every this many iterations.
  int polish_every = 10;
};

struct TrainResult {
  LinearClassifier model;
  int iterations = 0;
  double kkt_violation = 0.0;
  /// Objective after initialisation and after every accepted update.
  std::vector<double> objective_trace;
};

/// (1/(2n)) sum (w.x_i + b - y_i)^2 + lambda ||w||_1
double objective(const LabeledDataset& data, const LinearClassifier& model, double lambda);

/// objective with lambda = 0; the attacker's validation cost.
double mse_half(const LabeledDataset& data, const LinearClassifier& model);

/// Largest KKT violation of the lasso optimality conditions at `model`:
/// |dMSE/db|, |dMSE/dw_j + lambda sign(w_j)| on the support and
/// max(0, |dMSE/dw_j| - lambda) off it.
double kkt_violation(const LabeledDataset& data, const LinearClassifier& model, double lambda);

/// Smallest lambda for which w = 0 is optimal (bias unregularised).
double lambda_max(const LabeledDataset& data);

/// Proximal gradient lasso with an exact active-set polish. Throws
/// TrainingError if the KKT violation is still above tol after max_iters.
TrainResult solve_lasso(const LabeledDataset& data, const TrainConfig& config,
                        const LinearClassifier& init, bool record_trace = false);

LinearClassifier train_lasso(const LabeledDataset& data, const TrainConfig& config);
LinearClassifier train_lasso(const LabeledDataset& data, const TrainConfig& config,
                             const LinearClassifier& init);

int predict(const LinearClassifier& model, const Eigen::Ref<const Eigen::RowVectorXd>& x);

double test_error(const LabeledDataset& data, const LinearClassifier& model);

/// Contiguous folds; the first n % folds folds get one extra example.
std::vector<std::pair<std::size_t, std::size_t>> fold_ranges(std::size_t n, std::size_t folds);

/// (train, validation) split for fold `f` of `fold_ranges`.
std::pair<LabeledDataset, LabeledDataset> fold_split(
    const LabeledDataset& data, const std::vector<std::pair<std::size_t, std::size_t>>& ranges,
    std::size_t f);

/// Grid lambda with the lowest mean fold classification error; ties go to
/// the larger lambda. Values whose fit does not converge on every fold are
/// left out; TrainingError if none converges.
double cv_lambda(const LabeledDataset& data, std::span<const double> grid, std::size_t folds,
                 const TrainConfig& base = {});

/// lambda_max(data) * {1e-4, 1e-3, 1e-2, 1e-1, 1}.
std::vector<double> default_lambda_grid(const LabeledDataset& data);

/// {"w": [...], "b": ..., "lambda": ...}
std::string model_to_json(const LinearClassifier& model, double lambda);
LinearClassifier model_from_json(const std::string& text, double* lambda = nullptr);

}  // namespace poisonlab
