#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "poisonlab/dataset.hpp"
#include "poisonlab/linear_model.hpp"

namespace poisonlab {

/// The attacker's q points. Labels are fixed at initialisation; only the
/// features move.
struct PoisonSet {
  Matrix points;
  Vector labels;

  Eigen::Index size() const noexcept { return points.rows(); }
  LabeledDataset as_dataset() const { return LabeledDataset(points, labels); }
};

enum class TargetLabels {
  alternate,     // +1, -1, +1, ...
  all_positive,
  all_negative,
};

enum class SingularPolicy {
  raise,           // throw DegenerateHessianError
  pseudo_inverse,  // minimum-norm solve
};

/// How the gradient is scaled before the feasible direction is formed.
enum class StepScale {
  gradient,      // raw dO_A/dx_p
  box_diagonal,  // rescaled to the length of the box diagonal
};

struct GradientOptions {
  /// Regularisation of the inner problem. For lambda > 0 only the support
  /// of w enters the implicit system.
  double lambda = 0.0;
  /// Reciprocal-condition floor for the KKT matrix.
  double min_rcond = 1e-12;
  SingularPolicy singular = SingularPolicy::raise;
};

struct AttackConfig {
  std::size_t q = 1;
  double epsilon = 1e-6;
  Vector box_low;
  Vector box_high;
  int max_outer_iters = 100;
  double gs_tol = 1e-3;
  bool round_binary = false;
  StepScale step_scale = StepScale::box_diagonal;
  TargetLabels targets = TargetLabels::alternate;
  SingularPolicy singular = SingularPolicy::raise;
  TrainConfig train;  // lambda is taken from the attack call
};

/// Scatter statistics of the poisoned training set used by the implicit
/// gradient: sigma = sum x_i x_i^T, mu = sum x_i, restricted to `active`.
struct GradientWorkspace {
  Matrix sigma;
  Vector mu;
  double n = 0.0;
  std::vector<Eigen::Index> active;

  static GradientWorkspace build(const LabeledDataset& train_plus_poison,
                                 const LinearClassifier& model, double lambda);

  /// The symmetric (m+1)x(m+1) matrix [sigma mu; mu^T n].
  Matrix kkt_matrix() const;
};

/// M = x_p w^T + (x_p.w + b - y_p) I_d, restricted to the active rows.
Matrix poison_jacobian_rhs(const GradientWorkspace& ws, const LinearClassifier& model,
                           const Eigen::Ref<const Eigen::RowVectorXd>& x_p, double y_p);

/// [dw/dx_p; db/dx_p] over the active rows, (m+1) x d, by a linear solve.
Matrix implicit_jacobian(const GradientWorkspace& ws, const LinearClassifier& model,
                         const Eigen::Ref<const Eigen::RowVectorXd>& x_p, double y_p,
                         const GradientOptions& options = {});

/// dO_A/dx_p for poison point `j`, where O_A = mse_half(val, model) and
/// `model` minimises the lasso on `train_plus_poison`.
Vector poison_gradient(std::size_t j, const PoisonSet& poison, const LinearClassifier& model,
                       const LabeledDataset& train_plus_poison, const LabeledDataset& val,
                       const GradientOptions& options = {});

Vector project_box(const Eigen::Ref<const Vector>& x, const AttackConfig& config);

/// argmax of phi over [0, 1] by golden-section search. The result never
/// scores below phi(0); returns 0 when nothing beats it.
struct LineSearchResult {
  double eta = 0.0;
  double value = 0.0;
  int evaluations = 0;
};
LineSearchResult golden_section_maximize(const std::function<double(double)>& phi,
                                         double phi_at_zero, double tol);

/// Step along `direction` for poison point j: phi(eta) is the validation
/// cost after retraining with x_pj + eta * direction.
double golden_section_step(const LabeledDataset& train, const LabeledDataset& val,
                           const PoisonSet& poison, std::size_t j, const Vector& direction,
                           double gs_tol, const TrainConfig& train_config);

/// Copies of the q training points with the largest squared residual once
/// relabelled with their target label (opposite to their own).
PoisonSet choose_initial_points(const LabeledDataset& train, std::size_t q, double lambda,
                                TargetLabels targets = TargetLabels::alternate,
                                const TrainConfig& train_config = {});

struct TraceEntry {
  int outer_iter = 0;
  long point_index = -1;  // -1 marks the initial state / end-of-sweep rows
  double eta = 0.0;
  double objective = 0.0;
  Vector point;  // the updated point (empty for the initial row)
};

struct AttackResult {
  PoisonSet initial_poison;  // after projection onto the box
  PoisonSet poison;
  LinearClassifier model;           // trained on train + final poison
  LinearClassifier clean_model;     // trained on train only
  std::vector<double> outer_objectives;  // O_A at t = 0, 1, ...
  std::vector<TraceEntry> trace;
  int outer_iterations = 0;
  bool converged = false;
};

AttackResult run_optimal_attack(const LabeledDataset& train, const LabeledDataset& val,
                                const AttackConfig& config, double lambda);

/// Same as above, starting from a given poison set.
AttackResult run_optimal_attack(const LabeledDataset& train, const LabeledDataset& val,
                                const AttackConfig& config, double lambda, PoisonSet initial);

/// CSV with header outer_iter,point_index,eta,objective.
void write_attack_trace(std::ostream& out, const std::vector<TraceEntry>& trace);

}  // namespace poisonlab
