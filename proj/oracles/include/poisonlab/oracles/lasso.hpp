#pragma once

#include "poisonlab/attack_optimal.hpp"
#include "poisonlab/linear_model.hpp"

namespace poisonlab::oracles {

/// Residuals first, then their squares summed in a second loop.
double objective_two_pass(const LabeledDataset& data, const LinearClassifier& model,
                          double lambda);

/// Unregularised least squares with a bias via QR on [X 1].
LinearClassifier normal_equations(const LabeledDataset& data);

/// Central differences of the validation cost, retraining the learner at
/// x_p +- h e_i for every coordinate.
Vector finite_difference_gradient(const LabeledDataset& train, const LabeledDataset& val,
                                  const PoisonSet& poison, std::size_t j, double lambda,
                                  double h = 1e-4, const TrainConfig& base = {});

/// The same implicit gradient with the KKT matrix inverted explicitly and
/// the scatter statistics rebuilt row by row (lambda = 0 only).
Vector explicit_inverse_gradient(const LabeledDataset& train_plus_poison,
                                 const LabeledDataset& val, const LinearClassifier& model,
                                 const Eigen::RowVectorXd& x_p, double y_p);

}  // namespace poisonlab::oracles
