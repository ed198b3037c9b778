#include "poisonlab/oracles/lasso.hpp"

#include <Eigen/QR>
#include <vector>

namespace poisonlab::oracles {

double objective_two_pass(const LabeledDataset& data, const LinearClassifier& model,
                          double lambda) {
  const Eigen::Index n = data.size();
  std::vector<double> residual(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double f = model.b;
    for (Eigen::Index j = 0; j < data.dim(); ++j) f += model.w(j) * data.features()(i, j);
    residual[static_cast<std::size_t>(i)] = f - data.label(i);
  }
  double sq = 0.0;
  for (double r : residual) sq += r * r;
  double l1 = 0.0;
  for (Eigen::Index j = 0; j < model.w.size(); ++j) l1 += std::abs(model.w(j));
  return sq / (2.0 * static_cast<double>(n)) + lambda * l1;
}

LinearClassifier normal_equations(const LabeledDataset& data) {
  Matrix a(data.size(), data.dim() + 1);
  a << data.features(), Vector::Ones(data.size());
  const Vector sol = a.colPivHouseholderQr().solve(data.labels());
  return {sol.head(data.dim()), sol(data.dim())};
}

Vector finite_difference_gradient(const LabeledDataset& train, const LabeledDataset& val,
                                  const PoisonSet& poison, std::size_t j, double lambda,
                                  double h, const TrainConfig& base) {
  TrainConfig config = base;
  config.lambda = lambda;
  auto cost_at = [&](const Vector& x) {
    PoisonSet moved = poison;
    moved.points.row(static_cast<Eigen::Index>(j)) = x.transpose();
    const LinearClassifier m = train_lasso(concat(train, moved.as_dataset()), config);
    return objective_two_pass(val, m, 0.0);
  };
  const Vector x0 = poison.points.row(static_cast<Eigen::Index>(j)).transpose();
  Vector grad(x0.size());
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    Vector plus = x0, minus = x0;
    plus(i) += h;
    minus(i) -= h;
    grad(i) = (cost_at(plus) - cost_at(minus)) / (2.0 * h);
  }
  return grad;
}

Vector explicit_inverse_gradient(const LabeledDataset& train_plus_poison,
                                 const LabeledDataset& val, const LinearClassifier& model,
                                 const Eigen::RowVectorXd& x_p, double y_p) {
  const Eigen::Index d = train_plus_poison.dim();
  Matrix k = Matrix::Zero(d + 1, d + 1);
  for (Eigen::Index i = 0; i < train_plus_poison.size(); ++i) {
    Vector z(d + 1);
    z << train_plus_poison.row(i).transpose(), 1.0;
    k += z * z.transpose();
  }
  const double residual = x_p.dot(model.w.transpose()) + model.b - y_p;
  Matrix rhs(d + 1, d);
  rhs.topRows(d) = x_p.transpose() * model.w.transpose() + residual * Matrix::Identity(d, d);
  rhs.row(d) = model.w.transpose();
  const Matrix jac = -k.inverse() * rhs;

  Vector grad = Vector::Zero(d);
  for (Eigen::Index v = 0; v < val.size(); ++v) {
    const double r = model.decision(val.row(v)) - val.label(v);
    Vector z(d + 1);
    z << val.row(v).transpose(), 1.0;
    grad += r * jac.transpose() * z;
  }
  return grad / static_cast<double>(val.size());
}

}  // namespace poisonlab::oracles
