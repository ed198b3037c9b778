#include "poisonlab/attack_optimal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "poisonlab/error.hpp"

namespace poisonlab {

GradientWorkspace GradientWorkspace::build(const LabeledDataset& train_plus_poison,
                                           const LinearClassifier& model, double lambda) {
  if (model.dim() != train_plus_poison.dim())
    throw InvalidArgument("gradient workspace: dimension mismatch");
  GradientWorkspace ws;
  for (Eigen::Index j = 0; j < model.dim(); ++j)
    if (lambda == 0.0 || model.w(j) != 0.0) ws.active.push_back(j);
  const Matrix xa = train_plus_poison.features()(Eigen::all, ws.active);
  ws.sigma.noalias() = xa.transpose() * xa;
  ws.mu = xa.colwise().sum().transpose();
  ws.n = static_cast<double>(train_plus_poison.size());
  return ws;
}

Matrix GradientWorkspace::kkt_matrix() const {
  const Eigen::Index m = sigma.rows();
  Matrix k(m + 1, m + 1);
  k.topLeftCorner(m, m) = sigma;
  k.topRightCorner(m, 1) = mu;
  k.bottomLeftCorner(1, m) = mu.transpose();
  k(m, m) = n;
  return k;
}

Matrix poison_jacobian_rhs(const GradientWorkspace& ws, const LinearClassifier& model,
                           const Eigen::Ref<const Eigen::RowVectorXd>& x_p, double y_p) {
  const auto m = static_cast<Eigen::Index>(ws.active.size());
  const Eigen::Index d = model.dim();
  const double r_p = model.decision(x_p) - y_p;
  Matrix rhs = Matrix::Zero(m + 1, d);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto j = ws.active[static_cast<std::size_t>(a)];
    rhs.row(a) = x_p(j) * model.w.transpose();
    rhs(a, j) += r_p;
  }
  rhs.row(m) = model.w.transpose();
  return rhs;
}

namespace {

// Solves K z = rhs honouring the singular policy.
Matrix solve_kkt(const Matrix& k, const Matrix& rhs, const GradientOptions& options) {
  Eigen::LDLT<Matrix> ldlt(k);
  const double rcond = ldlt.info() == Eigen::Success ? ldlt.rcond() : 0.0;
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() && rcond >= options.min_rcond)
    return ldlt.solve(rhs);
  if (options.singular == SingularPolicy::raise) {
    throw DegenerateHessianError(
        "KKT matrix of the inner problem is singular or ill-conditioned (rcond " +
            std::to_string(rcond) + "); the implicit gradient needs a full-rank Hessian",
        rcond);
  }
  return k.completeOrthogonalDecomposition().solve(rhs);
}

}  // namespace

Matrix implicit_jacobian(const GradientWorkspace& ws, const LinearClassifier& model,
                         const Eigen::Ref<const Eigen::RowVectorXd>& x_p, double y_p,
                         const GradientOptions& options) {
  const Matrix rhs = poison_jacobian_rhs(ws, model, x_p, y_p);
  return -solve_kkt(ws.kkt_matrix(), rhs, options);
}

Vector poison_gradient(std::size_t j, const PoisonSet& poison, const LinearClassifier& model,
                       const LabeledDataset& train_plus_poison, const LabeledDataset& val,
                       const GradientOptions& options) {
  if (static_cast<Eigen::Index>(j) >= poison.size())
    throw InvalidArgument("poison_gradient: point index out of range");
  if (val.is_empty()) throw InvalidArgument("poison_gradient: empty validation set");
  if (val.dim() != model.dim() || poison.points.cols() != model.dim())
    throw InvalidArgument("poison_gradient: dimension mismatch");

  const auto ws = GradientWorkspace::build(train_plus_poison, model, options.lambda);
  const auto m = static_cast<Eigen::Index>(ws.active.size());
  const auto x_p = poison.points.row(static_cast<Eigen::Index>(j));
  const double y_p = poison.labels(static_cast<Eigen::Index>(j));

  // Adjoint form: dO_A/dx_p = J^T g_val with J = -K^{-1} [M; w^T], so one
  // solve K v = g_val replaces the (m+1) x d Jacobian.
  Vector val_res = val.features() * model.w;
  val_res.array() += model.b;
  val_res -= val.labels();
  const auto n_val = static_cast<double>(val.size());
  Vector g_val(m + 1);
  g_val.head(m) = val.features()(Eigen::all, ws.active).transpose() * val_res / n_val;
  g_val(m) = val_res.sum() / n_val;

  const Vector v = solve_kkt(ws.kkt_matrix(), g_val, options);
  double xv = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) xv += x_p(ws.active[static_cast<std::size_t>(a)]) * v(a);
  const double r_p = model.decision(x_p) - y_p;

  Vector grad = -(xv + v(m)) * model.w;
  for (Eigen::Index a = 0; a < m; ++a) grad(ws.active[static_cast<std::size_t>(a)]) -= r_p * v(a);
  return grad;
}

Vector project_box(const Eigen::Ref<const Vector>& x, const AttackConfig& config) {
  if (config.box_low.size() != x.size() || config.box_high.size() != x.size())
    throw InvalidArgument("project_box: box dimension mismatch");
  return x.cwiseMax(config.box_low).cwiseMin(config.box_high);
}

LineSearchResult golden_section_maximize(const std::function<double(double)>& phi,
                                         double phi_at_zero, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  LineSearchResult best{0.0, phi_at_zero, 0};
  auto eval = [&](double eta) {
    const double value = phi(eta);
    ++best.evaluations;
    if (value > best.value) {
      best.value = value;
      best.eta = eta;
    }
    return value;
  };

  eval(1.0);
  double lo = 0.0;
  double hi = 1.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = eval(c);
  double fd = eval(d);
  while (hi - lo > tol) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = eval(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = eval(d);
    }
  }
  return best;
}

namespace {

// Training set with the poison rows appended; keeps the model of the
// current configuration so unchanged data is never retrained.
class PoisonedProblem {
public:
  PoisonedProblem(const LabeledDataset& train, const LabeledDataset& val, const PoisonSet& poison,
                  const TrainConfig& config)
      : val_(val), offset_(train.size()), config_(config),
        features_(train.size() + poison.size(), train.dim()),
        labels_(train.size() + poison.size()) {
    features_ << train.features(), poison.points;
    labels_ << train.labels(), poison.labels;
  }

  LabeledDataset dataset() const { return LabeledDataset(features_, labels_); }

  void set_point(std::size_t j, const Vector& x) {
    features_.row(offset_ + static_cast<Eigen::Index>(j)) = x.transpose();
  }

  std::pair<double, LinearClassifier> evaluate(const LinearClassifier& warm) const {
    LinearClassifier model = train_lasso(dataset(), config_, warm);
    return {mse_half(val_, model), std::move(model)};
  }

private:
  const LabeledDataset& val_;
  Eigen::Index offset_;
  TrainConfig config_;
  Matrix features_;
  Vector labels_;
};

void validate(const LabeledDataset& train, const LabeledDataset& val, const AttackConfig& config) {
  if (val.is_empty()) throw InvalidArgument("attack: empty validation set");
  if (val.dim() != train.dim()) throw InvalidArgument("attack: validation dimension mismatch");
  if (config.box_low.size() != train.dim() || config.box_high.size() != train.dim())
    throw InvalidArgument("attack: box dimension mismatch");
  if ((config.box_low.array() > config.box_high.array()).any())
    throw InvalidArgument("attack: box_low exceeds box_high");
  if (!(config.epsilon > 0.0)) throw InvalidArgument("attack: epsilon must be positive");
  if (!(config.gs_tol > 0.0)) throw InvalidArgument("attack: gs_tol must be positive");
}

}  // namespace

double golden_section_step(const LabeledDataset& train, const LabeledDataset& val,
                           const PoisonSet& poison, std::size_t j, const Vector& direction,
                           double gs_tol, const TrainConfig& train_config) {
  if (static_cast<Eigen::Index>(j) >= poison.size())
    throw InvalidArgument("golden_section_step: point index out of range");
  if (direction.isZero(0.0)) return 0.0;

  PoisonedProblem problem(train, val, poison, train_config);
  const auto [phi0, model0] = problem.evaluate(LinearClassifier::zeros(train.dim()));
  const Vector x0 = poison.points.row(static_cast<Eigen::Index>(j)).transpose();
  auto phi = [&, &model0 = model0](double eta) {
    problem.set_point(j, x0 + eta * direction);
    return problem.evaluate(model0).first;
  };
  return golden_section_maximize(phi, phi0, gs_tol).eta;
}

PoisonSet choose_initial_points(const LabeledDataset& train, std::size_t q, double lambda,
                                TargetLabels targets, const TrainConfig& train_config) {
  PoisonSet poison{Matrix(static_cast<Eigen::Index>(q), train.dim()),
                   Vector(static_cast<Eigen::Index>(q))};
  if (q == 0) return poison;

  for (std::size_t j = 0; j < q; ++j) {
    double target = 1.0;
    if (targets == TargetLabels::all_negative || (targets == TargetLabels::alternate && j % 2 == 1))
      target = -1.0;
    poison.labels(static_cast<Eigen::Index>(j)) = target;
  }

  TrainConfig config = train_config;
  config.lambda = lambda;
  const LinearClassifier clean = train_lasso(train, config);

  for (double target : {1.0, -1.0}) {
    std::vector<std::size_t> slots;
    for (std::size_t j = 0; j < q; ++j)
      if (poison.labels(static_cast<Eigen::Index>(j)) == target) slots.push_back(j);
    if (slots.empty()) continue;

    std::vector<std::size_t> candidates;
    std::vector<double> loss(static_cast<std::size_t>(train.size()), 0.0);
    for (Eigen::Index i = 0; i < train.size(); ++i) {
      if (train.label(i) != -target) continue;
      const double r = clean.decision(train.row(i)) - target;
      loss[static_cast<std::size_t>(i)] = r * r;
      candidates.push_back(static_cast<std::size_t>(i));
    }
    if (candidates.size() < slots.size())
      throw InvalidArgument("choose_initial_points: " + std::to_string(slots.size()) +
                            " poisoning points need opposite-label candidates but only " +
                            std::to_string(candidates.size()) + " exist");
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) { return loss[a] > loss[b]; });
    for (std::size_t s = 0; s < slots.size(); ++s)
      poison.points.row(static_cast<Eigen::Index>(slots[s])) =
          train.row(static_cast<Eigen::Index>(candidates[s]));
  }
  return poison;
}

AttackResult run_optimal_attack(const LabeledDataset& train, const LabeledDataset& val,
                                const AttackConfig& config, double lambda) {
  TrainConfig tc = config.train;
  tc.lambda = lambda;
  return run_optimal_attack(train, val, config, lambda,
                            choose_initial_points(train, config.q, lambda, config.targets, tc));
}

AttackResult run_optimal_attack(const LabeledDataset& train, const LabeledDataset& val,
                                const AttackConfig& config, double lambda, PoisonSet initial) {
  validate(train, val, config);
  if (initial.points.cols() != train.dim() || initial.points.rows() != initial.labels.size())
    throw InvalidArgument("attack: initial poison set has the wrong shape");

  TrainConfig tc = config.train;
  tc.lambda = lambda;
  const GradientOptions grad_options{lambda, GradientOptions{}.min_rcond, config.singular};

  AttackResult result;
  result.clean_model = train_lasso(train, tc);
  result.poison = std::move(initial);
  PoisonSet& poison = result.poison;
  const auto q = static_cast<std::size_t>(poison.size());

  for (std::size_t j = 0; j < q; ++j) {
    const auto row = static_cast<Eigen::Index>(j);
    poison.points.row(row) = project_box(poison.points.row(row).transpose(), config).transpose();
  }

  result.initial_poison = poison;

  PoisonedProblem problem(train, val, poison, tc);
  auto [objective_now, model] = problem.evaluate(result.clean_model);
  result.outer_objectives.push_back(objective_now);
  result.trace.push_back({0, -1, 0.0, objective_now, {}});

  if (q == 0) {
    result.model = model;
    result.converged = true;
    return result;
  }

  for (int t = 1; t <= config.max_outer_iters; ++t) {
    const double objective_before = objective_now;
    for (std::size_t j = 0; j < q; ++j) {
      const auto row = static_cast<Eigen::Index>(j);
      const LabeledDataset current = problem.dataset();
      const Vector grad = poison_gradient(j, poison, model, current, val, grad_options);
      const Vector x = poison.points.row(row).transpose();
      Vector step = grad;
      if (config.step_scale == StepScale::box_diagonal && grad.norm() > 0.0)
        step *= (config.box_high - config.box_low).norm() / grad.norm();
      const Vector direction = project_box(x + step, config) - x;

      double eta = 0.0;
      if (!direction.isZero(0.0)) {
        LinearClassifier best_model = model;
        double best_value = objective_now;
        auto moved = [&](double e) -> Vector {
          return (x + e * direction).cwiseMax(config.box_low).cwiseMin(config.box_high);
        };
        auto phi = [&](double e) {
          problem.set_point(j, moved(e));
          auto [value, trained] = problem.evaluate(model);
          if (value > best_value) {
            best_value = value;
            best_model = std::move(trained);
          }
          return value;
        };
        const auto step = golden_section_maximize(phi, objective_now, config.gs_tol);
        eta = step.eta;
        if (eta > 0.0) {
          poison.points.row(row) = moved(eta).transpose();
          model = std::move(best_model);
          objective_now = step.value;
        }
        problem.set_point(j, poison.points.row(row).transpose());
      }
      result.trace.push_back(
          {t, static_cast<long>(j), eta, objective_now, poison.points.row(row).transpose()});
    }
    result.outer_objectives.push_back(objective_now);
    result.outer_iterations = t;
    if (std::abs(objective_now - objective_before) < config.epsilon) {
      result.converged = true;
      break;
    }
  }

  if (config.round_binary) {
    poison.points = poison.points.array().round().cwiseMax(0.0).cwiseMin(1.0).matrix();
    PoisonedProblem rounded(train, val, poison, tc);
    model = rounded.evaluate(model).second;
  }
  result.model = std::move(model);
  return result;
}

void write_attack_trace(std::ostream& out, const std::vector<TraceEntry>& trace) {
  out << "outer_iter,point_index,eta,objective\n";
  const auto old_precision = out.precision(17);
  for (const auto& e : trace)
    out << e.outer_iter << ',' << e.point_index << ',' << e.eta << ',' << e.objective << '\n';
  out.precision(old_precision);
}

}  // namespace poisonlab
