#include "poisonlab/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "json.hpp"

#include "poisonlab/error.hpp"

namespace poisonlab {

namespace {

void require_nonempty(const LabeledDataset& data, const char* what) {
  if (data.is_empty()) throw InvalidArgument(std::string(what) + ": empty dataset");
}

void require_dims(const LabeledDataset& data, const LinearClassifier& model) {
  if (model.dim() != data.dim())
    throw InvalidArgument("model dimension " + std::to_string(model.dim()) +
                          " does not match data dimension " + std::to_string(data.dim()));
}

Vector residuals(const LabeledDataset& data, const Vector& w, double b) {
  Vector r = data.features() * w;
  r.array() += b;
  r -= data.labels();
  return r;
}

double objective_from(const Vector& r, const Vector& w, double lambda) {
  return r.squaredNorm() / (2.0 * static_cast<double>(r.size())) + lambda * w.lpNorm<1>();
}

double violation_from(const Vector& grad_w, double grad_b, const Vector& w, double lambda) {
  double worst = std::abs(grad_b);
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const double v = w(j) != 0.0 ? std::abs(grad_w(j) + lambda * (w(j) > 0.0 ? 1.0 : -1.0))
                                 : std::max(0.0, std::abs(grad_w(j)) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

constexpr int kMaxPolishAttempts = 16;
constexpr int kMaxPolishGap = 64;  // in units of polish_every
// Coordinate updates maintain the residual incrementally; recompute it
// this often to stop rounding drift.
constexpr int kResidualRefresh = 50;
constexpr int kRefinementPasses = 2;

struct Candidate {
  Vector w;
  double b = 0.0;
};

// Stationary point of the lasso restricted to `active` with the signs of
// `signs` held fixed (at lambda = 0 every coordinate is active). Returns
// false when the system cannot be solved.
bool active_set_solve(const LabeledDataset& data, const std::vector<Eigen::Index>& active,
                      const Vector& signs, double lambda, Candidate& out) {
  const auto n = static_cast<double>(data.size());
  const auto m = static_cast<Eigen::Index>(active.size());
  const Matrix xa = data.features()(Eigen::all, active);
  const Vector& y = data.labels();

  Matrix gram(m + 1, m + 1);
  gram.topLeftCorner(m, m).noalias() = xa.transpose() * xa;
  const Vector col_sums = xa.colwise().sum().transpose();
  gram.topRightCorner(m, 1) = col_sums;
  gram.bottomLeftCorner(1, m) = col_sums.transpose();
  gram(m, m) = n;

  Vector rhs(m + 1);
  rhs.head(m).noalias() = xa.transpose() * y;
  for (Eigen::Index a = 0; a < m; ++a) rhs(a) -= n * lambda * signs(active[static_cast<std::size_t>(a)]);
  rhs(m) = y.sum();

  Eigen::LDLT<Matrix> ldlt(gram);
  const bool definite = ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-13;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  if (!definite) cod.compute(gram);
  auto solve = [&](const Vector& v) -> Vector {
    if (definite) return ldlt.solve(v);
    return cod.solve(v);
  };

  // Iterative refinement, with the residual formed from the design itself
  // rather than the squared system.
  Vector theta = solve(rhs);
  for (int pass = 0; pass < kRefinementPasses && theta.allFinite(); ++pass) {
    Vector fit = xa * theta.head(m);
    fit.array() += theta(m) - y.array();
    Vector defect(m + 1);
    defect.head(m).noalias() = -(xa.transpose() * fit);
    for (Eigen::Index a = 0; a < m; ++a) defect(a) -= n * lambda * signs(active[static_cast<std::size_t>(a)]);
    defect(m) = -fit.sum();
    theta += solve(defect);
  }
  if (!theta.allFinite()) return false;

  out.w = Vector::Zero(data.dim());
  for (Eigen::Index a = 0; a < m; ++a) out.w(active[static_cast<std::size_t>(a)]) = theta(a);
  out.b = theta(m);
  return true;
}

struct State {
  Vector w;
  double b = 0.0;
  Vector r;
  double obj = 0.0;
};

// Solve on the current support, shrinking it by coordinates whose sign
// flips and growing it by those whose optimality condition fails. On success
// `state` holds a model within `tol` of optimal.
bool polish(const LabeledDataset& data, double lambda, double tol, State& state,
            double& violation) {
  const Matrix& x = data.features();
  const auto n = static_cast<double>(data.size());
  std::vector<Eigen::Index> active;
  Vector signs = Vector::Zero(data.dim());
  for (Eigen::Index j = 0; j < data.dim(); ++j) {
    if (lambda == 0.0 || state.w(j) != 0.0) {
      active.push_back(j);
      signs(j) = state.w(j) > 0.0 ? 1.0 : -1.0;
    }
  }
  for (int attempt = 0; attempt < kMaxPolishAttempts; ++attempt) {
    Candidate c;
    if (!active_set_solve(data, active, signs, lambda, c)) return false;
    if (lambda > 0.0) {
      // Coordinates whose sign flips leave the support and the solve is redone.
      std::vector<Eigen::Index> kept;
      for (auto j : active) {
        if (c.w(j) * signs(j) > 0.0)
          kept.push_back(j);
        else
          signs(j) = 0.0;
      }
      if (kept.size() != active.size()) {
        active = std::move(kept);
        continue;
      }
    }
    Vector rc = residuals(data, c.w, c.b);
    const double obj_c = objective_from(rc, c.w, lambda);
    const Vector grad_c = x.transpose() * rc / n;
    const double viol_c = violation_from(grad_c, rc.sum() / n, c.w, lambda);
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, state.obj);
    if (viol_c <= tol && obj_c <= state.obj + slack) {
      state.w = std::move(c.w);
      state.b = c.b;
      state.r = std::move(rc);
      state.obj = std::min(state.obj, obj_c);
      violation = viol_c;
      return true;
    }
    if (lambda == 0.0) return false;
    bool grew = false;
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      if (signs(j) == 0.0 && std::abs(grad_c(j)) > lambda + tol) {
        active.push_back(j);
        signs(j) = grad_c(j) > 0.0 ? -1.0 : 1.0;
        grew = true;
      }
    }
    if (!grew) return false;
    std::sort(active.begin(), active.end());
  }
  return false;
}

// One proximal gradient step with step 1/L.
void proximal_step(const LabeledDataset& data, double lambda, double step, State& s) {
  const auto n = static_cast<double>(data.size());
  const Vector grad_w = data.features().transpose() * s.r / n;
  const double grad_b = s.r.sum() / n;
  for (Eigen::Index j = 0; j < s.w.size(); ++j)
    s.w(j) = soft_threshold(s.w(j) - step * grad_w(j), step * lambda);
  s.b -= step * grad_b;
  s.r = residuals(data, s.w, s.b);
  s.obj = objective_from(s.r, s.w, lambda);
}

// One cyclic sweep of exact coordinate minimisation, bias last.
void coordinate_sweep(const LabeledDataset& data, double lambda, const Vector& col_sq, State& s) {
  const Matrix& x = data.features();
  const auto n = static_cast<double>(data.size());
  for (Eigen::Index j = 0; j < s.w.size(); ++j) {
    if (col_sq(j) == 0.0) continue;
    const double g = x.col(j).dot(s.r) / n;
    const double updated = soft_threshold(s.w(j) - g / col_sq(j), lambda / col_sq(j));
    if (updated != s.w(j)) {
      s.r.noalias() += (updated - s.w(j)) * x.col(j);
      s.w(j) = updated;
    }
  }
  const double shift = s.r.mean();
  s.b -= shift;
  s.r.array() -= shift;
  s.obj = objective_from(s.r, s.w, lambda);
}

}  // namespace

double objective(const LabeledDataset& data, const LinearClassifier& model, double lambda) {
  require_nonempty(data, "objective");
  require_dims(data, model);
  return objective_from(residuals(data, model.w, model.b), model.w, lambda);
}

double mse_half(const LabeledDataset& data, const LinearClassifier& model) {
  return objective(data, model, 0.0);
}

double kkt_violation(const LabeledDataset& data, const LinearClassifier& model, double lambda) {
  require_nonempty(data, "kkt_violation");
  require_dims(data, model);
  const auto n = static_cast<double>(data.size());
  const Vector r = residuals(data, model.w, model.b);
  const Vector grad_w = data.features().transpose() * r / n;
  return violation_from(grad_w, r.sum() / n, model.w, lambda);
}

double lambda_max(const LabeledDataset& data) {
  require_nonempty(data, "lambda_max");
  const auto n = static_cast<double>(data.size());
  const Vector centered = data.labels().array() - data.labels().mean();
  return (data.features().transpose() * centered).cwiseAbs().maxCoeff() / n;
}

TrainResult solve_lasso(const LabeledDataset& data, const TrainConfig& config,
                        const LinearClassifier& init, bool record_trace) {
  require_nonempty(data, "train_lasso");
  require_dims(data, init);
  if (!(config.lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
  if (!(config.tol > 0.0)) throw InvalidArgument("tol must be positive");

  const Matrix& x = data.features();
  const auto n = static_cast<double>(data.size());
  const double lambda = config.lambda;
  const double step = n / (x.squaredNorm() + n);
  const Vector col_sq = x.colwise().squaredNorm().transpose() / n;
  const int polish_every = std::max(1, config.polish_every);

  TrainResult result;
  State s{init.w, init.b, residuals(data, init.w, init.b), 0.0};
  s.obj = objective_from(s.r, s.w, lambda);
  if (record_trace) result.objective_trace.push_back(s.obj);

  double violation = std::numeric_limits<double>::infinity();
  Eigen::VectorXi failed_pattern;
  int gap = polish_every;
  int next_polish = 0;
  for (int it = 0;; ++it) {
    if (it > 0 && it % kResidualRefresh == 0) s.r = residuals(data, s.w, s.b);
    violation = violation_from(x.transpose() * s.r / n, s.r.sum() / n, s.w, lambda);
    if (violation <= config.tol) break;
    if (it >= config.max_iters) {
      char detail[160];
      std::snprintf(detail, sizeof detail, " iterations (KKT violation %.3g, lambda %.3g, n %td, d %td)",
                    violation, lambda, data.size(), data.dim());
      throw TrainingError("lasso did not converge in " + std::to_string(config.max_iters) + detail,
                          violation);
    }
    if (it == next_polish) {
      // A polish that failed on this sign pattern fails again; repeated
      // failures also back off geometrically.
      Eigen::VectorXi pattern = s.w.unaryExpr([](double v) { return (v > 0.0) - (v < 0.0); });
      if (pattern.size() != failed_pattern.size() || pattern != failed_pattern) {
        if (polish(data, lambda, config.tol, s, violation)) {
          if (record_trace) result.objective_trace.push_back(s.obj);
          break;
        }
        failed_pattern = std::move(pattern);
        gap = std::min(2 * gap, kMaxPolishGap * polish_every);
      }
      next_polish = it + gap;
    }
    if (config.solver == LassoSolver::coordinate_descent)
      coordinate_sweep(data, lambda, col_sq, s);
    else
      proximal_step(data, lambda, step, s);
    if (record_trace) result.objective_trace.push_back(s.obj);
    result.iterations = it + 1;
  }

  result.model = {std::move(s.w), s.b};
  result.kkt_violation = violation;
  return result;
}

LinearClassifier train_lasso(const LabeledDataset& data, const TrainConfig& config) {
  return solve_lasso(data, config, LinearClassifier::zeros(data.dim())).model;
}

LinearClassifier train_lasso(const LabeledDataset& data, const TrainConfig& config,
                             const LinearClassifier& init) {
  return solve_lasso(data, config, init).model;
}

int predict(const LinearClassifier& model, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (x.size() != model.dim()) throw InvalidArgument("predict: dimension mismatch");
  return model.decision(x) >= 0.0 ? 1 : -1;
}

double test_error(const LabeledDataset& data, const LinearClassifier& model) {
  require_nonempty(data, "test_error");
  require_dims(data, model);
  Eigen::Index wrong = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i)
    if (predict(model, data.row(i)) != static_cast<int>(data.label(i))) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

std::vector<std::pair<std::size_t, std::size_t>> fold_ranges(std::size_t n, std::size_t folds) {
  if (folds < 2) throw InvalidArgument("need at least 2 folds");
  if (n < folds) throw InvalidArgument("fold size zero: " + std::to_string(n) +
                                       " examples for " + std::to_string(folds) + " folds");
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::size_t begin = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t size = n / folds + (f < n % folds ? 1 : 0);
    ranges.emplace_back(begin, begin + size);
    begin += size;
  }
  return ranges;
}

std::pair<LabeledDataset, LabeledDataset> fold_split(
    const LabeledDataset& data, const std::vector<std::pair<std::size_t, std::size_t>>& ranges,
    std::size_t f) {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  for (std::size_t i = 0; i < static_cast<std::size_t>(data.size()); ++i) {
    if (i >= ranges[f].first && i < ranges[f].second)
      val_idx.push_back(i);
    else
      train_idx.push_back(i);
  }
  return {data.subset(train_idx), data.subset(val_idx)};
}

double cv_lambda(const LabeledDataset& data, std::span<const double> grid, std::size_t folds,
                 const TrainConfig& base) {
  if (grid.empty()) throw InvalidArgument("cv_lambda: empty grid");
  const auto ranges = fold_ranges(static_cast<std::size_t>(data.size()), folds);
  if (grid.size() == 1) return grid.front();

  // Each fold walks the grid from strong to weak regularisation, warm
  // starting from the previous solution.
  std::vector<std::size_t> order(grid.size());
  for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });
  // A value whose fit fails to converge on some fold drops out, as do the
  // weaker ones after it on that fold.
  std::vector<double> total(grid.size(), 0.0);
  std::vector<bool> failed(grid.size(), false);
  std::string last_failure;
  for (std::size_t f = 0; f < folds; ++f) {
    const auto [train, val] = fold_split(data, ranges, f);
    LinearClassifier warm = LinearClassifier::zeros(data.dim());
    bool broken = false;
    for (auto g : order) {
      if (broken || failed[g]) {
        failed[g] = true;
        continue;
      }
      TrainConfig config = base;
      config.lambda = grid[g];
      try {
        warm = train_lasso(train, config, warm);
      } catch (const TrainingError& e) {
        failed[g] = broken = true;
        last_failure = e.what();
        continue;
      }
      total[g] += test_error(val, warm);
    }
  }
  if (std::all_of(failed.begin(), failed.end(), [](bool b) { return b; }))
    throw TrainingError("cv_lambda: no grid value converged; last error: " + last_failure, 0.0);

  double best_lambda = grid.front();
  double best_error = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (failed[g]) continue;
    const double mean = total[g] / static_cast<double>(folds);
    if (mean < best_error || (mean == best_error && grid[g] > best_lambda)) {
      best_error = mean;
      best_lambda = grid[g];
    }
  }
  return best_lambda;
}

std::vector<double> default_lambda_grid(const LabeledDataset& data) {
  const double top = lambda_max(data);
  return {1e-4 * top, 1e-3 * top, 1e-2 * top, 1e-1 * top, top};
}

std::string model_to_json(const LinearClassifier& model, double lambda) {
  nlohmann::json j;
  j["w"] = std::vector<double>(model.w.data(), model.w.data() + model.w.size());
  j["b"] = model.b;
  j["lambda"] = lambda;
  return j.dump();
}

LinearClassifier model_from_json(const std::string& text, double* lambda) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto w = j.at("w").get<std::vector<double>>();
    LinearClassifier model{Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())),
                           j.at("b").get<double>()};
    if (lambda) *lambda = j.value("lambda", 0.0);
    if (!model.w.allFinite() || !std::isfinite(model.b))
      throw InvalidArgument("model JSON has non-finite entries");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("model JSON: ") + e.what());
  }
}

}  // namespace poisonlab
