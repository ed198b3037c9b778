#include <algorithm>
#include <cmath>
#include <limits>

#include "poisonlab/error.hpp"
#include "poisonlab/outlier.hpp"

namespace poisonlab {

namespace {

constexpr int kMaxSmoIterations = 10'000'000;
constexpr double kTau = 1e-12;

OneClassSvmSolution solve_on_gram(const Matrix& gram, double nu, double tol) {
  const Eigen::Index n = gram.rows();
  if (n < 1) throw InvalidArgument("ocsvm: empty trusted set");
  if (!(nu > 0.0 && nu <= 1.0)) throw InvalidArgument("ocsvm: nu must lie in (0, 1]");
  const double upper = 1.0 / (nu * static_cast<double>(n));

  // Feasible start: fill multipliers to the bound in order until they sum to 1.
  Vector alpha = Vector::Zero(n);
  double remaining = 1.0;
  for (Eigen::Index i = 0; i < n && remaining > 0.0; ++i) {
    alpha(i) = std::min(upper, remaining);
    remaining -= alpha(i);
  }
  Vector grad = gram * alpha;

  OneClassSvmSolution sol;
  int it = 0;
  for (; it < kMaxSmoIterations; ++it) {
    // Maximal violating pair: grow i (alpha_i < upper) with the smallest
    // gradient, shrink j (alpha_j > 0) with the largest.
    Eigen::Index i = -1;
    Eigen::Index j = -1;
    double g_min = std::numeric_limits<double>::infinity();
    double g_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (alpha(t) < upper && grad(t) < g_min) {
        g_min = grad(t);
        i = t;
      }
      if (alpha(t) > 0.0 && grad(t) > g_max) {
        g_max = grad(t);
        j = t;
      }
    }
    if (i < 0 || j < 0 || g_max - g_min < tol) break;

    const double curvature = std::max(gram(i, i) + gram(j, j) - 2.0 * gram(i, j), kTau);
    double delta = (grad(j) - grad(i)) / curvature;
    delta = std::min({delta, upper - alpha(i), alpha(j)});
    alpha(i) += delta;
    alpha(j) -= delta;
    if (upper - alpha(i) < 1e-15 * upper) alpha(i) = upper;
    if (alpha(j) < 1e-15 * upper) alpha(j) = 0.0;
    grad += delta * (gram.col(i) - gram.col(j));
  }

  // rho: mean gradient over free multipliers, else the middle of the
  // feasible interval [max over bound-at-upper, min over zero].
  double free_sum = 0.0;
  int free_count = 0;
  double lower_rho = -std::numeric_limits<double>::infinity();
  double upper_rho = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha(t) > 0.0 && alpha(t) < upper) {
      free_sum += grad(t);
      ++free_count;
    } else if (alpha(t) >= upper) {
      lower_rho = std::max(lower_rho, grad(t));
    } else {
      upper_rho = std::min(upper_rho, grad(t));
    }
  }
  if (free_count > 0)
    sol.rho = free_sum / free_count;
  else if (std::isinf(lower_rho))
    sol.rho = upper_rho;
  else if (std::isinf(upper_rho))
    sol.rho = lower_rho;
  else
    sol.rho = 0.5 * (lower_rho + upper_rho);

  sol.alpha = std::move(alpha);
  sol.nu = nu;
  sol.objective = 0.5 * sol.alpha.dot(gram * sol.alpha);
  sol.iterations = it;
  return sol;
}

Matrix drop_index(const Matrix& gram, Eigen::Index skip) {
  const Eigen::Index n = gram.rows();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index t = 0; t < n; ++t)
    if (t != skip) keep.push_back(t);
  return gram(keep, keep);
}

}  // namespace

OneClassSvmSolution solve_one_class_svm(const Matrix& points, double nu, double tol) {
  const Matrix gram = points * points.transpose();
  OneClassSvmSolution sol = solve_on_gram(gram, nu, tol);
  sol.w = points.transpose() * sol.alpha;
  return sol;
}

double select_nu_loo(const Matrix& reference, const std::vector<double>& nu_grid, double tol) {
  if (nu_grid.empty()) throw InvalidArgument("ocsvm: empty nu grid");
  if (nu_grid.size() == 1) return nu_grid.front();
  const Eigen::Index n = reference.rows();
  if (n < 2) return nu_grid.front();

  const Matrix gram = reference * reference.transpose();
  double best_nu = nu_grid.front();
  long best_count = -1;
  for (double nu : nu_grid) {
    long count = 0;
    for (Eigen::Index held = 0; held < n; ++held) {
      const auto sol = solve_on_gram(drop_index(gram, held), nu, tol);
      // w.x_held = sum_t alpha_t K(t, held) over the kept rows.
      double wx = 0.0;
      for (Eigen::Index t = 0, r = 0; t < n; ++t) {
        if (t == held) continue;
        wx += sol.alpha(r++) * gram(t, held);
      }
      if (sol.rho - wx <= 0.0) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_nu = nu;
    }
  }
  return best_nu;
}

OneClassSvmScorer::OneClassSvmScorer(const Matrix& reference, const std::vector<double>& nu_grid,
                                     double tol)
    : reference_(reference) {
  const double nu = select_nu_loo(reference, nu_grid, tol);
  solution_ = solve_one_class_svm(reference, nu, tol);
}

}  // namespace poisonlab
