#include "poisonlab/oracles/qp.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>

namespace poisonlab::oracles {

Vector project_capped_simplex(const Vector& v, double cap) {
  auto mass = [&](double tau) { return (v.array() - tau).max(0.0).min(cap).sum(); };
  double lo = v.minCoeff() - cap - 1.0;
  double hi = v.maxCoeff() + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > 1.0 ? lo : hi) = mid;
  }
  return (v.array() - 0.5 * (lo + hi)).max(0.0).min(cap).matrix();
}

QpResult one_class_svm_dual(const Matrix& points, double nu, int iters) {
  const Eigen::Index n = points.rows();
  const double cap = 1.0 / (nu * static_cast<double>(n));
  const Matrix gram = points * points.transpose();
  const double lipschitz = std::max(Eigen::SelfAdjointEigenSolver<Matrix>(gram).eigenvalues().maxCoeff(), 1e-12);

  Vector a = project_capped_simplex(Vector::Constant(n, 1.0 / static_cast<double>(n)), cap);
  Vector y = a;
  double t = 1.0;
  for (int it = 0; it < iters; ++it) {
    const Vector next = project_capped_simplex(y - gram * y / lipschitz, cap);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * (next - a);
    a = next;
    t = t_next;
  }
  return {a, 0.5 * a.dot(gram * a)};
}

}  // namespace poisonlab::oracles
