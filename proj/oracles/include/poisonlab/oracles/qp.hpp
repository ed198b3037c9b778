#pragma once

#include "poisonlab/dataset.hpp"

namespace poisonlab::oracles {

/// Euclidean projection onto {a : 0 <= a_i <= cap, sum a = 1} by bisection
/// on the shift.
Vector project_capped_simplex(const Vector& v, double cap);

struct QpResult {
  Vector alpha;
  double objective = 0.0;
};

/// Accelerated projected gradient on min 1/2 a^T (X X^T) a over the
/// capped simplex with cap 1/(nu n).
QpResult one_class_svm_dual(const Matrix& points, double nu, int iters = 20000);

}  // namespace poisonlab::oracles
