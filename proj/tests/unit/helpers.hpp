#pragma once

#include <initializer_list>

#include "poisonlab/dataset.hpp"
#include "poisonlab/rng.hpp"

namespace test {

using poisonlab::LabeledDataset;
using poisonlab::Matrix;
using poisonlab::Vector;

inline Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : values) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline Matrix random_matrix(poisonlab::Rng& rng, Eigen::Index n, Eigen::Index d) {
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

/// Labels from the sign of a fixed random direction plus noise.
inline LabeledDataset random_problem(std::uint64_t seed, Eigen::Index n, Eigen::Index d,
                                     double noise = 0.5) {
  poisonlab::Rng rng(seed);
  const Matrix x = random_matrix(rng, n, d);
  const Matrix dir = random_matrix(rng, d, 1);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i)
    y(i) = x.row(i).dot(dir.col(0)) + noise * rng.normal() >= 0.0 ? 1.0 : -1.0;
  return {x, y};
}

}  // namespace test
