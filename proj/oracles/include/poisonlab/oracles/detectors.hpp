#pragma once

// Brute-force reference scorers. Each one sorts every distance instead of
// using partial selection, and shares nothing with the library beyond the
// RNG used to replay samples.

#include <cstdint>
#include <vector>

#include "poisonlab/dataset.hpp"

namespace poisonlab::oracles {

double distance(const Matrix& a, Eigen::Index i, const Eigen::RowVectorXd& x);

/// k-th smallest distance from x to the rows of `ref`, skipping one exact
/// copy of x when `skip_copy` is set.
double knn(const Matrix& ref, const Eigen::RowVectorXd& x, std::size_t k, bool skip_copy = true);

/// Same as knn over the rows `sample` of `ref`.
double knn_over(const Matrix& ref, const std::vector<std::size_t>& sample,
                const Eigen::RowVectorXd& x, std::size_t k);

/// Replays the per-query sample of the sampled k-NN scorer.
std::vector<std::size_t> replay_sample(std::size_t n, std::size_t s, std::uint64_t seed,
                                       std::uint64_t query);

double min_distance(const Matrix& ref, const std::vector<std::size_t>& sample,
                    const Eigen::RowVectorXd& x);

/// Textbook LOF: k-distance, reach-dist, lrd and the ratio of mean
/// neighbour lrd to own lrd, with neighbourhoods of exactly k points
/// (ties to the lower index) and lrd capped at `cap`.
double lof(const Matrix& ref, const Eigen::RowVectorXd& x, std::size_t k, double cap = 1e12);

/// Smallest score s with #{scores <= s} >= alpha * n.
double nearest_rank(const std::vector<double>& scores, double alpha);

}  // namespace poisonlab::oracles
