#include "poisonlab/attack_flipping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "poisonlab/error.hpp"
#include "poisonlab/rng.hpp"

namespace poisonlab {

std::size_t flip_count(double fraction, std::size_t n) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw InvalidArgument("flip fraction must lie in [0, 1]");
  return static_cast<std::size_t>(std::round(fraction * static_cast<double>(n)));
}

namespace {

FlipResult negate(const LabeledDataset& train, std::vector<std::size_t> indices) {
  Vector labels = train.labels();
  for (auto i : indices) labels(static_cast<Eigen::Index>(i)) = -labels(static_cast<Eigen::Index>(i));
  std::sort(indices.begin(), indices.end());
  return {train.with_labels(std::move(labels)), std::move(indices)};
}

}  // namespace

FlipResult rlf(const LabeledDataset& train, const FlipSpec& spec) {
  const auto n = static_cast<std::size_t>(train.size());
  const std::size_t count = flip_count(spec.fraction, n);
  Rng rng(spec.seed);
  return negate(train, rng.sample_without_replacement(n, count));
}

FlipResult ilf(const LabeledDataset& train, double lambda, double fraction,
               const TrainConfig& train_config) {
  const auto n = static_cast<std::size_t>(train.size());
  const std::size_t count = flip_count(fraction, n);
  if (count == 0) return {train, {}};

  TrainConfig config = train_config;
  config.lambda = lambda;
  const LinearClassifier clean = train_lasso(train, config);

  std::vector<double> loss(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double r = clean.decision(train.row(row)) + train.label(row);
    loss[i] = r * r;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return loss[a] > loss[b]; });
  order.resize(count);
  return negate(train, std::move(order));
}

}  // namespace poisonlab
