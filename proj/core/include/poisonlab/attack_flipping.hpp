#pragma once

#include <cstdint>
#include <vector>

#include "poisonlab/dataset.hpp"
#include "poisonlab/linear_model.hpp"

namespace poisonlab {

struct FlipSpec {
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

/// round(fraction * n), halves rounded away from zero.
std::size_t flip_count(double fraction, std::size_t n);

struct FlipResult {
  LabeledDataset data;
  std::vector<std::size_t> flipped;  // indices whose label was negated
};

/// Random label flipping: negates the labels of flip_count(...) distinct
/// uniformly chosen rows.
FlipResult rlf(const LabeledDataset& train, const FlipSpec& spec);

/// Informed label flipping: negates the labels with the largest squared
/// residual (w.x + b + y)^2 under a clean lasso; ranked once, ties to the
/// lowest index.
FlipResult ilf(const LabeledDataset& train, double lambda, double fraction,
               const TrainConfig& train_config = {});

}  // namespace poisonlab
