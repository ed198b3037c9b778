#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace poisonlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// n x d features with labels in {-1, +1}. Rows are examples; duplicates are
/// allowed. n may be zero, d must be at least 1.
class LabeledDataset {
public:
  LabeledDataset() = default;
  LabeledDataset(Matrix features, Vector labels);

  /// Empty dataset of dimension d.
  static LabeledDataset empty(Eigen::Index d);

  const Matrix& features() const noexcept { return features_; }
  const Vector& labels() const noexcept { return labels_; }
  Eigen::Index size() const noexcept { return features_.rows(); }
  Eigen::Index dim() const noexcept { return features_.cols(); }
  bool is_empty() const noexcept { return size() == 0; }

  auto row(Eigen::Index i) const { return features_.row(i); }
  double label(Eigen::Index i) const { return labels_(i); }

  LabeledDataset subset(std::span<const std::size_t> indices) const;
  /// Rows with the given label, in original order.
  LabeledDataset with_label(double label) const;
  LabeledDataset with_labels(Vector labels) const;

  /// Rows of `a` followed by rows of `b`.
  friend LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b);

  friend bool operator==(const LabeledDataset& a, const LabeledDataset& b);

private:
  Matrix features_;
  Vector labels_;
};

struct GaussianSpec {
  Vector mean_pos;
  Vector mean_neg;
  double cov_scale = 1.0;
  std::size_t n_per_class = 0;
  std::uint64_t seed = 0;
};

/// Two-class binary-feature generator used as a stand-in for Spambase when
/// the real file is unavailable. Each class draws feature j independently
/// from Bernoulli(p_pos[j]) or Bernoulli(p_neg[j]).
struct BernoulliSpec {
  Vector p_pos;
  Vector p_neg;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::uint64_t seed = 0;
};

struct SplitSpec {
  std::size_t n_train = 0;
  std::size_t n_od_train = 0;
  std::size_t n_val = 0;
  std::uint64_t seed = 0;
};

struct Split {
  LabeledDataset train;
  LabeledDataset od_train;
  LabeledDataset val;
  LabeledDataset test;
};

/// Class +1 rows come first, then class -1 rows.
LabeledDataset gen_gaussian_binary(const GaussianSpec& spec);

LabeledDataset gen_bernoulli_binary(const BernoulliSpec& spec);

/// Bernoulli probabilities with the shape of binarized Spambase (54 terms).
/// `seed` fixes the per-term rates.
BernoulliSpec spambase_surrogate_spec(std::uint64_t seed);

/// UCI Spambase CSV: keeps the 54 term-frequency columns, binarizes them,
/// drops duplicate (features, label) rows keeping the first, spam -> +1.
LabeledDataset load_spambase(const std::filesystem::path& path);

/// MNIST IDX pair restricted to digits 1 and 7; pixels scaled to [0, 1];
/// 7 -> +1, 1 -> -1.
LabeledDataset load_mnist_1v7(const std::filesystem::path& images_path,
                              const std::filesystem::path& labels_path);

/// Seeded uniform permutation partitioned as (train, od_train, val, test).
Split split(const LabeledDataset& data, const SplitSpec& spec);

}  // namespace poisonlab
