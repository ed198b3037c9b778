#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "poisonlab/dataset.hpp"

namespace poisonlab {

enum class ScorerKind { knn, sampled_knn, sp, ocsvm, lof };

std::string_view to_string(ScorerKind kind);
ScorerKind scorer_kind_from_string(std::string_view name);
/// sampled_knn and sp draw random samples; the rest are deterministic.
bool is_randomized(ScorerKind kind);

struct ScorerConfig {
  ScorerKind kind = ScorerKind::knn;
  std::size_t k = 5;
  std::size_t s = 20;
  std::uint64_t seed = 0;
  std::vector<double> ocsvm_nu_grid = {0.01, 0.05, 0.1, 0.2, 0.5};
  /// KKT tolerance of the one-class SVM dual solver.
  double ocsvm_tol = 1e-6;
};

using RowRef = Eigen::Ref<const Eigen::RowVectorXd>;

/// Plain sequential Euclidean distance.
double euclidean(const RowRef& a, const RowRef& b);

/// Scores with "self-exclusion" ignore exactly one stored copy of x when x
/// is itself a reference point.

/// Distance to the k-th nearest reference point.
class KnnScorer {
public:
  KnnScorer(Matrix reference, std::size_t k);
  double score(const RowRef& x) const;
  double self_score(std::size_t i) const;
  const Matrix& reference() const noexcept { return reference_; }
  std::size_t k() const noexcept { return k_; }

private:
  Matrix reference_;
  std::size_t k_;
};

/// Distance to the k-th nearest point of a fresh size-s sample drawn
/// without replacement for every query. The sample stream is derived from
/// (seed, query id), so equal ids always see the same sample.
class SampledKnnScorer {
public:
  SampledKnnScorer(Matrix reference, std::size_t k, std::size_t s, std::uint64_t seed);
  double score(const RowRef& x, std::uint64_t query = 0) const;
  double self_score(std::size_t i) const;
  std::vector<std::size_t> sample_for(std::uint64_t query) const;
  const Matrix& reference() const noexcept { return reference_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t s() const noexcept { return s_; }
  std::uint64_t seed() const noexcept { return seed_; }

private:
  Matrix reference_;
  std::size_t k_;
  std::size_t s_;
  std::uint64_t seed_;
};

/// Distance to the nearest point of one size-s sample drawn with
/// replacement at fit time.
class SubsampleScorer {
public:
  SubsampleScorer(Matrix reference, std::size_t s, std::uint64_t seed);
  double score(const RowRef& x) const;
  /// Ignores one draw of reference point i, if it was drawn.
  double self_score(std::size_t i) const;
  const std::vector<std::size_t>& sample_indices() const noexcept { return sample_; }
  const Matrix& reference() const noexcept { return reference_; }

private:
  Matrix reference_;
  std::vector<std::size_t> sample_;
};

/// Solution of the linear one-class SVM dual
///   min 1/2 a^T K a  s.t.  0 <= a_i <= 1/(nu n),  sum a_i = 1.
struct OneClassSvmSolution {
  Vector alpha;
  Vector w;
  double rho = 0.0;
  double nu = 0.0;
  double objective = 0.0;
  int iterations = 0;
};

/// SMO with maximal-violating-pair selection on a precomputed Gram matrix.
OneClassSvmSolution solve_one_class_svm(const Matrix& points, double nu, double tol = 1e-6);

/// rho - w.x
class OneClassSvmScorer {
public:
  OneClassSvmScorer(const Matrix& reference, const std::vector<double>& nu_grid, double tol);
  double score(const RowRef& x) const { return solution_.rho - x.dot(solution_.w.transpose()); }
  /// No exclusion applies: the score is affine in x.
  double self_score(std::size_t i) const {
    return score(reference_.row(static_cast<Eigen::Index>(i)));
  }
  const OneClassSvmSolution& solution() const noexcept { return solution_; }
  const Vector& w() const noexcept { return solution_.w; }
  double rho() const noexcept { return solution_.rho; }
  double nu() const noexcept { return solution_.nu; }

private:
  Matrix reference_;
  OneClassSvmSolution solution_;
};

/// Leave-one-out choice of nu: the grid value under which the most held-out
/// points score <= 0; ties keep the earlier grid entry.
double select_nu_loo(const Matrix& reference, const std::vector<double>& nu_grid, double tol);

/// Local outlier factor with exactly-k neighbourhoods (ties by index) and
/// local reachability densities capped at kLrdCap.
class LofScorer {
public:
  static constexpr double kLrdCap = 1e12;

  LofScorer(Matrix reference, std::size_t k);
  double score(const RowRef& x) const;
  double self_score(std::size_t i) const;
  const Vector& k_distances() const noexcept { return k_distance_; }
  const Vector& lrd() const noexcept { return lrd_; }
  const Matrix& reference() const noexcept { return reference_; }

private:
  struct Neighbourhood {
    std::vector<std::size_t> index;
    std::vector<double> distance;
  };
  Neighbourhood neighbours(const RowRef& x, std::optional<std::size_t> exclude) const;
  double score_with(const RowRef& x, std::optional<std::size_t> exclude) const;

  Matrix reference_;
  std::size_t k_;
  Vector k_distance_;
  Vector lrd_;
};

/// A fitted detector of any kind; immutable and safe to share.
class OutlierScorer {
public:
  using Impl = std::variant<KnnScorer, SampledKnnScorer, SubsampleScorer, OneClassSvmScorer,
                            LofScorer>;

  static OutlierScorer fit(const ScorerConfig& config, const Matrix& trusted);

  ScorerKind kind() const noexcept { return kind_; }
  /// Outlierness of x; larger is more outlying. `query` selects the sample
  /// stream of sampled_knn and is ignored otherwise.
  double score(const RowRef& x, std::uint64_t query = 0) const;
  /// Score of trusted point i with self-exclusion.
  double self_score(std::size_t i) const;
  std::size_t reference_size() const noexcept { return reference_size_; }
  const Impl& impl() const noexcept { return impl_; }

private:
  OutlierScorer(ScorerKind kind, Impl impl, std::size_t n)
      : kind_(kind), impl_(std::move(impl)), reference_size_(n) {}

  ScorerKind kind_;
  Impl impl_;
  std::size_t reference_size_;
};

}  // namespace poisonlab
