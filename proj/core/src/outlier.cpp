#include "poisonlab/outlier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "poisonlab/error.hpp"
#include "poisonlab/rng.hpp"

namespace poisonlab {

std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::knn: return "knn";
    case ScorerKind::sampled_knn: return "sampled_knn";
    case ScorerKind::sp: return "sp";
    case ScorerKind::ocsvm: return "ocsvm";
    case ScorerKind::lof: return "lof";
  }
  return "unknown";
}

ScorerKind scorer_kind_from_string(std::string_view name) {
  for (auto kind : {ScorerKind::knn, ScorerKind::sampled_knn, ScorerKind::sp, ScorerKind::ocsvm,
                    ScorerKind::lof})
    if (to_string(kind) == name) return kind;
  throw InvalidArgument("unknown detector kind '" + std::string(name) + "'");
}

bool is_randomized(ScorerKind kind) {
  return kind == ScorerKind::sampled_knn || kind == ScorerKind::sp;
}

double euclidean(const RowRef& a, const RowRef& b) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double diff = a(j) - b(j);
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

namespace {

bool same_point(const RowRef& a, const RowRef& b) { return (a.array() == b.array()).all(); }

// k-th smallest distance from x to the rows `candidates` of `reference`,
// skipping the row `exclude` or, failing that, the first exact copy of x.
double kth_distance(const Matrix& reference, std::span<const std::size_t> candidates,
                    const RowRef& x, std::size_t k, std::optional<std::size_t> exclude,
                    bool exclude_copy) {
  std::vector<double> dist;
  dist.reserve(candidates.size());
  bool skipped = false;
  for (auto i : candidates) {
    const auto row = reference.row(static_cast<Eigen::Index>(i));
    if (!skipped && ((exclude && *exclude == i) || (!exclude && exclude_copy && same_point(row, x)))) {
      skipped = true;
      continue;
    }
    dist.push_back(euclidean(row, x));
  }
  if (dist.size() < k)
    throw InvalidArgument("k-NN score needs at least " + std::to_string(k) +
                          " reference points besides the query");
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
  return dist[k - 1];
}

std::vector<std::size_t> all_indices(Eigen::Index n) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace

// --- q_k ---------------------------------------------------------------

KnnScorer::KnnScorer(Matrix reference, std::size_t k) : reference_(std::move(reference)), k_(k) {
  if (k_ < 1) throw InvalidArgument("knn: k must be >= 1");
  if (static_cast<std::size_t>(reference_.rows()) <= k_)
    throw InvalidArgument("knn: need more than k trusted points");
}

double KnnScorer::score(const RowRef& x) const {
  const auto idx = all_indices(reference_.rows());
  return kth_distance(reference_, idx, x, k_, std::nullopt, true);
}

double KnnScorer::self_score(std::size_t i) const {
  const auto idx = all_indices(reference_.rows());
  return kth_distance(reference_, idx, reference_.row(static_cast<Eigen::Index>(i)), k_, i, true);
}

// --- q_kSp -------------------------------------------------------------

SampledKnnScorer::SampledKnnScorer(Matrix reference, std::size_t k, std::size_t s,
                                   std::uint64_t seed)
    : reference_(std::move(reference)), k_(k), s_(s), seed_(seed) {
  if (k_ < 1 || s_ < 1) throw InvalidArgument("sampled_knn: k and s must be >= 1");
  if (s_ < k_) throw InvalidArgument("sampled_knn: sample size s must be >= k");
  if (s_ > static_cast<std::size_t>(reference_.rows()))
    throw InvalidArgument("sampled_knn: sample size " + std::to_string(s_) +
                          " exceeds the trusted set size " + std::to_string(reference_.rows()));
}

std::vector<std::size_t> SampledKnnScorer::sample_for(std::uint64_t query) const {
  Rng rng = Rng::derive(seed_, query);
  return rng.sample_without_replacement(static_cast<std::size_t>(reference_.rows()), s_);
}

double SampledKnnScorer::score(const RowRef& x, std::uint64_t query) const {
  const auto sample = sample_for(query);
  return kth_distance(reference_, sample, x, k_, std::nullopt, true);
}

double SampledKnnScorer::self_score(std::size_t i) const {
  const auto sample = sample_for(i);
  const auto x = reference_.row(static_cast<Eigen::Index>(i));
  const bool drawn = std::find(sample.begin(), sample.end(), i) != sample.end();
  return kth_distance(reference_, sample, x, k_,
                      drawn ? std::optional<std::size_t>(i) : std::nullopt, true);
}

// --- q_Sp --------------------------------------------------------------

SubsampleScorer::SubsampleScorer(Matrix reference, std::size_t s, std::uint64_t seed)
    : reference_(std::move(reference)) {
  if (s < 1) throw InvalidArgument("sp: s must be >= 1");
  if (reference_.rows() < 1) throw InvalidArgument("sp: empty trusted set");
  Rng rng(seed);
  sample_ = rng.sample_with_replacement(static_cast<std::size_t>(reference_.rows()), s);
}

double SubsampleScorer::score(const RowRef& x) const {
  double best = std::numeric_limits<double>::infinity();
  for (auto i : sample_) best = std::min(best, euclidean(reference_.row(static_cast<Eigen::Index>(i)), x));
  return best;
}

double SubsampleScorer::self_score(std::size_t i) const {
  const auto x = reference_.row(static_cast<Eigen::Index>(i));
  double best = std::numeric_limits<double>::infinity();
  bool skipped = false;
  for (auto idx : sample_) {
    if (!skipped && idx == i) {
      skipped = true;
      continue;
    }
    best = std::min(best, euclidean(reference_.row(static_cast<Eigen::Index>(idx)), x));
  }
  if (!std::isfinite(best))
    throw InvalidArgument("sp: sample holds only the scored point; increase s");
  return best;
}

// --- q_LOF -------------------------------------------------------------

LofScorer::LofScorer(Matrix reference, std::size_t k) : reference_(std::move(reference)), k_(k) {
  if (k_ < 1) throw InvalidArgument("lof: k must be >= 1");
  const auto n = static_cast<std::size_t>(reference_.rows());
  if (n <= k_) throw InvalidArgument("lof: need more than k trusted points");

  std::vector<Neighbourhood> hoods(n);
  k_distance_.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    hoods[i] = neighbours(reference_.row(static_cast<Eigen::Index>(i)), i);
    k_distance_(static_cast<Eigen::Index>(i)) = hoods[i].distance.back();
  }
  lrd_.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double reach = 0.0;
    for (std::size_t m = 0; m < k_; ++m)
      reach += std::max(k_distance_(static_cast<Eigen::Index>(hoods[i].index[m])),
                        hoods[i].distance[m]);
    reach /= static_cast<double>(k_);
    lrd_(static_cast<Eigen::Index>(i)) = reach > 0.0 ? std::min(kLrdCap, 1.0 / reach) : kLrdCap;
  }
}

LofScorer::Neighbourhood LofScorer::neighbours(const RowRef& x,
                                               std::optional<std::size_t> exclude) const {
  const auto n = static_cast<std::size_t>(reference_.rows());
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(n);
  bool skipped = false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = reference_.row(static_cast<Eigen::Index>(i));
    if (!skipped && ((exclude && *exclude == i) || (!exclude && same_point(row, x)))) {
      skipped = true;
      continue;
    }
    dist.emplace_back(euclidean(row, x), i);
  }
  if (dist.size() < k_) throw InvalidArgument("lof: not enough reference points");
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
  Neighbourhood hood;
  for (std::size_t m = 0; m < k_; ++m) {
    hood.distance.push_back(dist[m].first);
    hood.index.push_back(dist[m].second);
  }
  return hood;
}

double LofScorer::score_with(const RowRef& x, std::optional<std::size_t> exclude) const {
  const auto hood = neighbours(x, exclude);
  double reach = 0.0;
  double neighbour_lrd = 0.0;
  for (std::size_t m = 0; m < k_; ++m) {
    const auto o = static_cast<Eigen::Index>(hood.index[m]);
    reach += std::max(k_distance_(o), hood.distance[m]);
    neighbour_lrd += lrd_(o);
  }
  reach /= static_cast<double>(k_);
  neighbour_lrd /= static_cast<double>(k_);
  const double own = reach > 0.0 ? std::min(kLrdCap, 1.0 / reach) : kLrdCap;
  return neighbour_lrd / own;
}

double LofScorer::score(const RowRef& x) const { return score_with(x, std::nullopt); }

double LofScorer::self_score(std::size_t i) const {
  return score_with(reference_.row(static_cast<Eigen::Index>(i)), i);
}

// --- dispatch ----------------------------------------------------------

OutlierScorer OutlierScorer::fit(const ScorerConfig& config, const Matrix& trusted) {
  const auto n = static_cast<std::size_t>(trusted.rows());
  if (n < 1) throw InvalidArgument("detector fit: empty trusted set");
  switch (config.kind) {
    case ScorerKind::knn:
      return {config.kind, KnnScorer(trusted, config.k), n};
    case ScorerKind::sampled_knn:
      return {config.kind, SampledKnnScorer(trusted, config.k, config.s, config.seed), n};
    case ScorerKind::sp:
      return {config.kind, SubsampleScorer(trusted, config.s, config.seed), n};
    case ScorerKind::ocsvm:
      return {config.kind, OneClassSvmScorer(trusted, config.ocsvm_nu_grid, config.ocsvm_tol), n};
    case ScorerKind::lof:
      return {config.kind, LofScorer(trusted, config.k), n};
  }
  throw InvalidArgument("unknown detector kind");
}

double OutlierScorer::score(const RowRef& x, std::uint64_t query) const {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SampledKnnScorer>)
          return s.score(x, query);
        else
          return s.score(x);
      },
      impl_);
}

double OutlierScorer::self_score(std::size_t i) const {
  if (i >= reference_size_) throw InvalidArgument("self_score: index out of range");
  return std::visit([&](const auto& s) { return s.self_score(i); }, impl_);
}

}  // namespace poisonlab
