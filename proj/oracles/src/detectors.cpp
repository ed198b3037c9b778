#include "poisonlab/oracles/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "poisonlab/rng.hpp"

namespace poisonlab::oracles {

double distance(const Matrix& a, Eigen::Index i, const Eigen::RowVectorXd& x) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) sum += (a(i, j) - x(j)) * (a(i, j) - x(j));
  return std::sqrt(sum);
}

double knn(const Matrix& ref, const Eigen::RowVectorXd& x, std::size_t k, bool skip_copy) {
  std::vector<double> d;
  bool skipped = !skip_copy;
  for (Eigen::Index i = 0; i < ref.rows(); ++i) {
    if (!skipped && ref.row(i) == x) {
      skipped = true;
      continue;
    }
    d.push_back(distance(ref, i, x));
  }
  std::sort(d.begin(), d.end());
  if (d.size() < k) throw std::invalid_argument("oracle knn: too few points");
  return d[k - 1];
}

double knn_over(const Matrix& ref, const std::vector<std::size_t>& sample,
                const Eigen::RowVectorXd& x, std::size_t k) {
  Matrix sub(static_cast<Eigen::Index>(sample.size()), ref.cols());
  for (std::size_t m = 0; m < sample.size(); ++m)
    sub.row(static_cast<Eigen::Index>(m)) = ref.row(static_cast<Eigen::Index>(sample[m]));
  return knn(sub, x, k, true);
}

std::vector<std::size_t> replay_sample(std::size_t n, std::size_t s, std::uint64_t seed,
                                       std::uint64_t query) {
  Rng rng = Rng::derive(seed, query);
  return rng.sample_without_replacement(n, s);
}

double min_distance(const Matrix& ref, const std::vector<std::size_t>& sample,
                    const Eigen::RowVectorXd& x) {
  std::vector<double> d;
  for (auto i : sample) d.push_back(distance(ref, static_cast<Eigen::Index>(i), x));
  return *std::min_element(d.begin(), d.end());
}

namespace {

struct Hood {
  std::vector<Eigen::Index> idx;
  std::vector<double> dist;
};

// All distances sorted by (distance, index); the first k form the hood.
Hood hood_of(const Matrix& ref, const Eigen::RowVectorXd& x, std::size_t k, Eigen::Index skip) {
  std::vector<std::pair<double, Eigen::Index>> all;
  for (Eigen::Index i = 0; i < ref.rows(); ++i)
    if (i != skip) all.emplace_back(distance(ref, i, x), i);
  std::sort(all.begin(), all.end());
  Hood h;
  for (std::size_t m = 0; m < k; ++m) {
    h.idx.push_back(all[m].second);
    h.dist.push_back(all[m].first);
  }
  return h;
}

double lrd_from(const Hood& h, const std::vector<double>& kdist, double cap) {
  double total = 0.0;
  for (std::size_t m = 0; m < h.idx.size(); ++m)
    total += std::max(kdist[static_cast<std::size_t>(h.idx[m])], h.dist[m]);
  const double mean_reach = total / static_cast<double>(h.idx.size());
  if (mean_reach == 0.0) return cap;
  return std::min(cap, 1.0 / mean_reach);
}

}  // namespace

double lof(const Matrix& ref, const Eigen::RowVectorXd& x, std::size_t k, double cap) {
  const Eigen::Index n = ref.rows();
  std::vector<Hood> hoods;
  std::vector<double> kdist;
  for (Eigen::Index i = 0; i < n; ++i) {
    hoods.push_back(hood_of(ref, ref.row(i), k, i));
    kdist.push_back(hoods.back().dist.back());
  }
  std::vector<double> lrd;
  for (Eigen::Index i = 0; i < n; ++i) lrd.push_back(lrd_from(hoods[static_cast<std::size_t>(i)], kdist, cap));

  Eigen::Index skip = -1;
  for (Eigen::Index i = 0; i < n; ++i)
    if (ref.row(i) == x) {
      skip = i;
      break;
    }
  const Hood h = hood_of(ref, x, k, skip);
  double neighbours = 0.0;
  for (auto o : h.idx) neighbours += lrd[static_cast<std::size_t>(o)];
  neighbours /= static_cast<double>(k);
  return neighbours / lrd_from(h, kdist, cap);
}

double nearest_rank(const std::vector<double>& scores, double alpha) {
  std::vector<double> candidates = scores;
  std::sort(candidates.begin(), candidates.end());
  const double n = static_cast<double>(scores.size());
  for (double s : candidates) {
    const auto at_most = std::count_if(scores.begin(), scores.end(), [&](double v) { return v <= s; });
    if (static_cast<double>(at_most) >= alpha * n - 1e-9) return s;
  }
  return candidates.back();
}

}  // namespace poisonlab::oracles
