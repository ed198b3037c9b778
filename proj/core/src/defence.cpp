#include "poisonlab/defence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "poisonlab/error.hpp"

namespace poisonlab {

double ecdf_threshold(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw InvalidArgument("ecdf_threshold: no scores");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("ecdf_threshold: alpha must lie in (0, 1]");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  // The guard keeps products like 0.95 * 100 from rounding up a rank.
  auto rank = static_cast<std::size_t>(std::ceil(alpha * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

namespace {

double class_threshold(const OutlierScorer& scorer, double alpha) {
  std::vector<double> scores(scorer.reference_size());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = scorer.self_score(i);
  return ecdf_threshold(scores, alpha);
}

}  // namespace

DefenceModel fit_defence(const LabeledDataset& trusted, const ScorerConfig& detector,
                         double alpha) {
  const LabeledDataset pos = trusted.with_label(1.0);
  const LabeledDataset neg = trusted.with_label(-1.0);
  if (pos.is_empty() || neg.is_empty())
    throw InvalidArgument("fit_defence: trusted set must contain both classes");
  if ((detector.kind == ScorerKind::knn || detector.kind == ScorerKind::lof) &&
      (static_cast<std::size_t>(pos.size()) < detector.k + 1 ||
       static_cast<std::size_t>(neg.size()) < detector.k + 1))
    throw InvalidArgument("fit_defence: each class needs at least k + 1 trusted points");

  ScorerConfig neg_config = detector;
  neg_config.seed = detector.seed + 1;
  auto scorer_pos = OutlierScorer::fit(detector, pos.features());
  auto scorer_neg = OutlierScorer::fit(neg_config, neg.features());
  const double t_pos = class_threshold(scorer_pos, alpha);
  const double t_neg = class_threshold(scorer_neg, alpha);
  return {std::move(scorer_pos), std::move(scorer_neg), t_pos, t_neg, alpha,
          static_cast<std::size_t>(pos.size()), static_cast<std::size_t>(neg.size())};
}

FilterResult filter(const DefenceModel& model, const LabeledDataset& untrusted) {
  FilterResult out;
  std::vector<std::size_t> keep;
  for (Eigen::Index i = 0; i < untrusted.size(); ++i) {
    const bool positive = untrusted.label(i) > 0.0;
    const auto& scorer = positive ? model.scorer_pos : model.scorer_neg;
    const double threshold = positive ? model.t_pos : model.t_neg;
    const double q = scorer.score(untrusted.row(i), static_cast<std::uint64_t>(i));
    if (q > threshold)
      out.removed.push_back(static_cast<std::size_t>(i));
    else
      keep.push_back(static_cast<std::size_t>(i));
  }
  out.kept = untrusted.subset(keep);
  return out;
}

std::string defence_summary_json(const DefenceModel& model) {
  nlohmann::json j;
  j["detector_kind"] = std::string(to_string(model.scorer_pos.kind()));
  j["alpha"] = model.alpha;
  j["t_pos"] = model.t_pos;
  j["t_neg"] = model.t_neg;
  j["class_sizes"] = {{"pos", model.n_pos}, {"neg", model.n_neg}};
  return j.dump();
}

// --- RLS -------------------------------------------------------------

namespace {

void check_rates(const NoiseRates& rates) {
  if (!(rates.rho_pos >= 0.0 && rates.rho_neg >= 0.0 && rates.rho_pos + rates.rho_neg < 1.0))
    throw InvalidArgument("noise rates must be nonnegative with rho_pos + rho_neg < 1");
}

double rate_for(const NoiseRates& rates, double y) { return y > 0.0 ? rates.rho_pos : rates.rho_neg; }

constexpr double kDivergence = 1e12;

}  // namespace

double squared_loss(const LinearClassifier& model, const RowRef& x, double y) {
  const double r = model.decision(x) - y;
  return r * r;
}

double robust_loss(const LinearClassifier& model, const RowRef& x, double y,
                   const NoiseRates& rates) {
  check_rates(rates);
  const double denom = 1.0 - rates.rho_pos - rates.rho_neg;
  return ((1.0 - rate_for(rates, -y)) * squared_loss(model, x, y) -
          rate_for(rates, y) * squared_loss(model, x, -y)) /
         denom;
}

namespace {

// Shared loop: `coefficient(f, y)` is d loss / d f for the decision value f.
template <typename Coefficient, typename Loss>
LinearClassifier gradient_descent(const LabeledDataset& data, double learning_rate, int iters,
                                  Coefficient coefficient, Loss loss) {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (data.is_empty()) throw InvalidArgument("gradient descent: empty dataset");
  const auto n = static_cast<double>(data.size());
  LinearClassifier model = LinearClassifier::zeros(data.dim());
  for (int it = 0; it < iters; ++it) {
    Vector f = data.features() * model.w;
    f.array() += model.b;
    Vector c(data.size());
    double mean_loss = 0.0;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      c(i) = coefficient(f(i), data.label(i));
      mean_loss += loss(f(i), data.label(i));
    }
    mean_loss /= n;
    if (!std::isfinite(mean_loss) || std::abs(mean_loss) > kDivergence)
      throw TrainingError("gradient descent diverged; use a smaller learning rate", mean_loss);
    const Vector grad_w = data.features().transpose() * c / n;
    const double grad_b = c.sum() / n;
    model.w -= learning_rate * grad_w;
    model.b -= learning_rate * grad_b;
  }
  return model;
}

}  // namespace

LinearClassifier train_rls(const LabeledDataset& data, const RlsConfig& config) {
  check_rates(config.rates);
  const NoiseRates rates = config.rates;
  const double denom = 1.0 - rates.rho_pos - rates.rho_neg;
  auto coefficient = [&](double f, double y) {
    return ((1.0 - rate_for(rates, -y)) * (2.0 * (f - y)) - rate_for(rates, y) * (2.0 * (f + y))) /
           denom;
  };
  auto loss = [&](double f, double y) {
    return ((1.0 - rate_for(rates, -y)) * ((f - y) * (f - y)) -
            rate_for(rates, y) * ((f + y) * (f + y))) /
           denom;
  };
  return gradient_descent(data, config.learning_rate, config.iters, coefficient, loss);
}

LinearClassifier train_least_squares_gd(const LabeledDataset& data, double learning_rate,
                                        int iters) {
  auto coefficient = [](double f, double y) { return 2.0 * (f - y); };
  auto loss = [](double f, double y) { return (f - y) * (f - y); };
  return gradient_descent(data, learning_rate, iters, coefficient, loss);
}

std::vector<NoiseRates> noise_candidates(const RlsConfig& config) {
  if (config.noise_grid.empty()) throw InvalidArgument("cv_noise_rates: empty noise grid");
  std::vector<NoiseRates> out;
  for (double a : config.noise_grid) {
    if (config.symmetric) {
      out.push_back({a, a});
    } else {
      for (double b : config.noise_grid) out.push_back({a, b});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const NoiseRates& l, const NoiseRates& r) {
    const double sl = l.rho_pos + l.rho_neg;
    const double sr = r.rho_pos + r.rho_neg;
    return sl != sr ? sl < sr : l.rho_pos < r.rho_pos;
  });
  return out;
}

NoiseRates cv_noise_rates(const LabeledDataset& data, const RlsConfig& config, std::size_t folds) {
  const auto candidates = noise_candidates(config);
  if (candidates.size() == 1) return candidates.front();
  const auto ranges = fold_ranges(static_cast<std::size_t>(data.size()), folds);

  NoiseRates best = candidates.front();
  double best_error = std::numeric_limits<double>::infinity();
  for (const auto& rates : candidates) {
    if (rates.rho_pos + rates.rho_neg >= 1.0) continue;
    RlsConfig trial = config;
    trial.rates = rates;
    double total = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      const auto [train, val] = fold_split(data, ranges, f);
      total += test_error(val, train_rls(train, trial));
    }
    const double mean = total / static_cast<double>(folds);
    if (mean < best_error) {
      best_error = mean;
      best = rates;
    }
  }
  return best;
}

}  // namespace poisonlab
