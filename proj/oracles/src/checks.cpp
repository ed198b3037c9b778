#include "poisonlab/oracles/checks.hpp"

#include <algorithm>
#include <cmath>

#include "poisonlab/attack_optimal.hpp"
#include "poisonlab/outlier.hpp"
#include "poisonlab/oracles/detectors.hpp"
#include "poisonlab/oracles/lasso.hpp"
#include "poisonlab/oracles/qp.hpp"
#include "poisonlab/rng.hpp"

namespace poisonlab::oracles {

namespace {

Matrix normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

LabeledDataset noisy_linear(Rng& rng, const Vector& truth, Eigen::Index n) {
  Matrix x = normal_matrix(rng, n, truth.size());
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = x.row(i).dot(truth) + 0.5 * rng.normal() >= 0.0 ? 1.0 : -1.0;
  return {x, y};
}

}  // namespace

GradcheckReport run_gradcheck(std::size_t count, std::uint64_t seed) {
  constexpr Eigen::Index kTrain = 30;
  constexpr Eigen::Index kDim = 5;
  GradcheckReport report;
  for (std::size_t c = 0; c < count; ++c) {
    GradcheckInstance inst;
    inst.seed = seed + c;
    Rng rng = Rng::derive(seed, c);
    TrainConfig config;
    while (true) {
      const Vector truth = normal_matrix(rng, kDim, 1);
      const LabeledDataset train = noisy_linear(rng, truth, kTrain);
      const LabeledDataset val = noisy_linear(rng, truth, 50);
      PoisonSet poison{normal_matrix(rng, 1, kDim), Vector::Constant(1, rng.uniform() < 0.5 ? -1.0 : 1.0)};
      const LabeledDataset all = concat(train, poison.as_dataset());
      const LinearClassifier model = train_lasso(all, config);
      if ((model.w.array().abs() < 1e-6).any()) {
        ++inst.rejected_draws;
        continue;
      }
      const Vector analytic = poison_gradient(0, poison, model, all, val);
      const Vector numeric = finite_difference_gradient(train, val, poison, 0, 0.0, 1e-4, config);
      inst.relative_error = (analytic - numeric).norm() / std::max(numeric.norm(), 1e-300);
      break;
    }
    report.worst = std::max(report.worst, inst.relative_error);
    report.instances.push_back(inst);
  }
  return report;
}

DetectorCheckReport run_detector_checks(std::size_t instances, std::uint64_t seed) {
  DetectorCheckReport report;
  report.instances = instances;
  for (std::size_t c = 0; c < instances; ++c) {
    Rng rng = Rng::derive(seed, c);
    const auto n = static_cast<Eigen::Index>(8 + rng.uniform_index(33));
    const auto d = static_cast<Eigen::Index>(1 + rng.uniform_index(6));
    Matrix ref = normal_matrix(rng, n, d);
    // Integer grids produce exact ties and duplicates.
    if (c % 4 == 0) ref = (ref * 1.5).array().round().matrix();
    const std::size_t k = 1 + rng.uniform_index(5);
    const std::size_t s = k + 1 + rng.uniform_index(static_cast<std::uint64_t>(n) - k);
    const std::uint64_t fit_seed = rng.next_u64();

    const KnnScorer knn(ref, k);
    const SampledKnnScorer sampled(ref, k, s, fit_seed);
    const SubsampleScorer sp(ref, s, fit_seed);
    const LofScorer lof(ref, k);

    for (int qi = 0; qi < 6; ++qi) {
      Eigen::RowVectorXd x =
          qi < 3 ? Eigen::RowVectorXd(ref.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)))))
                 : Eigen::RowVectorXd(normal_matrix(rng, 1, d));
      const std::uint64_t query = rng.next_u64();
      report.knn = std::max(report.knn, std::abs(knn.score(x) - oracles::knn(ref, x, k)));
      const auto sample = replay_sample(static_cast<std::size_t>(n), s, fit_seed, query);
      report.sampled_knn =
          std::max(report.sampled_knn, std::abs(sampled.score(x, query) - knn_over(ref, sample, x, k)));
      report.sp = std::max(report.sp, std::abs(sp.score(x) - min_distance(ref, sp.sample_indices(), x)));
      report.lof = std::max(report.lof, std::abs(lof.score(x) - oracles::lof(ref, x, k)));
    }

    if (c % 5 == 0) {
      const auto m = static_cast<Eigen::Index>(5 + rng.uniform_index(16));
      Matrix pts = normal_matrix(rng, m, 1 + static_cast<Eigen::Index>(rng.uniform_index(4)));
      pts.rowwise() += Eigen::RowVectorXd::Constant(pts.cols(), 2.0);
      const std::vector<double> grid{0.05, 0.1, 0.2, 0.5};
      const double nu = grid[rng.uniform_index(grid.size())];
      const auto smo = solve_one_class_svm(pts, nu, 1e-6);
      const auto qp = one_class_svm_dual(pts, nu);
      report.ocsvm_objective = std::max(report.ocsvm_objective, std::abs(smo.objective - qp.objective));
      ++report.ocsvm_instances;
    }
  }
  return report;
}

}  // namespace poisonlab::oracles
