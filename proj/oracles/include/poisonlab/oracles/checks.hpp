#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace poisonlab::oracles {

struct GradcheckInstance {
  std::uint64_t seed = 0;
  double relative_error = 0.0;
  int rejected_draws = 0;
};

struct GradcheckReport {
  std::vector<GradcheckInstance> instances;
  double worst = 0.0;
};

/// Random problems with 30 training points in 5 dimensions, lambda = 0,
/// one poisoning point; compares the implicit gradient with retraining
/// central differences. Draws with some |w_j| < 1e-6 are redrawn.
GradcheckReport run_gradcheck(std::size_t count, std::uint64_t seed);

struct DetectorCheckReport {
  std::size_t instances = 0;
  /// Largest absolute difference to the brute-force oracle per detector.
  double knn = 0.0;
  double sampled_knn = 0.0;
  double sp = 0.0;
  double lof = 0.0;
  /// Largest dual-objective gap of the one-class SVM against the QP oracle.
  double ocsvm_objective = 0.0;
  std::size_t ocsvm_instances = 0;
};

DetectorCheckReport run_detector_checks(std::size_t instances, std::uint64_t seed);

}  // namespace poisonlab::oracles
