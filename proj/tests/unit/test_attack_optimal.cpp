#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "poisonlab/attack_optimal.hpp"
#include "poisonlab/error.hpp"
#include "poisonlab/oracles/lasso.hpp"

using namespace poisonlab;

namespace {

AttackConfig box_config(Eigen::Index d, double lo, double hi) {
  AttackConfig c;
  c.box_low = Vector::Constant(d, lo);
  c.box_high = Vector::Constant(d, hi);
  return c;
}

struct Instance {
  LabeledDataset train;
  LabeledDataset val;
  PoisonSet poison;
};

Instance make_instance(std::uint64_t seed, Eigen::Index n, Eigen::Index d) {
  Rng rng(seed);
  Instance in{test::random_problem(seed, n, d), test::random_problem(seed + 1000, 40, d),
              {test::random_matrix(rng, 2, d), test::vec({1.0, -1.0})}};
  return in;
}

}  // namespace

TEST_SUITE("attack_optimal") {

TEST_CASE("project_box") {
  const auto cfg = box_config(2, -4.0, 4.0);
  CHECK(project_box(test::vec({5.0, -1.0}), cfg) == test::vec({4.0, -1.0}));
  CHECK(project_box(test::vec({0.5, -1.0}), cfg) == test::vec({0.5, -1.0}));
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const Vector x = 6.0 * test::random_matrix(rng, 2, 1).col(0);
    const Vector p = project_box(x, cfg);
    CHECK(project_box(p, cfg) == p);
  }
}

TEST_CASE("golden-section search") {
  auto quad = [](double e) { return -(e - 0.3) * (e - 0.3); };
  const auto r = golden_section_maximize(quad, quad(0.0), 1e-3);
  CHECK(std::abs(r.eta - 0.3) <= 1e-3);

  const auto inc = golden_section_maximize([](double e) { return e; }, 0.0, 1e-3);
  CHECK(inc.eta >= 1.0 - 1e-3);

  const auto dec = golden_section_maximize([](double e) { return -e; }, 0.0, 1e-3);
  CHECK(dec.eta == 0.0);
  CHECK(dec.value == 0.0);

  // Never below phi(0), even for a bumpy function.
  auto bumpy = [](double e) { return std::sin(40.0 * e) - 0.5 * e; };
  const auto b = golden_section_maximize(bumpy, bumpy(0.0), 1e-3);
  CHECK(b.value >= bumpy(0.0));
}

TEST_CASE("golden_section_step with a zero direction") {
  const auto in = make_instance(3, 20, 3);
  CHECK(golden_section_step(in.train, in.val, in.poison, 0, Vector::Zero(3), 1e-3, {}) == 0.0);
}

TEST_CASE("initial points: empty budget") {
  const auto in = make_instance(4, 20, 3);
  CHECK(choose_initial_points(in.train, 0, 0.0).size() == 0);
}

TEST_CASE("initial points: largest flipped residual first") {
  // Separable 1-D set; the clean model is increasing in x.
  const LabeledDataset d(test::rows({{-5}, {-4}, {-3}, {-2}, {-1}, {1}, {2}, {3}, {4}, {6}}),
                         test::vec({-1, -1, -1, -1, -1, 1, 1, 1, 1, 1}));
  const auto clean = train_lasso(d, {});
  REQUIRE(test_error(d, clean) == 0.0);

  // Enumerate (w.x + b - y_t)^2 over opposite-label candidates.
  auto best_for = [&](double target) {
    double best = -1.0;
    Eigen::Index arg = -1;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (d.label(i) != -target) continue;
      const double r = clean.decision(d.row(i)) - target;
      if (r * r > best) {
        best = r * r;
        arg = i;
      }
    }
    return arg;
  };
  const auto p = choose_initial_points(d, 2, 0.0);
  CHECK(p.labels == test::vec({1.0, -1.0}));
  CHECK(p.points(0, 0) == d.row(best_for(1.0))(0));
  CHECK(p.points(0, 0) == -5.0);
  CHECK(p.points(1, 0) == d.row(best_for(-1.0))(0));
  CHECK(p.points(1, 0) == 6.0);

  const auto pos = choose_initial_points(d, 3, 0.0, TargetLabels::all_positive);
  CHECK(pos.labels == test::vec({1.0, 1.0, 1.0}));
  CHECK(pos.points.col(0) == test::vec({-5.0, -4.0, -3.0}));
  CHECK_THROWS_AS(choose_initial_points(d, 6, 0.0, TargetLabels::all_positive), InvalidArgument);
}

TEST_CASE("initial points: ties go to the lowest index") {
  Matrix x(6, 2);
  x << 0, 0, 5, 5, 5, 5, 1, 1, 5, 5, 2, 2;
  const Vector y = test::vec({1, -1, -1, 1, -1, 1});
  const auto p = choose_initial_points({x, y}, 3, 0.0, TargetLabels::all_positive);
  // Rows 1, 2 and 4 are identical negatives; picked in index order.
  CHECK(p.points.row(0) == x.row(1));
  CHECK(p.points.row(1) == x.row(2));
  CHECK(p.points.row(2) == x.row(4));
}

TEST_CASE("gradient vanishes when validation residuals are zero") {
  const auto in = make_instance(5, 25, 3);
  const auto all = concat(in.train, in.poison.as_dataset());
  const auto m = train_lasso(all, {});
  Matrix vx(4, 3);
  Vector vy = test::vec({1, -1, 1, -1});
  Rng rng(2);
  for (Eigen::Index i = 0; i < 4; ++i) {
    // Any point on the level set decision = label.
    Vector base = test::random_matrix(rng, 3, 1).col(0);
    base -= ((base.dot(m.w) + m.b - vy(i)) / m.w.squaredNorm()) * m.w;
    vx.row(i) = base.transpose();
  }
  const LabeledDataset val(vx, vy);
  CHECK(mse_half(val, m) < 1e-25);
  CHECK(poison_gradient(0, in.poison, m, all, val).norm() < 1e-12);
}

TEST_CASE("gradient matches retraining finite differences") {
  for (int t = 0; t < 8; ++t) {
    const auto in = make_instance(50 + t, 30, 5);
    const auto all = concat(in.train, in.poison.as_dataset());
    const auto m = train_lasso(all, {});
    if ((m.w.array().abs() < 1e-6).any()) continue;
    for (std::size_t j = 0; j < 2; ++j) {
      const Vector g = poison_gradient(j, in.poison, m, all, in.val);
      const Vector fd = oracles::finite_difference_gradient(in.train, in.val, in.poison, j, 0.0);
      CHECK((g - fd).norm() <= 1e-2 * fd.norm());
    }
  }
}

TEST_CASE("gradient with lambda > 0 matches finite differences on a stable support") {
  int checked = 0;
  for (int t = 0; t < 40 && checked < 8; ++t) {
    const auto in = make_instance(700 + t, 30, 6);
    const auto all = concat(in.train, in.poison.as_dataset());
    TrainConfig cfg;
    cfg.lambda = 0.3 * lambda_max(all);
    const auto m = train_lasso(all, cfg);
    const Vector r = (all.features() * m.w).array() + m.b - all.labels().array();
    const Vector gw = all.features().transpose() * r / static_cast<double>(all.size());
    bool stable = (m.w.array() != 0.0).any() && (m.w.array() != 0.0).count() < m.w.size();
    for (Eigen::Index j = 0; j < m.w.size(); ++j) {
      if (m.w(j) != 0.0 && std::abs(m.w(j)) < 1e-2) stable = false;
      if (m.w(j) == 0.0 && std::abs(gw(j)) > cfg.lambda - 1e-2) stable = false;
    }
    if (!stable) continue;
    ++checked;
    GradientOptions opt;
    opt.lambda = cfg.lambda;
    const Vector g = poison_gradient(0, in.poison, m, all, in.val, opt);
    const Vector fd = oracles::finite_difference_gradient(in.train, in.val, in.poison, 0, cfg.lambda);
    CHECK((g - fd).norm() <= 1e-2 * fd.norm());
  }
  CHECK(checked >= 4);
}

TEST_CASE("linear solve agrees with the explicit inverse") {
  for (int t = 0; t < 20; ++t) {
    const auto in = make_instance(900 + t, 30, 4);
    const auto all = concat(in.train, in.poison.as_dataset());
    const auto m = train_lasso(all, {});
    const Vector g = poison_gradient(1, in.poison, m, all, in.val);
    const Vector ref = oracles::explicit_inverse_gradient(all, in.val, m, in.poison.points.row(1),
                                                          in.poison.labels(1));
    CHECK((g - ref).norm() <= 1e-8 * std::max(1.0, ref.norm()));

    const auto ws = GradientWorkspace::build(all, m, 0.0);
    const Matrix k = ws.kkt_matrix();
    const Matrix rhs = poison_jacobian_rhs(ws, m, in.poison.points.row(1), in.poison.labels(1));
    const Matrix solved = implicit_jacobian(ws, m, in.poison.points.row(1), in.poison.labels(1));
    CHECK((solved + k.inverse() * rhs).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("workspace scatter matrix is symmetric positive semidefinite") {
  const auto in = make_instance(12, 30, 5);
  const auto all = concat(in.train, in.poison.as_dataset());
  const auto ws = GradientWorkspace::build(all, train_lasso(all, {}), 0.0);
  CHECK((ws.sigma - ws.sigma.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(ws.sigma).eigenvalues().minCoeff() >= -1e-10);
  CHECK(ws.n == 32.0);
}

TEST_CASE("gradient is a pure function") {
  const auto in = make_instance(13, 30, 5);
  const auto all = concat(in.train, in.poison.as_dataset());
  const auto m = train_lasso(all, {});
  const Vector a = poison_gradient(0, in.poison, m, all, in.val);
  const Vector b = poison_gradient(0, in.poison, m, all, in.val);
  CHECK(a == b);
}

TEST_CASE("singular systems follow the configured policy") {
  // Fewer points than dimensions: the KKT matrix is rank deficient.
  const LabeledDataset train(test::rows({{1, 0, 0, 0}, {0, 1, 0, 0}}), test::vec({1, -1}));
  PoisonSet poison{test::rows({{0, 0, 1, 0}}), test::vec({1})};
  const LabeledDataset val(test::rows({{1, 1, 1, 1}, {0, 1, 0, 1}}), test::vec({1, -1}));
  const auto all = concat(train, poison.as_dataset());
  const auto m = train_lasso(all, {});
  GradientOptions raise;
  raise.singular = SingularPolicy::raise;
  CHECK_THROWS_AS(poison_gradient(0, poison, m, all, val, raise), DegenerateHessianError);
  GradientOptions pinv;
  pinv.singular = SingularPolicy::pseudo_inverse;
  CHECK(poison_gradient(0, poison, m, all, val, pinv).allFinite());
}

TEST_CASE("attack with an empty budget leaves the model clean") {
  const auto in = make_instance(14, 30, 3);
  auto cfg = box_config(3, -4, 4);
  cfg.q = 0;
  const auto r = run_optimal_attack(in.train, in.val, cfg, 0.0);
  CHECK(r.poison.size() == 0);
  CHECK(r.model.w == r.clean_model.w);
  CHECK(r.model.b == r.clean_model.b);
}

TEST_CASE("attack invariants") {
  for (double lambda : {0.0, 0.02}) {
    const auto in = make_instance(15, 40, 3);
    auto cfg = box_config(3, -2, 2);
    cfg.q = 4;
    cfg.max_outer_iters = 15;
    cfg.epsilon = 1e-9;
    const auto init = choose_initial_points(in.train, 4, lambda);
    const auto r = run_optimal_attack(in.train, in.val, cfg, lambda);

    CHECK(r.poison.labels == init.labels);
    CHECK((r.poison.points.array() >= -2.0).all());
    CHECK((r.poison.points.array() <= 2.0).all());
    for (std::size_t t = 1; t < r.outer_objectives.size(); ++t)
      CHECK(r.outer_objectives[t] >= r.outer_objectives[t - 1]);
    for (std::size_t t = 1; t < r.trace.size(); ++t)
      CHECK(r.trace[t].objective >= r.trace[t - 1].objective);
    for (const auto& e : r.trace)
      if (e.point_index >= 0) {
        CHECK((e.point.array() >= -2.0).all());
        CHECK((e.point.array() <= 2.0).all());
      }
    CHECK(r.outer_objectives.back() > r.outer_objectives.front());

    // The reported model is the learner's answer on the final poison set,
    // up to the solver tolerance (the attack retrains from warm starts).
    TrainConfig tc;
    tc.lambda = lambda;
    const auto retrained = train_lasso(concat(in.train, r.poison.as_dataset()), tc);
    CHECK(mse_half(in.val, retrained) == doctest::Approx(r.outer_objectives.back()).epsilon(1e-6));
  }
}

TEST_CASE("infinite epsilon stops after one sweep") {
  const auto in = make_instance(16, 30, 3);
  auto cfg = box_config(3, -3, 3);
  cfg.q = 2;
  cfg.epsilon = std::numeric_limits<double>::infinity();
  const auto r = run_optimal_attack(in.train, in.val, cfg, 0.0);
  CHECK(r.outer_iterations == 1);
  CHECK(r.converged);
  CHECK(r.outer_objectives.size() == 2);
}

TEST_CASE("binary rounding") {
  Rng rng(4);
  Matrix x(60, 6);
  Vector y(60);
  for (Eigen::Index i = 0; i < 60; ++i) {
    y(i) = i % 2 ? 1.0 : -1.0;
    for (Eigen::Index j = 0; j < 6; ++j) x(i, j) = rng.uniform() < (y(i) > 0 ? 0.7 : 0.3) ? 1.0 : 0.0;
  }
  const LabeledDataset all(x, y);
  const auto train = all.subset(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29});
  std::vector<std::size_t> rest;
  for (std::size_t i = 30; i < 60; ++i) rest.push_back(i);
  const auto val = all.subset(rest);
  auto cfg = box_config(6, 0, 1);
  cfg.q = 3;
  cfg.round_binary = true;
  cfg.max_outer_iters = 5;
  cfg.singular = SingularPolicy::pseudo_inverse;
  const auto r = run_optimal_attack(train, val, cfg, 0.01);
  CHECK(((r.poison.points.array() == 0.0) || (r.poison.points.array() == 1.0)).all());
  TrainConfig tc;
  tc.lambda = 0.01;
  const auto retrained = train_lasso(concat(train, r.poison.as_dataset()), tc);
  CHECK((retrained.w - r.model.w).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("attack trace CSV") {
  const auto in = make_instance(17, 30, 2);
  auto cfg = box_config(2, -3, 3);
  cfg.q = 1;
  cfg.max_outer_iters = 3;
  const auto r = run_optimal_attack(in.train, in.val, cfg, 0.0);
  std::ostringstream out;
  write_attack_trace(out, r.trace);
  std::istringstream in_lines(out.str());
  std::string line;
  std::getline(in_lines, line);
  CHECK(line == "outer_iter,point_index,eta,objective");
  std::size_t rows = 0;
  while (std::getline(in_lines, line)) ++rows;
  CHECK(rows == r.trace.size());
}

TEST_CASE("invalid attack configurations") {
  const auto in = make_instance(18, 30, 2);
  auto cfg = box_config(2, 1, -1);
  cfg.q = 1;
  CHECK_THROWS_AS(run_optimal_attack(in.train, in.val, cfg, 0.0), InvalidArgument);
  cfg = box_config(2, -1, 1);
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(run_optimal_attack(in.train, in.val, cfg, 0.0), InvalidArgument);
  cfg = box_config(2, -1, 1);
  CHECK_THROWS_AS(run_optimal_attack(in.train, LabeledDataset::empty(2), cfg, 0.0), InvalidArgument);
}

}  // TEST_SUITE

TEST_CASE("both step scales stay in the box and never lower the objective") {
  const auto in = make_instance(23, 40, 3);
  for (const auto scale : {StepScale::gradient, StepScale::box_diagonal}) {
    auto cfg = box_config(3, -2, 2);
    cfg.q = 4;
    cfg.max_outer_iters = 4;
    cfg.step_scale = scale;
    const auto r = run_optimal_attack(in.train, in.val, cfg, 0.01);
    CHECK((r.poison.points.array() >= -2.0).all());
    CHECK((r.poison.points.array() <= 2.0).all());
    for (std::size_t t = 1; t < r.trace.size(); ++t)
      CHECK(r.trace[t].objective >= r.trace[t - 1].objective);
  }
}
