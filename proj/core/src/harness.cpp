#include "poisonlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <tuple>

#include "json.hpp"
#include "poisonlab/attack_flipping.hpp"
#include "poisonlab/error.hpp"
#include "poisonlab/rng.hpp"

namespace poisonlab {

using nlohmann::json;

std::size_t poison_budget(double fraction, std::size_t n_train) {
  return flip_count(fraction, n_train);
}

std::size_t PoisonedTrainingSet::poison_count() const {
  return static_cast<std::size_t>(std::count(is_poison.begin(), is_poison.end(), true));
}

// --- config <-> JSON ----------------------------------------------------

namespace {

const std::map<std::string, DatasetKind> kDatasetNames{
    {"synthetic", DatasetKind::synthetic},
    {"synthetic_binary", DatasetKind::synthetic_binary},
    {"spambase", DatasetKind::spambase},
    {"mnist17", DatasetKind::mnist17}};
const std::map<std::string, AttackKind> kAttackNames{{"none", AttackKind::none},
                                                     {"optimal", AttackKind::optimal},
                                                     {"rlf", AttackKind::rlf},
                                                     {"ilf", AttackKind::ilf}};
const std::map<std::string, TargetLabels> kTargetNames{{"alternate", TargetLabels::alternate},
                                                       {"all_positive", TargetLabels::all_positive},
                                                       {"all_negative", TargetLabels::all_negative}};
const std::map<std::string, StepScale> kStepScaleNames{
    {"gradient", StepScale::gradient}, {"box_diagonal", StepScale::box_diagonal}};
const std::map<std::string, SingularPolicy> kSingularNames{
    {"raise", SingularPolicy::raise}, {"pseudo_inverse", SingularPolicy::pseudo_inverse}};

template <typename E>
E lookup(const std::map<std::string, E>& names, const std::string& key, const char* what) {
  const auto it = names.find(key);
  if (it == names.end()) throw InvalidArgument(std::string("unknown ") + what + " '" + key + "'");
  return it->second;
}

template <typename E>
std::string name_of(const std::map<std::string, E>& names, E value) {
  for (const auto& [k, v] : names)
    if (v == value) return k;
  return "unknown";
}

Vector vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::string defence_name(const DefenceSettings& d) {
  switch (d.kind) {
    case DefenceKind::none: return "none";
    case DefenceKind::rls: return "rls";
    case DefenceKind::detector: return std::string(to_string(d.detector.kind));
  }
  return "unknown";
}

DefenceSettings defence_from_json(const json& j) {
  DefenceSettings d;
  const auto kind = j.value("kind", std::string("none"));
  if (kind == "none") {
    d.kind = DefenceKind::none;
  } else if (kind == "rls") {
    d.kind = DefenceKind::rls;
  } else {
    d.kind = DefenceKind::detector;
    d.detector.kind = scorer_kind_from_string(kind);
    d.detector.k = j.value("k", d.detector.k);
    d.detector.s = j.value("s", d.detector.s);
    if (j.contains("nu_grid")) d.detector.ocsvm_nu_grid = j.at("nu_grid").get<std::vector<double>>();
    d.alpha = j.value("alpha", d.alpha);
    if (!(d.alpha > 0.0 && d.alpha <= 1.0)) throw InvalidArgument("defence alpha must lie in (0, 1]");
  }
  return d;
}

json defence_to_json(const DefenceSettings& d) {
  json j{{"kind", defence_name(d)}};
  if (d.kind == DefenceKind::detector) {
    j["alpha"] = d.alpha;
    j["k"] = d.detector.k;
    j["s"] = d.detector.s;
    j["nu_grid"] = d.detector.ocsvm_nu_grid;
  }
  return j;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);

    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      c.dataset.kind = lookup(kDatasetNames, d.value("kind", std::string("synthetic")), "dataset");
      c.dataset.spambase_path = d.value("path", std::string());
      c.dataset.mnist_images = d.value("images", std::string());
      c.dataset.mnist_labels = d.value("labels", std::string());
      c.dataset.surrogate_seed = d.value("surrogate_seed", c.dataset.surrogate_seed);
      auto& g = c.dataset.gaussian;
      g.mean_pos = (Vector(2) << 1.5, 0.0).finished();
      g.mean_neg = (Vector(2) << -1.5, 0.0).finished();
      if (d.contains("mean_pos")) g.mean_pos = vector_from(d.at("mean_pos"));
      if (d.contains("mean_neg")) g.mean_neg = vector_from(d.at("mean_neg"));
      g.cov_scale = d.value("cov_scale", g.cov_scale);
      g.n_per_class = d.value("n_per_class", g.n_per_class);
      g.seed = d.value("seed", g.seed);
    } else {
      c.dataset.gaussian.mean_pos = (Vector(2) << 1.5, 0.0).finished();
      c.dataset.gaussian.mean_neg = (Vector(2) << -1.5, 0.0).finished();
    }

    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.split.n_train = s.value("n_train", c.split.n_train);
      c.split.n_od_train = s.value("n_od_train", c.split.n_od_train);
      c.split.n_val = s.value("n_val", c.split.n_val);
    }

    if (j.contains("attack")) {
      const auto& a = j.at("attack");
      c.attack.kind = lookup(kAttackNames, a.value("kind", std::string("none")), "attack");
      c.attack.epsilon = a.value("epsilon", c.attack.epsilon);
      c.attack.box_low = a.value("box_low", c.attack.box_low);
      c.attack.box_high = a.value("box_high", c.attack.box_high);
      c.attack.max_outer_iters = a.value("max_outer_iters", c.attack.max_outer_iters);
      c.attack.gs_tol = a.value("gs_tol", c.attack.gs_tol);
      c.attack.round_binary = a.value("round_binary", c.attack.round_binary);
      c.attack.step_scale =
          lookup(kStepScaleNames, a.value("step_scale", std::string("box_diagonal")), "step scale");
      c.attack.targets = lookup(kTargetNames, a.value("targets", std::string("alternate")), "targets");
      c.attack.singular =
          lookup(kSingularNames, a.value("singular", std::string("pseudo_inverse")), "singular policy");
      c.attack.flip_repetitions = a.value("flip_repetitions", c.attack.flip_repetitions);
    }

    if (j.contains("poison_fractions"))
      c.poison_fractions = j.at("poison_fractions").get<std::vector<double>>();

    if (j.contains("defences")) {
      c.defences.clear();
      for (const auto& d : j.at("defences")) c.defences.push_back(defence_from_json(d));
    } else if (j.contains("defence")) {
      c.defences = {defence_from_json(j.at("defence"))};
    }

    c.repetitions = j.value("repetitions", c.repetitions);
    c.detector_repetitions = j.value("detector_repetitions", c.detector_repetitions);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.record_wall_time = j.value("record_wall_time", c.record_wall_time);

    if (j.contains("lambda_policy")) {
      const auto& l = j.at("lambda_policy");
      const auto kind = l.value("kind", std::string("fixed"));
      if (kind == "fixed")
        c.lambda_policy.kind = LambdaPolicy::Kind::fixed;
      else if (kind == "cv_on_warm_start")
        c.lambda_policy.kind = LambdaPolicy::Kind::cv_on_warm_start;
      else
        throw InvalidArgument("unknown lambda policy '" + kind + "'");
      c.lambda_policy.lambda = l.value("lambda", c.lambda_policy.lambda);
      c.lambda_policy.folds = l.value("folds", c.lambda_policy.folds);
      if (l.contains("grid")) c.lambda_policy.grid = l.at("grid").get<std::vector<double>>();
    } else if (c.dataset.kind == DatasetKind::mnist17) {
      c.lambda_policy.kind = LambdaPolicy::Kind::cv_on_warm_start;
    }

    if (j.contains("rls")) {
      const auto& r = j.at("rls");
      c.rls.learning_rate = r.value("learning_rate", c.rls.learning_rate);
      c.rls.iters = r.value("iters", c.rls.iters);
      if (r.contains("noise_grid")) c.rls.noise_grid = r.at("noise_grid").get<std::vector<double>>();
      c.rls_folds = r.value("folds", c.rls_folds);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.max_iters = t.value("max_iters", c.train.max_iters);
      const auto solver = t.value("solver", std::string("coordinate_descent"));
      if (solver == "coordinate_descent")
        c.train.solver = LassoSolver::coordinate_descent;
      else if (solver == "proximal_gradient")
        c.train.solver = LassoSolver::proximal_gradient;
      else
        throw InvalidArgument("unknown lasso solver '" + solver + "'");
      c.train.tol = t.value("tol", c.train.tol);
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  for (double f : c.poison_fractions)
    if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("poison fractions must lie in [0, 1]");
  if (c.repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  const auto& g = c.dataset.gaussian;
  j["dataset"] = {{"kind", name_of(kDatasetNames, c.dataset.kind)},
                  {"path", c.dataset.spambase_path.string()},
                  {"images", c.dataset.mnist_images.string()},
                  {"labels", c.dataset.mnist_labels.string()},
                  {"surrogate_seed", c.dataset.surrogate_seed},
                  {"mean_pos", to_std(g.mean_pos)},
                  {"mean_neg", to_std(g.mean_neg)},
                  {"cov_scale", g.cov_scale},
                  {"n_per_class", g.n_per_class},
                  {"seed", g.seed}};
  j["split"] = {{"n_train", c.split.n_train},
                {"n_od_train", c.split.n_od_train},
                {"n_val", c.split.n_val}};
  j["attack"] = {{"kind", name_of(kAttackNames, c.attack.kind)},
                 {"epsilon", c.attack.epsilon},
                 {"box_low", c.attack.box_low},
                 {"box_high", c.attack.box_high},
                 {"max_outer_iters", c.attack.max_outer_iters},
                 {"gs_tol", c.attack.gs_tol},
                 {"round_binary", c.attack.round_binary},
                 {"step_scale", name_of(kStepScaleNames, c.attack.step_scale)},
                 {"targets", name_of(kTargetNames, c.attack.targets)},
                 {"singular", name_of(kSingularNames, c.attack.singular)},
                 {"flip_repetitions", c.attack.flip_repetitions}};
  j["poison_fractions"] = c.poison_fractions;
  j["defences"] = json::array();
  for (const auto& d : c.defences) j["defences"].push_back(defence_to_json(d));
  j["repetitions"] = c.repetitions;
  j["detector_repetitions"] = c.detector_repetitions;
  j["base_seed"] = c.base_seed;
  j["record_wall_time"] = c.record_wall_time;
  j["lambda_policy"] = {
      {"kind", c.lambda_policy.kind == LambdaPolicy::Kind::fixed ? "fixed" : "cv_on_warm_start"},
      {"lambda", c.lambda_policy.lambda},
      {"folds", c.lambda_policy.folds},
      {"grid", c.lambda_policy.grid}};
  j["rls"] = {{"learning_rate", c.rls.learning_rate},
              {"iters", c.rls.iters},
              {"noise_grid", c.rls.noise_grid},
              {"folds", c.rls_folds}};
  j["train"] = {{"max_iters", c.train.max_iters},
                {"tol", c.train.tol},
                {"solver", c.train.solver == LassoSolver::coordinate_descent ? "coordinate_descent"
                                                                            : "proximal_gradient"}};
  return j.dump(2);
}

// --- pipeline -----------------------------------------------------------

LabeledDataset load_dataset(const DatasetConfig& config) {
  switch (config.kind) {
    case DatasetKind::synthetic:
      return gen_gaussian_binary(config.gaussian);
    case DatasetKind::synthetic_binary:
      return gen_bernoulli_binary(spambase_surrogate_spec(config.surrogate_seed));
    case DatasetKind::spambase:
      return load_spambase(config.spambase_path);
    case DatasetKind::mnist17:
      return load_mnist_1v7(config.mnist_images, config.mnist_labels);
  }
  throw InvalidArgument("unknown dataset kind");
}

DefenceOutcome defend_and_train(const PoisonedTrainingSet& poisoned, const LabeledDataset& trusted,
                                const DefenceSettings& defence, std::uint64_t detector_seed,
                                const TrainConfig& train, const RlsConfig& rls,
                                std::size_t rls_folds, bool rls_symmetric) {
  DefenceOutcome out;
  const auto n = static_cast<std::size_t>(poisoned.data.size());
  switch (defence.kind) {
    case DefenceKind::none:
      out.model = train_lasso(poisoned.data, train);
      out.kept = n;
      return out;
    case DefenceKind::rls: {
      RlsConfig config = rls;
      config.symmetric = rls_symmetric;
      // Appended poison would otherwise sit in one contiguous fold.
      Rng rng(detector_seed);
      const auto order = rng.permutation(n);
      config.rates = cv_noise_rates(poisoned.data.subset(order), config, rls_folds);
      out.model = train_rls(poisoned.data, config);
      out.kept = n;
      return out;
    }
    case DefenceKind::detector: {
      ScorerConfig detector = defence.detector;
      detector.seed = detector_seed;
      const DefenceModel model = fit_defence(trusted, detector, defence.alpha);
      auto filtered = filter(model, poisoned.data);
      for (auto i : filtered.removed) {
        if (poisoned.is_poison[i])
          ++out.removed_poison;
        else
          ++out.removed_genuine;
      }
      out.kept = static_cast<std::size_t>(filtered.kept.size());
      out.removed = std::move(filtered.removed);
      out.model = train_lasso(filtered.kept, train);
      return out;
    }
  }
  throw InvalidArgument("unknown defence kind");
}

namespace {

std::string attack_label(AttackKind kind) {
  switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::optimal: return "optimal:append";
    case AttackKind::rlf: return "rlf:flip";
    case AttackKind::ilf: return "ilf:flip";
  }
  return "unknown";
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double choose_lambda(const ExperimentConfig& config, const LabeledDataset& train) {
  const auto& policy = config.lambda_policy;
  if (policy.kind == LambdaPolicy::Kind::fixed) return policy.lambda;

  auto grid_for = [&](const LabeledDataset& data) {
    return policy.grid.empty() ? default_lambda_grid(data) : policy.grid;
  };
  // Warm start needs a lambda of its own: pick it on the clean data first.
  const double clean_lambda = cv_lambda(train, grid_for(train), policy.folds, config.train);
  double largest = 0.0;
  for (double f : config.poison_fractions) largest = std::max(largest, f);
  const std::size_t q = poison_budget(largest, static_cast<std::size_t>(train.size()));
  if (q == 0 || config.attack.kind != AttackKind::optimal) return clean_lambda;
  TrainConfig tc = config.train;
  tc.lambda = clean_lambda;
  const PoisonSet warm = choose_initial_points(train, q, clean_lambda, config.attack.targets, tc);
  const LabeledDataset warm_data = concat(train, warm.as_dataset());
  // Contiguous folds would put every warm-start point in the last fold.
  Rng rng = Rng::derive(config.base_seed, 0xcf);
  const auto order = rng.permutation(static_cast<std::size_t>(warm_data.size()));
  const LabeledDataset shuffled = warm_data.subset(order);
  return cv_lambda(shuffled, grid_for(shuffled), policy.folds, config.train);
}

struct Cell {
  std::vector<double> errors;
  std::vector<double> removed_poison;
  std::vector<double> removed_genuine;
  std::vector<double> seconds;
};

using CellKey = std::tuple<std::string, std::string, double, double>;

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  ExperimentReport report;
  const LabeledDataset data = load_dataset(config.dataset);
  const std::string dataset_name = name_of(kDatasetNames, config.dataset.kind);
  const std::string attack_name = attack_label(config.attack.kind);
  std::map<CellKey, Cell> cells;

  for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
    const std::uint64_t seed = config.base_seed + rep;
    try {
      SplitSpec spec = config.split;
      spec.seed = seed;
      const Split parts = split(data, spec);
      if (parts.test.is_empty()) throw InvalidArgument("split leaves no test data");
      const double lambda = choose_lambda(config, parts.train);
      TrainConfig train = config.train;
      train.lambda = lambda;

      for (double fraction : config.poison_fractions) {
        const std::size_t q = poison_budget(fraction, static_cast<std::size_t>(parts.train.size()));
        const std::size_t attack_draws =
            config.attack.kind == AttackKind::rlf ? std::max<std::size_t>(1, config.attack.flip_repetitions) : 1;

        for (std::size_t draw = 0; draw < attack_draws; ++draw) {
          const auto attack_start = Clock::now();
          PoisonedTrainingSet poisoned;
          const auto n_train = static_cast<std::size_t>(parts.train.size());
          switch (config.attack.kind) {
            case AttackKind::none:
              poisoned = {parts.train, std::vector<bool>(n_train, false)};
              break;
            case AttackKind::optimal: {
              AttackConfig ac;
              ac.q = q;
              ac.epsilon = config.attack.epsilon;
              ac.box_low = Vector::Constant(data.dim(), config.attack.box_low);
              ac.box_high = Vector::Constant(data.dim(), config.attack.box_high);
              ac.max_outer_iters = config.attack.max_outer_iters;
              ac.gs_tol = config.attack.gs_tol;
              ac.round_binary = config.attack.round_binary;
              ac.step_scale = config.attack.step_scale;
              ac.targets = config.attack.targets;
              ac.singular = config.attack.singular;
              ac.train = train;
              const auto result = run_optimal_attack(parts.train, parts.val, ac, lambda);
              std::vector<bool> flags(n_train, false);
              flags.resize(n_train + q, true);
              poisoned = {concat(parts.train, result.poison.as_dataset()), std::move(flags)};
              break;
            }
            case AttackKind::rlf:
            case AttackKind::ilf: {
              const FlipResult flipped =
                  config.attack.kind == AttackKind::rlf
                      ? rlf(parts.train, {fraction, splitmix64(seed * 1000003ULL + draw)})
                      : ilf(parts.train, lambda, fraction, train);
              std::vector<bool> flags(n_train, false);
              for (auto i : flipped.flipped) flags[i] = true;
              poisoned = {flipped.data, std::move(flags)};
              break;
            }
          }
          const double attack_seconds = seconds_since(attack_start);

          for (const auto& defence : config.defences) {
            const bool randomized =
                defence.kind == DefenceKind::detector && is_randomized(defence.detector.kind);
            const std::size_t runs = randomized ? std::max<std::size_t>(1, config.detector_repetitions) : 1;
            const double alpha = defence.kind == DefenceKind::detector ? defence.alpha : 0.0;
            const CellKey key{attack_name, defence_name(defence), alpha, fraction};
            for (std::size_t run = 0; run < runs; ++run) {
              const auto start = Clock::now();
              const auto outcome = defend_and_train(
                  poisoned, parts.od_train, defence, splitmix64(seed) ^ splitmix64(run + 1), train,
                  config.rls, config.rls_folds, config.attack.kind == AttackKind::rlf);
              RunRecord record;
              record.repetition = rep;
              record.attack = attack_name;
              record.defence = std::get<1>(key);
              record.alpha = alpha;
              record.fraction = fraction;
              record.test_error = test_error(parts.test, outcome.model);
              record.n_training = static_cast<std::size_t>(poisoned.data.size());
              record.n_poison = poisoned.poison_count();
              record.removed_poison = outcome.removed_poison;
              record.removed_genuine = outcome.removed_genuine;
              record.kept = outcome.kept;
              record.seconds = config.record_wall_time ? attack_seconds + seconds_since(start) : 0.0;

              Cell& cell = cells[key];
              cell.errors.push_back(record.test_error);
              cell.removed_poison.push_back(
                  record.n_poison ? static_cast<double>(record.removed_poison) / record.n_poison : 0.0);
              const std::size_t genuine = record.n_training - record.n_poison;
              cell.removed_genuine.push_back(
                  genuine ? static_cast<double>(record.removed_genuine) / genuine : 0.0);
              cell.seconds.push_back(record.seconds);
              report.runs.push_back(std::move(record));
            }
          }
        }
      }
    } catch (const Error& e) {
      const std::string message =
          "repetition " + std::to_string(rep) + " (seed " + std::to_string(seed) + ") failed [" +
          e.kind() + "]: " + e.what();
      std::cerr << "warning: " << message << '\n';
      report.failures.push_back(message);
    }
  }

  for (const auto& [key, cell] : cells) {
    ReportRow row;
    row.dataset = dataset_name;
    std::tie(row.attack, row.defence, row.alpha, row.fraction) = key;
    row.mean_test_error = mean_of(cell.errors);
    row.std_test_error = std_of(cell.errors);
    row.mean_removed_poison_fraction = mean_of(cell.removed_poison);
    row.mean_removed_genuine_fraction = mean_of(cell.removed_genuine);
    row.wall_time = mean_of(cell.seconds);
    report.rows.push_back(std::move(row));
  }
  return report;
}

// --- trajectory demo ----------------------------------------------------

DemoResult run_trajectory_demo(const DemoConfig& config) {
  if (config.mean_pos.size() != 2 || config.mean_neg.size() != 2)
    throw InvalidArgument("trajectory demo needs 2-dimensional data");

  DemoResult out;
  out.train = gen_gaussian_binary(
      {config.mean_pos, config.mean_neg, config.cov_scale, config.train_per_class, config.seed});
  out.val = gen_gaussian_binary({config.mean_pos, config.mean_neg, config.cov_scale,
                                 config.val_per_class, splitmix64(config.seed)});

  AttackConfig ac;
  ac.q = 1;
  ac.epsilon = config.epsilon;
  ac.box_low = Vector::Constant(2, -config.box);
  ac.box_high = Vector::Constant(2, config.box);
  ac.max_outer_iters = config.max_outer_iters;
  ac.gs_tol = config.gs_tol;
  ac.train.lambda = config.lambda;
  out.attack = run_optimal_attack(out.train, out.val, ac, config.lambda);
  out.clean_val_mse = mse_half(out.val, out.attack.clean_model);
  out.poisoned_val_mse = mse_half(out.val, out.attack.model);

  const auto& trace = out.attack.trace;
  const auto start = out.attack.initial_poison.points.row(0);
  out.trajectory.push_back({start(0), start(1), trace.front().objective});
  for (std::size_t i = 1; i < trace.size(); ++i)
    out.trajectory.push_back({trace[i].point(0), trace[i].point(1), trace[i].objective});
  return out;
}

void write_demo_trace(std::ostream& out, const DemoResult& result) {
  out << "iter,x1,x2,objective\n";
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < result.trajectory.size(); ++i) {
    const auto& [x1, x2, obj] = result.trajectory[i];
    out << i << ',' << x1 << ',' << x2 << ',' << obj << '\n';
  }
  out.precision(old_precision);
}

std::string demo_boundaries_json(const DemoResult& result) {
  auto model_json = [](const LinearClassifier& m) {
    return json{{"w", to_std(m.w)}, {"b", m.b}};
  };
  json j{{"clean", model_json(result.attack.clean_model)},
         {"poisoned", model_json(result.attack.model)},
         {"clean_val_mse", result.clean_val_mse},
         {"poisoned_val_mse", result.poisoned_val_mse}};
  return j.dump(2);
}

}  // namespace poisonlab
