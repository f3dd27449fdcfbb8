#include "permnet/bench.hpp"

#include <algorithm>
#include <stdexcept>

namespace permnet {

std::vector<std::string> BenchConfig::keys() {
  std::vector<std::string> k = NetworkConfig::keys();
  const auto& t = TrainConfig::keys();
  k.insert(k.end(), t.begin(), t.end());
  for (const char* extra : {"train_count", "test_count", "target_gap", "sweep_sizes",
                            "epoch_budget", "varied_file_bits_min", "varied_file_bits_max"}) {
    k.emplace_back(extra);
  }
  return k;
}

BenchConfig BenchConfig::from_config(const ConfigMap& cfg) {
  cfg.reject_unknown(keys());
  BenchConfig b;
  b.net = NetworkConfig::from_config(cfg);
  b.train = TrainConfig::from_config(cfg, b.net);
  b.train_count = static_cast<int>(cfg.get_int("train_count", b.train_count));
  b.test_count = static_cast<int>(cfg.get_int("test_count", b.test_count));
  b.target_gap = cfg.get_double("target_gap", b.target_gap);
  const auto sizes = cfg.get_ints(
      "sweep_sizes", std::vector<long long>(b.sweep_sizes.begin(), b.sweep_sizes.end()));
  b.sweep_sizes.assign(sizes.begin(), sizes.end());
  b.epoch_budget = static_cast<int>(cfg.get_int("epoch_budget", b.epoch_budget));
  b.varied_file_bits_min = cfg.get_double("varied_file_bits_min", b.varied_file_bits_min);
  b.varied_file_bits_max = cfg.get_double("varied_file_bits_max", b.varied_file_bits_max);

  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("bench config: " + what);
  };
  check(b.train_count >= 1 && b.test_count >= 1, "train_count and test_count must be >= 1");
  check(b.target_gap >= 0.0, "target_gap must be >= 0");
  check(!b.sweep_sizes.empty(), "sweep_sizes must be non-empty");
  check(std::is_sorted(b.sweep_sizes.begin(), b.sweep_sizes.end()) &&
            b.sweep_sizes.front() >= 1,
        "sweep_sizes must be positive and ascending");
  check(b.epoch_budget >= 1, "epoch_budget must be >= 1");
  check(b.varied_file_bits_min > 0 && b.varied_file_bits_min <= b.varied_file_bits_max,
        "varied file size range is invalid");
  b.config_hash = hex64(fnv1a(cfg.canonical()));
  return b;
}

std::vector<Scenario> generate_scenarios(const NetworkConfig& net, int count,
                                         std::uint64_t seed, Stream stream,
                                         bool random_users,
                                         std::vector<PlanSolution>* solutions) {
  if (count < 0) throw std::invalid_argument("generate_scenarios: count must be >= 0");
  net.validate();
  Rng rng = substream(seed, stream);
  std::uniform_int_distribution<int> users(1, net.k_max);
  std::vector<Scenario> out;
  if (solutions) solutions->clear();
  const long long max_draws = 50LL * std::max(count, 1);
  long long draws = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++draws > max_draws) {
      throw std::runtime_error(
          "generate_scenarios: too few feasible scenarios; the network is overloaded "
          "for this file size and window");
    }
    const int k = random_users ? users(rng) : net.k_max;
    Scenario sc = gen_scenario(rng, k, net);
    PlanSolution sol;
    try {
      sol = solve_plan(sc);
    } catch (const StructurallyInfeasible&) {
      continue;
    }
    if (sol.status != LpStatus::Optimal) continue;
    out.push_back(std::move(sc));
    if (solutions) solutions->push_back(std::move(sol));
  }
  return out;
}

std::vector<PlanSolution> solve_all(const std::vector<Scenario>& scenarios) {
  std::vector<PlanSolution> out;
  out.reserve(scenarios.size());
  for (const auto& sc : scenarios) {
    try {
      out.push_back(solve_plan(sc));
    } catch (const StructurallyInfeasible&) {
      PlanSolution p;
      p.status = LpStatus::Infeasible;
      p.plan = Matrix::Zero(sc.k_max, sc.frames);
      p.lp.status = LpStatus::Infeasible;
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<Matrix> oracle_labels(const std::vector<PlanSolution>& oracle) {
  std::vector<Matrix> labels;
  labels.reserve(oracle.size());
  for (const auto& p : oracle) labels.push_back(p.plan);
  return labels;
}

SampleSweep sample_complexity_sweep(const std::vector<Scenario>& pool,
                                    const std::vector<int>& sizes, const TrainConfig& cfg,
                                    const std::vector<Scenario>& test,
                                    const std::vector<PlanSolution>& oracle,
                                    double target_gap) {
  if (!std::is_sorted(sizes.begin(), sizes.end())) {
    throw std::invalid_argument("sample_complexity_sweep: sizes must be ascending");
  }
  SampleSweep out;
  for (const int size : sizes) {
    if (size < 1 || size > static_cast<int>(pool.size())) {
      throw std::invalid_argument("sample_complexity_sweep: size " + std::to_string(size) +
                                  " outside the training pool");
    }
    const std::span<const Scenario> subset(pool.data(), static_cast<std::size_t>(size));
    const TrainState st = train(subset, cfg);
    SizePoint p{size, evaluate_gap(st, test, oracle)};
    if (!out.threshold && p.report.gap <= target_gap) out.threshold = size;
    out.curve.push_back(p);
  }
  return out;
}

EpochSweep epoch_sweep(const std::vector<Scenario>& train_set, const TrainConfig& cfg,
                       const std::vector<Scenario>& test,
                       const std::vector<PlanSolution>& oracle, int budget,
                       double target_gap, bool stop_at_target,
                       const std::vector<Matrix>& labels) {
  EpochSweep out;
  out.state = TrainState::init(cfg);
  train_epochs(out.state, train_set, budget, labels, [&](const TrainState& st) {
    EpochPoint p{st.epoch, st.loss_history.back(), evaluate_gap(st, test, oracle)};
    const bool hit = p.report.gap <= target_gap;
    if (hit && !out.epochs_to_target) out.epochs_to_target = st.epoch;
    out.log.push_back(p);
    return !(hit && stop_at_target);
  });
  return out;
}

std::vector<MethodSummary> compare_methods(const std::vector<Scenario>& test,
                                           const std::vector<PlanSolution>& oracle,
                                           const TrainState& proposed,
                                           const TrainState* supervised,
                                           const NetworkConfig& net, std::uint64_t seed) {
  if (oracle.size() != test.size()) {
    throw std::invalid_argument("compare_methods: one oracle solution per scenario required");
  }
  MethodSummary opt{"optimal"}, prop{"proposed"}, sup{"supervised"}, base{"baseline"};
  double opt_time = 0.0, prop_time = 0.0, sup_time = 0.0, base_time = 0.0;

  auto learned = [&](const TrainState& st, const Scenario& sc, MethodSummary& m,
                     double& time) {
    const Matrix plan = predict_plan(st, sc);
    const auto report = verify_plan(plan, sc);
    const auto fixed = repair_plan(plan, sc);
    time += net.frame_s * fixed.mass();
    m.mean_capacity_violation += report.capacity_excess;
    m.max_capacity_violation = std::max(m.max_capacity_violation, report.capacity_residual);
    m.incomplete += fixed.users_short;
  };

  for (std::size_t n = 0; n < test.size(); ++n) {
    const Scenario& sc = test[n];
    if (oracle[n].status != LpStatus::Optimal) {
      throw std::invalid_argument("compare_methods: test scenario " + std::to_string(n) +
                                  " has no optimal plan");
    }
    const SimOutcome o = execute_plan(oracle[n].plan, sc, net);
    for (const double t : o.time_s) opt_time += t;
    opt.incomplete += o.incomplete();
    opt.max_capacity_violation =
        std::max(opt.max_capacity_violation, o.violations.capacity_residual);
    opt.mean_capacity_violation += o.violations.capacity_excess;

    learned(proposed, sc, prop, prop_time);
    if (supervised) learned(*supervised, sc, sup, sup_time);

    Rng fading = substream(seed, Stream::Fading, n);
    const SimOutcome e = edf_schedule(sc, fading, net);
    for (const double t : e.time_s) base_time += t;
    base.incomplete += e.incomplete();
  }

  int users = 0;
  for (const auto& sc : test) users += sc.num_users;
  const int trials = static_cast<int>(test.size());
  auto finish = [&](MethodSummary& m, double time) {
    m.trials = trials;
    m.users = users;
    m.mean_time_s = users > 0 ? time / users : 0.0;
    if (trials > 0) m.mean_capacity_violation /= trials;
  };
  finish(opt, opt_time);
  finish(prop, prop_time);
  finish(base, base_time);
  std::vector<MethodSummary> out{prop};
  if (supervised) {
    finish(sup, sup_time);
    out.push_back(sup);
  }
  out.push_back(opt);
  out.push_back(base);
  return out;
}

}  // namespace permnet
