#pragma once

// Experiment orchestration shared by the CLI, the Python module and the
// acceptance tests: seeded dataset generation, oracle solving, sample- and
// epoch-complexity sweeps and the method comparison.

#include "permnet/config.hpp"
#include "permnet/edf.hpp"
#include "permnet/lp.hpp"
#include "permnet/trainer.hpp"
#include "permnet/wireless.hpp"

#include <optional>
#include <string>
#include <vector>

namespace permnet {

struct BenchConfig {
  NetworkConfig net;
  TrainConfig train;
  int train_count = 2000;
  int test_count = 100;
  double target_gap = 0.2;
  std::vector<int> sweep_sizes{25, 50, 100, 200, 400, 800, 1600};
  int epoch_budget = 400;
  /// File-size range of the varied-size epoch sweep (1 to 3 MB).
  double varied_file_bits_min = 8e6;
  double varied_file_bits_max = 24e6;
  /// Tag embedded in every output: FNV-1a of the canonical config text.
  std::string config_hash;

  std::uint64_t seed() const { return train.seed; }
  static BenchConfig from_config(const ConfigMap& cfg);
  /// Every key accepted in a config file.
  static std::vector<std::string> keys();
};

/// Draws `count` scenarios from the (seed, stream) substream. Users per
/// scenario are k_max, or uniform in [1, k_max] when `random_users`.
/// Scenarios whose planning LP is infeasible are redrawn, so every returned
/// scenario admits a feasible plan; their oracle solutions are written to
/// `solutions` if given. Throws std::runtime_error if the acceptance rate
/// is hopelessly low (more than 50 draws per accepted scenario).
std::vector<Scenario> generate_scenarios(const NetworkConfig& net, int count,
                                         std::uint64_t seed, Stream stream,
                                         bool random_users,
                                         std::vector<PlanSolution>* solutions = nullptr);

/// Solves every scenario; structurally infeasible ones get status
/// Infeasible instead of throwing.
std::vector<PlanSolution> solve_all(const std::vector<Scenario>& scenarios);

/// Supervision labels: the oracle plans.
std::vector<Matrix> oracle_labels(const std::vector<PlanSolution>& oracle);

struct SizePoint {
  int size = 0;
  GapReport report;
};

struct SampleSweep {
  std::vector<SizePoint> curve;
  std::optional<int> threshold;  // smallest size with gap <= target
};

/// Trains a fresh model on the first `size` scenarios of `pool` for every
/// size (ascending), cfg.epochs epochs each, and evaluates on `test`.
SampleSweep sample_complexity_sweep(const std::vector<Scenario>& pool,
                                    const std::vector<int>& sizes,
                                    const TrainConfig& cfg,
                                    const std::vector<Scenario>& test,
                                    const std::vector<PlanSolution>& oracle,
                                    double target_gap);

struct EpochPoint {
  int epoch = 0;
  double loss = 0.0;
  GapReport report;
};

struct EpochSweep {
  std::vector<EpochPoint> log;
  std::optional<int> epochs_to_target;  // first epoch with gap <= target
  TrainState state;
};

/// Trains for up to `budget` epochs, evaluating after each one. Stops at
/// the first epoch reaching the target if `stop_at_target`.
EpochSweep epoch_sweep(const std::vector<Scenario>& train_set,
                       const TrainConfig& cfg, const std::vector<Scenario>& test,
                       const std::vector<PlanSolution>& oracle, int budget,
                       double target_gap, bool stop_at_target,
                       const std::vector<Matrix>& labels = {});

struct MethodSummary {
  std::string method;
  int trials = 0;
  int users = 0;
  double mean_time_s = 0.0;  // pooled over all users of all trials
  double mean_capacity_violation = 0.0;  // per trial, summed excess load
  double max_capacity_violation = 0.0;
  int incomplete = 0;
};

/// Completion-time comparison on the test scenarios: proposed, supervised
/// (if given), optimal and EDF. Learned plans are timed after feasibility
/// repair (overflow airtime included); their raw capacity violations are
/// reported alongside. The baseline runs EDF on faded slot rates with one
/// Fading substream per trial.
std::vector<MethodSummary> compare_methods(const std::vector<Scenario>& test,
                                           const std::vector<PlanSolution>& oracle,
                                           const TrainState& proposed,
                                           const TrainState* supervised,
                                           const NetworkConfig& net,
                                           std::uint64_t seed);

}  // namespace permnet
