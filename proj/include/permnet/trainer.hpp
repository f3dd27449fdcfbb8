#pragma once

// Unsupervised primal-dual learning of resource allocation plans.
//
// DNN-s maps the masked rates x_i = vec(r .* M_i) seen by BS i to a raw
// positive plan; DNN-nu maps the same input to one nonnegative multiplier
// per frame of BS i. One pair of networks is shared by all BSs.
//
// Per scenario, the raw outputs of the N_b BSs are merged by taking each
// (user, frame) entry from the serving BS, and each user's row is then
// normalized so that sum_j s[k][j] r[k][j] = 1 holds exactly. The training
// cost is the empirical Lagrangian
//
//   L = (1/N) sum_n [ sum_{k,j} s[k][j]
//                     + sum_i sum_j nu_i[j] (sum_k s[k][j] M_i[k][j] - 1) ]
//
// minimized over DNN-s and maximized over DNN-nu with alternating Adam
// steps. A supervised mode instead fits normalized plans to solver labels
// with a mean squared error.

#include "permnet/lp.hpp"
#include "permnet/network.hpp"
#include "permnet/wireless.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace permnet {

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Supervision { Unsupervised, Supervised };

struct TrainConfig {
  /// Hidden widths of DNN-s per user block (total width = k_max * width).
  std::vector<Index> s_hidden_per_block{50, 50};
  std::vector<Index> lambda_hidden{200, 100};
  int epochs = 200;
  /// Scenarios per Adam step; 0 means full batch.
  int batch_size = 0;
  double learning_rate = 0.01;
  std::uint64_t seed = 1;
  bool sharing = true;
  Supervision mode = Supervision::Unsupervised;
  int frames = 30;
  int k_max = 20;
  int num_bs = 4;

  void validate() const;
  static TrainConfig from_config(const ConfigMap& cfg, const NetworkConfig& net);
  static const std::vector<std::string>& keys();
};

/// Network input for BS i of one scenario.
struct Sample {
  Vector x;        // k_max * T_f, user-major blocks of length T_f
  Matrix mask;     // k_max x T_f, M_i
  Matrix rates;    // k_max x T_f, normalized rates r used by normalization
  int scenario = 0;
  int bs = 0;
};

/// x_i = vec(r .* M_i) with user blocks of length T_f (column-major vec of
/// the T_f x k_max rate matrix).
Sample build_input(const Scenario& sc, int bs, int scenario_id = 0);

/// s[k][j] = raw[k][j] / sum_t raw[k][t] r[k][t]. Rows with all-zero rates
/// become zero. Throws std::domain_error if an active row (k < num_active)
/// has a zero denominator despite nonzero rates.
Matrix normalize_plan(const Matrix& raw, const Matrix& rates, int num_active);

struct TrainState {
  Mlp dnn_s;
  Mlp dnn_nu;
  AdamState adam_s;
  AdamState adam_nu;
  int epoch = 0;
  std::vector<double> loss_history;
  TrainConfig config;

  /// Fresh networks initialized from the Init stream of config.seed.
  static TrainState init(const TrainConfig& cfg);
};

/// Raw DNN-s output for one sample (length k_max * T_f, all > 0).
Vector dnn_s_forward(const TrainState& state, const Sample& sample);
/// DNN-nu output for one sample (length T_f, all >= 0).
Vector dnn_lambda_forward(const TrainState& state, const Sample& sample);

/// Normalized plan (k_max x T_f) for a scenario.
Matrix predict_plan(const TrainState& state, const Scenario& sc);

struct LagrangianResult {
  double value = 0.0;
  std::optional<Mlp> grad_s;
  std::optional<Mlp> grad_nu;
};

struct GradientRequest {
  bool dnn_s = true;
  bool dnn_nu = true;
};

/// Empirical Lagrangian over a batch of scenarios, with gradients.
LagrangianResult empirical_lagrangian(const TrainState& state,
                                      std::span<const Scenario> batch,
                                      GradientRequest want = {});

/// Mean squared plan error against labels (supervised mode), with the
/// gradient w.r.t. DNN-s.
LagrangianResult supervised_loss(const TrainState& state,
                                 std::span<const Scenario> batch,
                                 std::span<const Matrix> labels);

/// Called after each epoch; return false to stop training early.
using EpochCallback = std::function<bool(const TrainState&)>;

/// Runs cfg.epochs epochs. Supervised mode requires one label per scenario.
TrainState train(std::span<const Scenario> dataset, const TrainConfig& cfg,
                 std::span<const Matrix> labels = {},
                 const EpochCallback& on_epoch = {});

/// Continues training an existing state for `epochs` more epochs.
void train_epochs(TrainState& state, std::span<const Scenario> dataset,
                  int epochs, std::span<const Matrix> labels = {},
                  const EpochCallback& on_epoch = {});

struct GapReport {
  double gap = 0.0;      // (repaired learned mass - optimal mass) / optimal mass
  double raw_gap = 0.0;  // same, before feasibility repair
  double mean_capacity_violation = 0.0;  // mean over scenarios of summed excess load
  double max_capacity_violation = 0.0;
  double mean_qos_residual = 0.0;
  double learned_mass = 0.0;   // after repair
  double raw_mass = 0.0;       // before repair
  double optimal_mass = 0.0;
  int users_short = 0;         // users the repair could not fit in the window
  std::size_t scenarios = 0;
};

/// Compares given plans with oracle solutions on the same scenarios.
GapReport evaluate_plans(std::span<const Matrix> plans,
                         std::span<const Scenario> scenarios,
                         std::span<const PlanSolution> oracle);

GapReport evaluate_gap(const TrainState& state,
                       std::span<const Scenario> scenarios,
                       std::span<const PlanSolution> oracle);

/// Trainable parameters of DNN-s for the given layout.
std::size_t dnn_s_parameter_count(const TrainConfig& cfg);

void save_checkpoint(const std::string& path, const TrainState& state);
/// Loads networks; optimizer moments start fresh.
TrainState load_checkpoint(const std::string& path, const TrainConfig& cfg);

}  // namespace permnet
