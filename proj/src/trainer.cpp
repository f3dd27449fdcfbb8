#include "permnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace permnet {

const std::vector<std::string>& TrainConfig::keys() {
  static const std::vector<std::string> k{
      "s_hidden_per_block", "lambda_hidden", "epochs", "batch_size",
      "learning_rate",      "seed",          "sharing", "supervision"};
  return k;
}

void TrainConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("train config: " + what);
  };
  check(!s_hidden_per_block.empty() && !lambda_hidden.empty(),
        "hidden layer lists must be non-empty");
  for (const auto w : s_hidden_per_block) check(w > 0, "widths must be positive");
  for (const auto w : lambda_hidden) check(w > 0, "widths must be positive");
  check(epochs >= 0, "epochs must be >= 0");
  check(batch_size >= 0, "batch_size must be >= 0");
  check(learning_rate > 0, "learning_rate must be > 0");
  check(frames >= 1 && k_max >= 1 && num_bs >= 1, "network dimensions must be positive");
}

TrainConfig TrainConfig::from_config(const ConfigMap& cfg, const NetworkConfig& net) {
  TrainConfig c;
  auto to_index = [](const std::vector<long long>& v) {
    return std::vector<Index>(v.begin(), v.end());
  };
  c.s_hidden_per_block = to_index(cfg.get_ints(
      "s_hidden_per_block",
      std::vector<long long>(c.s_hidden_per_block.begin(), c.s_hidden_per_block.end())));
  c.lambda_hidden = to_index(cfg.get_ints(
      "lambda_hidden",
      std::vector<long long>(c.lambda_hidden.begin(), c.lambda_hidden.end())));
  c.epochs = static_cast<int>(cfg.get_int("epochs", c.epochs));
  c.batch_size = static_cast<int>(cfg.get_int("batch_size", c.batch_size));
  c.learning_rate = cfg.get_double("learning_rate", c.learning_rate);
  c.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(c.seed)));
  c.sharing = cfg.get_bool("sharing", c.sharing);
  const auto mode = cfg.get_string("supervision", "unsupervised");
  if (mode == "unsupervised") {
    c.mode = Supervision::Unsupervised;
  } else if (mode == "supervised") {
    c.mode = Supervision::Supervised;
  } else {
    throw ConfigError("train config: supervision must be unsupervised|supervised");
  }
  c.frames = net.frames;
  c.k_max = net.k_max;
  c.num_bs = net.num_bs;
  c.validate();
  return c;
}

Sample build_input(const Scenario& sc, int bs, int scenario_id) {
  require_dims(bs >= 0 && bs < sc.num_bs, "build_input: BS index out of range");
  Sample s;
  s.mask = sc.masks[static_cast<std::size_t>(bs)];
  s.rates = sc.norm_rate;
  s.scenario = scenario_id;
  s.bs = bs;
  const Matrix masked = (sc.norm_rate.array() * s.mask.array()).matrix();
  // Transposing makes each user's frames contiguous in column-major order.
  const Matrix by_frame = masked.transpose();
  s.x = Eigen::Map<const Vector>(by_frame.data(), by_frame.size());
  return s;
}

Matrix normalize_plan(const Matrix& raw, const Matrix& rates, int num_active) {
  require_dims(raw.rows() == rates.rows() && raw.cols() == rates.cols(),
               "normalize_plan: raw plan and rates must have the same shape");
  Matrix out = Matrix::Zero(raw.rows(), raw.cols());
  for (Index k = 0; k < raw.rows(); ++k) {
    if (rates.row(k).cwiseAbs().maxCoeff() == 0.0) continue;
    const double denom = raw.row(k).dot(rates.row(k));
    if (!(denom > 0.0)) {
      if (k < num_active) {
        throw std::domain_error("normalize_plan: user " + std::to_string(k) +
                                " has zero delivered volume");
      }
      continue;
    }
    out.row(k) = raw.row(k) / denom;
  }
  return out;
}

TrainState TrainState::init(const TrainConfig& cfg) {
  cfg.validate();
  TrainState st;
  st.config = cfg;
  Rng rng = substream(cfg.seed, Stream::Init);
  const Index tf = cfg.frames;
  const Index kmax = cfg.k_max;
  if (cfg.sharing) {
    std::vector<Index> widths{tf};
    widths.insert(widths.end(), cfg.s_hidden_per_block.begin(), cfg.s_hidden_per_block.end());
    widths.push_back(tf);
    st.dnn_s = Mlp::equivariant(kmax, widths, rng);
  } else {
    std::vector<Index> widths{kmax * tf};
    for (const auto w : cfg.s_hidden_per_block) widths.push_back(kmax * w);
    widths.push_back(kmax * tf);
    st.dnn_s = Mlp::dense(widths, rng);
  }
  std::vector<Index> lw{kmax * tf};
  lw.insert(lw.end(), cfg.lambda_hidden.begin(), cfg.lambda_hidden.end());
  lw.push_back(tf);
  st.dnn_nu = Mlp::dense(lw, rng);
  st.adam_s = AdamState(st.dnn_s.parameter_spans(), cfg.learning_rate);
  st.adam_nu = AdamState(st.dnn_nu.parameter_spans(), cfg.learning_rate);
  return st;
}

std::size_t dnn_s_parameter_count(const TrainConfig& cfg) {
  TrainConfig c = cfg;
  return TrainState::init(c).dnn_s.parameter_count();
}

Vector dnn_s_forward(const TrainState& state, const Sample& sample) {
  return state.dnn_s.forward(sample.x);
}

Vector dnn_lambda_forward(const TrainState& state, const Sample& sample) {
  return state.dnn_nu.forward(sample.x);
}

namespace {

// Inputs of all (scenario, BS) pairs of a batch, column n * N_b + i.
Matrix batch_inputs(std::span<const Scenario> batch, int num_bs) {
  const Scenario& first = batch.front();
  Matrix x(static_cast<Index>(first.k_max) * first.frames,
           static_cast<Index>(batch.size()) * num_bs);
  for (std::size_t n = 0; n < batch.size(); ++n) {
    require_dims(batch[n].num_bs == num_bs && batch[n].k_max == first.k_max &&
                     batch[n].frames == first.frames,
                 "batch scenarios must share dimensions");
    for (int i = 0; i < num_bs; ++i) {
      x.col(static_cast<Index>(n) * num_bs + i) = build_input(batch[n], i).x;
    }
  }
  return x;
}

// Merges per-BS raw outputs into one raw plan: entry (k, j) comes from the
// BS serving user k in frame j.
Matrix merge_raw(const Scenario& sc, const Matrix& raw, Index col0) {
  Matrix merged = Matrix::Zero(sc.k_max, sc.frames);
  for (int k = 0; k < sc.num_users; ++k) {
    for (int j = 0; j < sc.frames; ++j) {
      const int bs = sc.association(k, j);
      if (bs < 0) continue;
      merged(k, j) = raw(static_cast<Index>(k) * sc.frames + j, col0 + bs);
    }
  }
  return merged;
}

struct PlanForward {
  ForwardCache cache_s;
  std::vector<Matrix> merged;  // merged output pre-activations
  std::vector<Matrix> plans;
};

// log(softplus(z)) and sigmoid(z) / softplus(z), both exact to double
// precision where softplus itself would underflow.
double log_softplus(double z) { return z < -40.0 ? z : std::log(softplus(z)); }

double sigmoid_over_softplus(double z) {
  return z < -40.0 ? 1.0 : softplus_derivative(z) / softplus(z);
}

// normalize_plan applied to softplus(z), computed in the log domain so the
// result stays finite however far the pre-activations drift. The plan is
// invariant to shifting a user's row of z, and an adaptive optimizer moves
// freely along such flat directions.
Matrix normalize_from_preact(const Matrix& z, const Matrix& rates, int num_active) {
  Matrix out = Matrix::Zero(z.rows(), z.cols());
  for (Index k = 0; k < num_active; ++k) {
    double m = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < z.cols(); ++j) {
      if (rates(k, j) != 0.0) m = std::max(m, log_softplus(z(k, j)));
    }
    if (!std::isfinite(m)) continue;
    double denom = 0.0;
    for (Index j = 0; j < z.cols(); ++j) {
      out(k, j) = std::exp(log_softplus(z(k, j)) - m);
      denom += out(k, j) * rates(k, j);
    }
    if (!(denom > 0.0)) {
      throw std::domain_error("normalize_plan: user " + std::to_string(k) +
                              " has zero delivered volume");
    }
    out.row(k) /= denom;
  }
  return out;
}

PlanForward forward_plans(const TrainState& state, std::span<const Scenario> batch,
                          const Matrix& x) {
  PlanForward f;
  state.dnn_s.forward(x, &f.cache_s);
  const Matrix& z = f.cache_s.preacts.back();
  const int nb = state.config.num_bs;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    f.merged.push_back(merge_raw(batch[n], z, static_cast<Index>(n) * nb));
    f.plans.push_back(
        normalize_from_preact(f.merged.back(), batch[n].norm_rate, batch[n].num_users));
  }
  return f;
}

// Backpropagates dLoss/dplan through normalization and merging into a
// gradient w.r.t. the DNN-s output pre-activations.
void scatter_plan_gradient(const Scenario& sc, const Matrix& merged, const Matrix& plan,
                           const Matrix& plan_grad, Index col0, double scale,
                           Matrix& preact_grad) {
  for (int k = 0; k < sc.num_users; ++k) {
    const double inner = plan_grad.row(k).dot(plan.row(k));
    for (int j = 0; j < sc.frames; ++j) {
      const int bs = sc.association(k, j);
      if (bs < 0) continue;
      const double d = (plan_grad(k, j) - sc.norm_rate(k, j) * inner) * plan(k, j) *
                       sigmoid_over_softplus(merged(k, j));
      preact_grad(static_cast<Index>(k) * sc.frames + j, col0 + bs) += scale * d;
    }
  }
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw TrainingDiverged(std::string(what) + " is not finite");
  }
}

}  // namespace

Matrix predict_plan(const TrainState& state, const Scenario& sc) {
  const Matrix x = batch_inputs(std::span<const Scenario>(&sc, 1), sc.num_bs);
  return forward_plans(state, std::span<const Scenario>(&sc, 1), x).plans.front();
}

LagrangianResult empirical_lagrangian(const TrainState& state,
                                      std::span<const Scenario> batch,
                                      GradientRequest want) {
  require_dims(!batch.empty(), "empirical_lagrangian: empty batch");
  const int nb = state.config.num_bs;
  const Matrix x = batch_inputs(batch, nb);
  PlanForward f = forward_plans(state, batch, x);
  ForwardCache cache_nu;
  const Matrix nu = state.dnn_nu.forward(x, want.dnn_nu ? &cache_nu : nullptr);

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Matrix preact_grad;
  Matrix nu_grad;
  if (want.dnn_s) preact_grad = Matrix::Zero(f.cache_s.output.rows(), f.cache_s.output.cols());
  if (want.dnn_nu) nu_grad = Matrix::Zero(nu.rows(), nu.cols());

  double total = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const Scenario& sc = batch[n];
    const Matrix& plan = f.plans[n];
    const Index col0 = static_cast<Index>(n) * nb;
    double value = plan.sum();
    Matrix weight = Matrix::Zero(sc.k_max, sc.frames);
    for (int i = 0; i < nb; ++i) {
      const auto& mask = sc.masks[static_cast<std::size_t>(i)];
      const Vector load = (plan.array() * mask.array()).colwise().sum().transpose();
      for (int j = 0; j < sc.frames; ++j) {
        const double mult = nu(j, col0 + i);
        value += mult * (load(j) - 1.0);
        if (want.dnn_nu) nu_grad(j, col0 + i) = inv_n * (load(j) - 1.0);
      }
    }
    total += value;
    if (want.dnn_s) {
      for (int k = 0; k < sc.num_users; ++k) {
        for (int j = 0; j < sc.frames; ++j) {
          const int bs = sc.association(k, j);
          weight(k, j) = 1.0 + (bs >= 0 ? nu(j, col0 + bs) : 0.0);
        }
      }
      scatter_plan_gradient(sc, f.merged[n], plan, weight, col0, inv_n, preact_grad);
    }
  }

  LagrangianResult res;
  res.value = total * inv_n;
  if (want.dnn_s) {
    Mlp g = state.dnn_s.zeros_like();
    state.dnn_s.backward(f.cache_s, preact_grad, g, true);
    res.grad_s = std::move(g);
  }
  if (want.dnn_nu) {
    Mlp g = state.dnn_nu.zeros_like();
    state.dnn_nu.backward(cache_nu, nu_grad, g);
    res.grad_nu = std::move(g);
  }
  return res;
}

LagrangianResult supervised_loss(const TrainState& state,
                                 std::span<const Scenario> batch,
                                 std::span<const Matrix> labels) {
  require_dims(!batch.empty() && labels.size() == batch.size(),
               "supervised_loss: need one label per scenario");
  const int nb = state.config.num_bs;
  const Matrix x = batch_inputs(batch, nb);
  PlanForward f = forward_plans(state, batch, x);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Matrix preact_grad = Matrix::Zero(f.cache_s.output.rows(), f.cache_s.output.cols());
  double total = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const Scenario& sc = batch[n];
    Matrix diff = f.plans[n] - labels[n];
    diff.bottomRows(sc.k_max - sc.num_users).setZero();
    total += diff.squaredNorm();
    scatter_plan_gradient(sc, f.merged[n], f.plans[n], 2.0 * diff,
                          static_cast<Index>(n) * nb, inv_n, preact_grad);
  }
  LagrangianResult res;
  res.value = total * inv_n;
  Mlp g = state.dnn_s.zeros_like();
  state.dnn_s.backward(f.cache_s, preact_grad, g, true);
  res.grad_s = std::move(g);
  return res;
}

namespace {

// One optimizer step on a batch; returns the batch loss before the step.
double train_step(TrainState& state, const std::vector<Scenario>& chunk,
                  const std::vector<Matrix>& chunk_labels, bool supervised) {
  if (supervised) {
    auto res = supervised_loss(state, chunk, chunk_labels);
    check_finite(res.value, "supervised loss");
    auto gs = res.grad_s->parameter_spans();
    adam_step(state.dnn_s.parameter_spans(), gs, state.adam_s, AdamDirection::Descend);
    return res.value;
  }
  // Descent on DNN-s, then ascent on DNN-nu at the updated plan.
  auto res = empirical_lagrangian(state, chunk, {true, false});
  check_finite(res.value, "empirical Lagrangian");
  auto gs = res.grad_s->parameter_spans();
  adam_step(state.dnn_s.parameter_spans(), gs, state.adam_s, AdamDirection::Descend);
  auto res_nu = empirical_lagrangian(state, chunk, {false, true});
  check_finite(res_nu.value, "empirical Lagrangian");
  auto gn = res_nu.grad_nu->parameter_spans();
  adam_step(state.dnn_nu.parameter_spans(), gn, state.adam_nu, AdamDirection::Ascend);
  return res.value;
}

}  // namespace

void train_epochs(TrainState& state, std::span<const Scenario> dataset, int epochs,
                  std::span<const Matrix> labels, const EpochCallback& on_epoch) {
  const TrainConfig& cfg = state.config;
  require_dims(!dataset.empty(), "train: empty dataset");
  const bool supervised = cfg.mode == Supervision::Supervised;
  require_dims(!supervised || labels.size() == dataset.size(),
               "train: supervised mode needs one label per scenario");
  const std::size_t n = dataset.size();
  const std::size_t batch =
      cfg.batch_size <= 0 ? n : std::min<std::size_t>(n, static_cast<std::size_t>(cfg.batch_size));

  std::vector<std::size_t> order(n);
  std::vector<Scenario> chunk;
  std::vector<Matrix> chunk_labels;
  for (int e = 0; e < epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (batch < n) {
      Rng rng = substream(cfg.seed, Stream::Shuffle, static_cast<std::uint64_t>(state.epoch));
      std::shuffle(order.begin(), order.end(), rng);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      chunk.clear();
      chunk_labels.clear();
      for (std::size_t p = start; p < stop; ++p) {
        chunk.push_back(dataset[order[p]]);
        if (supervised) chunk_labels.push_back(labels[order[p]]);
      }
      const double weight = static_cast<double>(stop - start) / static_cast<double>(n);
      try {
        epoch_loss += weight * train_step(state, chunk, chunk_labels, supervised);
      } catch (const std::domain_error& e) {
        // Raw outputs underflowed to zero: the plan network has blown up.
        throw TrainingDiverged("epoch " + std::to_string(state.epoch) + ": " + e.what());
      }
    }
    ++state.epoch;
    state.loss_history.push_back(epoch_loss);
    if (on_epoch && !on_epoch(state)) break;
  }
}

TrainState train(std::span<const Scenario> dataset, const TrainConfig& cfg,
                 std::span<const Matrix> labels, const EpochCallback& on_epoch) {
  TrainState state = TrainState::init(cfg);
  train_epochs(state, dataset, cfg.epochs, labels, on_epoch);
  return state;
}

GapReport evaluate_plans(std::span<const Matrix> plans, std::span<const Scenario> scenarios,
                         std::span<const PlanSolution> oracle) {
  require_dims(plans.size() == scenarios.size() && oracle.size() == scenarios.size(),
               "evaluate: plans, scenarios and oracle must align");
  GapReport rep;
  rep.scenarios = scenarios.size();
  for (std::size_t n = 0; n < scenarios.size(); ++n) {
    const auto r = verify_plan(plans[n], scenarios[n]);
    const auto fixed = repair_plan(plans[n], scenarios[n]);
    rep.raw_mass += plans[n].sum();
    rep.learned_mass += fixed.mass();
    rep.users_short += fixed.users_short;
    rep.optimal_mass += oracle[n].objective;
    rep.mean_capacity_violation += r.capacity_excess;
    rep.max_capacity_violation = std::max(rep.max_capacity_violation, r.capacity_residual);
    rep.mean_qos_residual += r.qos_residual;
  }
  if (!scenarios.empty()) {
    const double inv = 1.0 / static_cast<double>(scenarios.size());
    rep.mean_capacity_violation *= inv;
    rep.mean_qos_residual *= inv;
  }
  if (rep.optimal_mass > 0.0) {
    rep.gap = (rep.learned_mass - rep.optimal_mass) / rep.optimal_mass;
    rep.raw_gap = (rep.raw_mass - rep.optimal_mass) / rep.optimal_mass;
  }
  return rep;
}

GapReport evaluate_gap(const TrainState& state, std::span<const Scenario> scenarios,
                       std::span<const PlanSolution> oracle) {
  std::vector<Matrix> plans;
  plans.reserve(scenarios.size());
  for (const auto& sc : scenarios) plans.push_back(predict_plan(state, sc));
  return evaluate_plans(plans, scenarios, oracle);
}

void save_checkpoint(const std::string& path, const TrainState& state) {
  save_models(path, {{"dnn_s", state.dnn_s}, {"dnn_nu", state.dnn_nu}});
}

namespace {

bool same_architecture(const Mlp& a, const Mlp& b) {
  if (a.layers().size() != b.layers().size()) return false;
  for (std::size_t l = 0; l < a.layers().size(); ++l) {
    const auto& la = a.layers()[l];
    const auto& lb = b.layers()[l];
    if (la.index() != lb.index() || layer_in_dim(la) != layer_in_dim(lb) ||
        layer_out_dim(la) != layer_out_dim(lb) ||
        layer_parameter_count(la) != layer_parameter_count(lb)) {
      return false;
    }
  }
  return true;
}

}  // namespace

TrainState load_checkpoint(const std::string& path, const TrainConfig& cfg) {
  TrainState st = TrainState::init(cfg);
  bool have_s = false, have_nu = false;
  for (auto& m : load_models(path)) {
    Mlp* target = m.name == "dnn_s" ? &st.dnn_s : m.name == "dnn_nu" ? &st.dnn_nu : nullptr;
    if (target == nullptr) continue;
    if (!same_architecture(*target, m.net)) {
      throw std::runtime_error(path + ": network '" + m.name +
                               "' does not match the configured architecture");
    }
    *target = std::move(m.net);
    (m.name == "dnn_s" ? have_s : have_nu) = true;
  }
  if (!have_s || !have_nu) throw std::runtime_error(path + ": missing dnn_s or dnn_nu");
  st.adam_s = AdamState(st.dnn_s.parameter_spans(), cfg.learning_rate);
  st.adam_nu = AdamState(st.dnn_nu.parameter_spans(), cfg.learning_rate);
  return st;
}

}  // namespace permnet
