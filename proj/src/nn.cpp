#include "permnet/nn.hpp"

#include <cmath>

namespace permnet {

void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

double softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double softplus_derivative(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void activate(Activation act, Matrix& z) {
  if (act == Activation::Identity) return;
  z = z.unaryExpr([](double v) { return softplus(v); });
}

void scale_by_derivative(Activation act, const Matrix& z, Matrix& upstream) {
  if (act == Activation::Identity) return;
  upstream.array() *=
      z.unaryExpr([](double v) { return softplus_derivative(v); }).array();
}

DenseLayer::DenseLayer(Index in_dim, Index out_dim, Activation act)
    : weights(Matrix::Zero(out_dim, in_dim)),
      bias(Vector::Zero(out_dim)),
      activation(act) {}

DenseLayer DenseLayer::glorot(Index in_dim, Index out_dim, Activation act,
                              std::mt19937_64& rng) {
  DenseLayer layer(in_dim, out_dim, act);
  const double limit =
      std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  std::uniform_real_distribution<double> dist(-limit, limit);
  // Column-major fill order keeps initialization tied to the storage layout.
  for (Index i = 0; i < layer.weights.size(); ++i) {
    layer.weights.data()[i] = dist(rng);
  }
  return layer;
}

void DenseLayer::validate() const {
  require_dims(bias.size() == weights.rows(),
               "dense layer: bias length must equal weight rows");
}

Matrix dense_preactivation(const DenseLayer& layer, const Matrix& x) {
  require_dims(x.rows() == layer.in_dim(),
               "dense_forward: input length " + std::to_string(x.rows()) +
                   " != layer input " + std::to_string(layer.in_dim()));
  Matrix z = layer.weights * x;
  z.colwise() += layer.bias;
  return z;
}

Vector dense_forward(const DenseLayer& layer, const Vector& x) {
  Matrix z = dense_preactivation(layer, x);
  activate(layer.activation, z);
  return z.col(0);
}

DenseGrad dense_backward(const DenseLayer& layer, const Matrix& x,
                         const Matrix& preact, Matrix upstream,
                         Matrix* input_grad) {
  require_dims(upstream.rows() == layer.out_dim() &&
                   upstream.cols() == x.cols(),
               "dense_backward: upstream shape mismatch");
  scale_by_derivative(layer.activation, preact, upstream);
  DenseGrad g;
  g.weights.noalias() = upstream * x.transpose();
  g.bias = upstream.rowwise().sum();
  if (input_grad != nullptr) {
    input_grad->noalias() = layer.weights.transpose() * upstream;
  }
  return g;
}

AdamState::AdamState(std::span<const std::span<double>> params, double lr)
    : learning_rate(lr) {
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const auto& p : params) {
    first_moment.push_back(Vector::Zero(static_cast<Index>(p.size())));
    second_moment.push_back(Vector::Zero(static_cast<Index>(p.size())));
  }
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<double>> grads, AdamState& state,
               AdamDirection direction) {
  require_dims(params.size() == grads.size() &&
                   params.size() == state.first_moment.size(),
               "adam_step: parameter/gradient/state tensor count mismatch");
  ++state.step;
  const double sign = direction == AdamDirection::Ascend ? -1.0 : 1.0;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    require_dims(params[i].size() == grads[i].size() &&
                     static_cast<Index>(params[i].size()) == m.size(),
                 "adam_step: tensor shape mismatch");
    for (Index j = 0; j < m.size(); ++j) {
      const double g = sign * grads[i][static_cast<std::size_t>(j)];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      params[i][static_cast<std::size_t>(j)] -=
          state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace permnet
