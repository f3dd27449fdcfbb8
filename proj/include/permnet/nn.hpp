#pragma once

// Dense feed-forward building blocks: Softplus activation, fully connected
// layers with hand-written reverse-mode gradients, and the Adam optimizer.
//
// Matrices are Eigen column-major doubles. Batched operations take one
// sample per column, so an input batch of N samples of width d is a d x N
// matrix.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace permnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void require_dims(bool ok, const std::string& what);

enum class Activation : std::uint8_t { Softplus = 0, Identity = 1 };

/// log(1 + exp(x)), overflow-safe above x = 30.
double softplus(double x);
/// d/dx softplus(x), i.e. the logistic sigmoid.
double softplus_derivative(double x);

/// Applies `act` elementwise in place.
void activate(Activation act, Matrix& z);
/// Multiplies `upstream` in place by act'(z).
void scale_by_derivative(Activation act, const Matrix& z, Matrix& upstream);

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::Softplus;

  DenseLayer() = default;
  DenseLayer(Index in_dim, Index out_dim, Activation act);

  /// Glorot-uniform weights, zero bias.
  static DenseLayer glorot(Index in_dim, Index out_dim, Activation act,
                           std::mt19937_64& rng);

  Index in_dim() const { return weights.cols(); }
  Index out_dim() const { return weights.rows(); }
  std::size_t parameter_count() const {
    return static_cast<std::size_t>(weights.size() + bias.size());
  }
  void validate() const;
};

/// Pre-activation W x + b for a batch (one sample per column).
Matrix dense_preactivation(const DenseLayer& layer, const Matrix& x);
/// g(W x + b) for a single input vector.
Vector dense_forward(const DenseLayer& layer, const Vector& x);

struct DenseGrad {
  Matrix weights;
  Vector bias;
};

/// Given the batch input, its pre-activation and dLoss/dOutput, returns
/// parameter gradients (summed over the batch) and writes dLoss/dInput.
DenseGrad dense_backward(const DenseLayer& layer, const Matrix& x,
                         const Matrix& preact, Matrix upstream,
                         Matrix* input_grad);

enum class AdamDirection { Descend, Ascend };

struct AdamState {
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 0.01;

  AdamState() = default;
  /// Zero moments shaped like `params`.
  explicit AdamState(std::span<const std::span<double>> params,
                     double lr = 0.01);
};

/// One Adam update with bias correction. Ascent applies the descent rule to
/// the negated gradient.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<double>> grads, AdamState& state,
               AdamDirection direction);

}  // namespace permnet
