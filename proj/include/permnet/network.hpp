#pragma once

// A stack of dense and/or equivariant layers with manual backprop, flat
// parameter views for the optimizer, a finite-difference gradient checker,
// and a portable binary model container (see docs/formats.md).

#include "permnet/equivariant.hpp"
#include "permnet/nn.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace permnet {

using Layer = std::variant<DenseLayer, EquivariantLayer>;

Index layer_in_dim(const Layer& layer);
Index layer_out_dim(const Layer& layer);
std::size_t layer_parameter_count(const Layer& layer);

/// Intermediate values kept by a batched forward pass for backprop.
struct ForwardCache {
  std::vector<Matrix> inputs;   // input to layer l
  std::vector<Matrix> preacts;  // pre-activation of layer l
  Matrix output;
};

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<Layer> layers);

  /// Fully connected Softplus network with Glorot init.
  static Mlp dense(const std::vector<Index>& widths, std::mt19937_64& rng,
                   Activation output_activation = Activation::Softplus);
  /// Equivariant stack over `blocks` blocks; widths are per block.
  static Mlp equivariant(Index blocks, const std::vector<Index>& block_widths,
                         std::mt19937_64& rng,
                         Activation output_activation = Activation::Softplus);

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  Index in_dim() const;
  Index out_dim() const;
  std::size_t parameter_count() const;

  /// Batched forward; `cache` may be null when gradients are not needed.
  Matrix forward(const Matrix& x, ForwardCache* cache = nullptr) const;
  Vector forward(const Vector& x) const;

  /// Same-shaped network filled with zeros; used as a gradient holder.
  Mlp zeros_like() const;

  /// Accumulates into `grads` (same shape as *this) the gradient of
  /// sum(upstream .* output) for the batch cached in `cache`. Returns
  /// dLoss/dInput. With `upstream_is_preact`, `upstream` is the gradient
  /// w.r.t. the output layer's pre-activation instead of its output.
  Matrix backward(const ForwardCache& cache, const Matrix& upstream,
                  Mlp& grads, bool upstream_is_preact = false) const;

  /// Views over every weight and bias, in layer order (U, V, bias for
  /// equivariant layers; weights, bias for dense).
  std::vector<std::span<double>> parameter_spans();
  std::vector<std::span<const double>> parameter_spans() const;

  void validate() const;

 private:
  std::vector<Layer> layers_;
};

struct BackpropResult {
  Mlp grads;
  Vector input_grad;
};

/// Gradient of upstream' f(x) w.r.t. every parameter and w.r.t. x.
BackpropResult backprop(const Mlp& net, const Vector& x,
                        const Vector& upstream);

/// Scalar loss of the network output plus its gradient w.r.t. the output.
struct OutputLoss {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

/// |a - b| / max(|a|, |b|, floor); zero when both vanish.
double relative_error(double analytic, double numeric, double floor = 1e-8);

/// Central differences of `f` w.r.t. every entry of `params`.
std::vector<double> central_differences(
    const std::vector<std::span<double>>& params,
    const std::function<double()>& f, double step = 1e-6);

/// Max relative error between analytic and central-difference gradients
/// over all parameters of `net`. Entries below 1e-5 of the largest numeric
/// gradient are measured against that level, where difference noise
/// (about 1e-10 |loss|) would otherwise dominate. `corrupt`, if set, is applied to the
/// analytic gradient first (for fault-injection tests).
double finite_diff_check(Mlp net, const Vector& x, const OutputLoss& loss,
                         double step = 1e-6,
                         const std::function<void(Mlp&)>& corrupt = {});

// Model container ------------------------------------------------------------

struct NamedNetwork {
  std::string name;
  Mlp net;
};

void write_models(std::ostream& os, const std::vector<NamedNetwork>& models);
std::vector<NamedNetwork> read_models(std::istream& is);
void save_models(const std::string& path,
                 const std::vector<NamedNetwork>& models);
std::vector<NamedNetwork> load_models(const std::string& path);

}  // namespace permnet
