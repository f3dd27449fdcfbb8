#include "permnet/network.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace permnet {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::span<double> span_of(Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<double> span_of(Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

Index layer_in_dim(const Layer& layer) {
  return std::visit([](const auto& l) { return l.in_dim(); }, layer);
}

Index layer_out_dim(const Layer& layer) {
  return std::visit([](const auto& l) { return l.out_dim(); }, layer);
}

std::size_t layer_parameter_count(const Layer& layer) {
  return std::visit([](const auto& l) { return l.parameter_count(); }, layer);
}

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
  validate();
}

Mlp Mlp::dense(const std::vector<Index>& widths, std::mt19937_64& rng,
               Activation output_activation) {
  require_dims(widths.size() >= 2, "Mlp::dense: need at least two widths");
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const bool last = l + 2 == widths.size();
    layers.emplace_back(DenseLayer::glorot(
        widths[l], widths[l + 1],
        last ? output_activation : Activation::Softplus, rng));
  }
  return Mlp(std::move(layers));
}

Mlp Mlp::equivariant(Index blocks, const std::vector<Index>& block_widths,
                     std::mt19937_64& rng, Activation output_activation) {
  require_dims(block_widths.size() >= 2,
               "Mlp::equivariant: need at least two widths");
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < block_widths.size(); ++l) {
    const bool last = l + 2 == block_widths.size();
    layers.emplace_back(EquivariantLayer::glorot(
        blocks, block_widths[l], block_widths[l + 1],
        last ? output_activation : Activation::Softplus, rng));
  }
  return Mlp(std::move(layers));
}

Index Mlp::in_dim() const {
  return layers_.empty() ? 0 : layer_in_dim(layers_.front());
}

Index Mlp::out_dim() const {
  return layers_.empty() ? 0 : layer_out_dim(layers_.back());
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += layer_parameter_count(l);
  return n;
}

void Mlp::validate() const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    std::visit([](const auto& layer) { layer.validate(); }, layers_[l]);
    if (l > 0) {
      require_dims(layer_out_dim(layers_[l - 1]) == layer_in_dim(layers_[l]),
                   "Mlp: layer " + std::to_string(l) +
                       " input does not match previous output");
    }
  }
}

Matrix Mlp::forward(const Matrix& x, ForwardCache* cache) const {
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->preacts.clear();
  }
  Matrix h = x;
  for (const auto& layer : layers_) {
    Matrix z = std::visit(
        Overloaded{
            [&](const DenseLayer& l) { return dense_preactivation(l, h); },
            [&](const EquivariantLayer& l) { return eq_preactivation(l, h); }},
        layer);
    if (cache != nullptr) {
      cache->inputs.push_back(std::move(h));
      cache->preacts.push_back(z);
    }
    std::visit([&](const auto& l) { activate(l.activation, z); }, layer);
    h = std::move(z);
  }
  if (cache != nullptr) cache->output = h;
  return h;
}

Vector Mlp::forward(const Vector& x) const {
  return forward(Matrix(x), nullptr).col(0);
}

Mlp Mlp::zeros_like() const {
  Mlp out = *this;
  for (auto& span : out.parameter_spans()) {
    std::fill(span.begin(), span.end(), 0.0);
  }
  return out;
}

Matrix Mlp::backward(const ForwardCache& cache, const Matrix& upstream,
                     Mlp& grads, bool upstream_is_preact) const {
  require_dims(cache.inputs.size() == layers_.size(),
               "Mlp::backward: cache does not match network");
  require_dims(upstream.rows() == out_dim() &&
                   upstream.cols() == cache.output.cols(),
               "Mlp::backward: upstream shape mismatch");
  Matrix up = upstream;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    Matrix down;
    Layer identity_view;
    const Layer* layer = &layers_[i];
    if (upstream_is_preact && i + 1 == layers_.size()) {
      identity_view = layers_[i];
      std::visit([](auto& l) { l.activation = Activation::Identity; }, identity_view);
      layer = &identity_view;
    }
    std::visit(
        Overloaded{
            [&](const DenseLayer& l) {
              auto g = dense_backward(l, cache.inputs[i], cache.preacts[i],
                                      std::move(up), &down);
              auto& target = std::get<DenseLayer>(grads.layers_[i]);
              target.weights += g.weights;
              target.bias += g.bias;
            },
            [&](const EquivariantLayer& l) {
              auto g = eq_backward(l, cache.inputs[i], cache.preacts[i],
                                   std::move(up), &down);
              auto& target = std::get<EquivariantLayer>(grads.layers_[i]);
              target.U += g.U;
              target.V += g.V;
              target.bias += g.bias;
            }},
        *layer);
    up = std::move(down);
  }
  return up;
}

std::vector<std::span<double>> Mlp::parameter_spans() {
  std::vector<std::span<double>> spans;
  for (auto& layer : layers_) {
    std::visit(Overloaded{[&](DenseLayer& l) {
                            spans.push_back(span_of(l.weights));
                            spans.push_back(span_of(l.bias));
                          },
                          [&](EquivariantLayer& l) {
                            spans.push_back(span_of(l.U));
                            spans.push_back(span_of(l.V));
                            spans.push_back(span_of(l.bias));
                          }},
               layer);
  }
  return spans;
}

std::vector<std::span<const double>> Mlp::parameter_spans() const {
  auto spans = const_cast<Mlp*>(this)->parameter_spans();
  return {spans.begin(), spans.end()};
}

BackpropResult backprop(const Mlp& net, const Vector& x,
                        const Vector& upstream) {
  require_dims(upstream.size() == net.out_dim(),
               "backprop: upstream length must equal output length");
  ForwardCache cache;
  net.forward(Matrix(x), &cache);
  BackpropResult result{net.zeros_like(), {}};
  result.input_grad = net.backward(cache, upstream, result.grads).col(0);
  return result;
}

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  const double diff = std::abs(analytic - numeric);
  if (diff == 0.0) return 0.0;
  return diff / scale;
}

std::vector<double> central_differences(
    const std::vector<std::span<double>>& params,
    const std::function<double()>& f, double step) {
  std::vector<double> out;
  for (const auto& p : params) {
    for (auto& v : p) {
      const double saved = v;
      v = saved + step;
      const double plus = f();
      v = saved - step;
      const double minus = f();
      v = saved;
      out.push_back((plus - minus) / (2.0 * step));
    }
  }
  return out;
}

double finite_diff_check(Mlp net, const Vector& x, const OutputLoss& loss,
                         double step,
                         const std::function<void(Mlp&)>& corrupt) {
  const Vector y = net.forward(x);
  auto [grads, input_grad] = backprop(net, x, loss.gradient(y));
  if (corrupt) corrupt(grads);

  const auto numeric = central_differences(
      net.parameter_spans(), [&] { return loss.value(net.forward(x)); },
      step);
  double largest = 0.0;
  for (const double n : numeric) largest = std::max(largest, std::abs(n));
  const double floor = std::max(1e-8, 1e-5 * largest);
  double worst = 0.0;
  std::size_t idx = 0;
  for (const auto& g : grads.parameter_spans()) {
    for (const double a : g) {
      worst = std::max(worst, relative_error(a, numeric[idx++], floor));
    }
  }
  return worst;
}

// Model container ------------------------------------------------------------
//
// Little-endian; see docs/formats.md.

namespace {

constexpr std::array<char, 4> kMagic{'P', 'M', 'N', 'T'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint8_t kDenseTag = 0;
constexpr std::uint8_t kEquivariantTag = 1;

static_assert(std::endian::native == std::endian::little,
              "model container assumes a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("model container: truncated input");
  return v;
}

void put_doubles(std::ostream& os, const double* data, Index n) {
  os.write(reinterpret_cast<const char*>(data),
           static_cast<std::streamsize>(n * sizeof(double)));
}

void get_doubles(std::istream& is, double* data, Index n) {
  is.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("model container: truncated input");
}

std::uint32_t checked_dim(Index d) {
  return static_cast<std::uint32_t>(d);
}

void write_layer(std::ostream& os, const Layer& layer) {
  std::visit(Overloaded{[&](const DenseLayer& l) {
                          put<std::uint8_t>(os, kDenseTag);
                          put<std::uint8_t>(
                              os, static_cast<std::uint8_t>(l.activation));
                          put<std::uint32_t>(os, checked_dim(l.in_dim()));
                          put<std::uint32_t>(os, checked_dim(l.out_dim()));
                          put_doubles(os, l.weights.data(), l.weights.size());
                          put_doubles(os, l.bias.data(), l.bias.size());
                        },
                        [&](const EquivariantLayer& l) {
                          put<std::uint8_t>(os, kEquivariantTag);
                          put<std::uint8_t>(
                              os, static_cast<std::uint8_t>(l.activation));
                          put<std::uint32_t>(os, checked_dim(l.blocks));
                          put<std::uint32_t>(os, checked_dim(l.block_in()));
                          put<std::uint32_t>(os, checked_dim(l.block_out()));
                          put_doubles(os, l.U.data(), l.U.size());
                          put_doubles(os, l.V.data(), l.V.size());
                          put_doubles(os, l.bias.data(), l.bias.size());
                        }},
             layer);
}

Activation read_activation(std::istream& is) {
  const auto a = get<std::uint8_t>(is);
  if (a > 1) throw std::runtime_error("model container: unknown activation");
  return static_cast<Activation>(a);
}

Layer read_layer(std::istream& is) {
  const auto tag = get<std::uint8_t>(is);
  const auto act = read_activation(is);
  if (tag == kDenseTag) {
    const auto in = get<std::uint32_t>(is);
    const auto out = get<std::uint32_t>(is);
    DenseLayer l(in, out, act);
    get_doubles(is, l.weights.data(), l.weights.size());
    get_doubles(is, l.bias.data(), l.bias.size());
    return l;
  }
  if (tag == kEquivariantTag) {
    const auto k = get<std::uint32_t>(is);
    const auto in = get<std::uint32_t>(is);
    const auto out = get<std::uint32_t>(is);
    EquivariantLayer l(k, in, out, act);
    get_doubles(is, l.U.data(), l.U.size());
    get_doubles(is, l.V.data(), l.V.size());
    get_doubles(is, l.bias.data(), l.bias.size());
    return l;
  }
  throw std::runtime_error("model container: unknown layer kind " +
                           std::to_string(tag));
}

}  // namespace

void write_models(std::ostream& os, const std::vector<NamedNetwork>& models) {
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kFormatVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(models.size()));
  for (const auto& m : models) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(m.name.size()));
    os.write(m.name.data(), static_cast<std::streamsize>(m.name.size()));
    put<std::uint32_t>(os,
                       static_cast<std::uint32_t>(m.net.layers().size()));
    for (const auto& layer : m.net.layers()) write_layer(os, layer);
  }
}

std::vector<NamedNetwork> read_models(std::istream& is) {
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) {
    throw std::runtime_error("model container: bad magic");
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kFormatVersion) {
    throw std::runtime_error("model container: unsupported version " +
                             std::to_string(version));
  }
  const auto count = get<std::uint32_t>(is);
  std::vector<NamedNetwork> models;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    const auto n_layers = get<std::uint32_t>(is);
    std::vector<Layer> layers;
    for (std::uint32_t l = 0; l < n_layers; ++l) {
      layers.push_back(read_layer(is));
    }
    models.push_back({std::move(name), Mlp(std::move(layers))});
  }
  return models;
}

void save_models(const std::string& path,
                 const std::vector<NamedNetwork>& models) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_models(os, models);
}

std::vector<NamedNetwork> load_models(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_models(is);
}

}  // namespace permnet
