#include "permnet/equivariant.hpp"

#include <cmath>
#include <stdexcept>

namespace permnet {

EquivariantLayer::EquivariantLayer(Index k, Index block_in_dim,
                                   Index block_out_dim, Activation act)
    : U(Matrix::Zero(block_out_dim, block_in_dim)),
      V(Matrix::Zero(block_out_dim, block_in_dim)),
      bias(Vector::Zero(block_out_dim)),
      blocks(k),
      activation(act) {
  if (k < 1) throw DimensionError("equivariant layer: block count must be >= 1");
}

EquivariantLayer EquivariantLayer::glorot(Index k, Index block_in_dim,
                                          Index block_out_dim, Activation act,
                                          std::mt19937_64& rng) {
  EquivariantLayer layer(k, block_in_dim, block_out_dim, act);
  const double limit = std::sqrt(
      6.0 / static_cast<double>(k * block_in_dim + k * block_out_dim));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Index i = 0; i < layer.U.size(); ++i) layer.U.data()[i] = dist(rng);
  for (Index i = 0; i < layer.V.size(); ++i) layer.V.data()[i] = dist(rng);
  return layer;
}

void EquivariantLayer::validate() const {
  require_dims(blocks >= 1, "equivariant layer: block count must be >= 1");
  require_dims(U.rows() == V.rows() && U.cols() == V.cols(),
               "equivariant layer: U and V must have identical shape");
  require_dims(bias.size() == U.rows(),
               "equivariant layer: bias length must equal block output width");
}

Matrix eq_preactivation(const EquivariantLayer& layer, const Matrix& h) {
  const Index din = layer.block_in();
  const Index dout = layer.block_out();
  require_dims(h.rows() == layer.in_dim(),
               "eq_forward: input length " + std::to_string(h.rows()) +
                   " != K*d_in = " + std::to_string(layer.in_dim()));
  Matrix block_sum = Matrix::Zero(din, h.cols());
  for (Index k = 0; k < layer.blocks; ++k) {
    block_sum += h.middleRows(k * din, din);
  }
  Matrix shared = layer.V * block_sum;
  shared.colwise() += layer.bias;
  const Matrix diff = layer.U - layer.V;
  Matrix z(layer.out_dim(), h.cols());
  for (Index k = 0; k < layer.blocks; ++k) {
    z.middleRows(k * dout, dout).noalias() = diff * h.middleRows(k * din, din);
    z.middleRows(k * dout, dout) += shared;
  }
  return z;
}

Vector eq_forward(const EquivariantLayer& layer, const Vector& h) {
  Matrix z = eq_preactivation(layer, h);
  activate(layer.activation, z);
  return z.col(0);
}

EquivariantGrad eq_backward(const EquivariantLayer& layer, const Matrix& h,
                            const Matrix& preact, Matrix upstream,
                            Matrix* input_grad) {
  const Index din = layer.block_in();
  const Index dout = layer.block_out();
  require_dims(h.rows() == layer.in_dim() &&
                   upstream.rows() == layer.out_dim() &&
                   upstream.cols() == h.cols(),
               "eq_backward: shape mismatch");
  scale_by_derivative(layer.activation, preact, upstream);

  // With delta_k the pre-activation gradient of block k, D = sum_k delta_k
  // and s = sum_k h^k:
  //   dU = sum_k delta_k h^k',  dV = D s' - dU,  db = D 1
  Matrix block_sum = Matrix::Zero(din, h.cols());
  Matrix delta_sum = Matrix::Zero(dout, h.cols());
  EquivariantGrad g;
  g.U = Matrix::Zero(dout, din);
  for (Index k = 0; k < layer.blocks; ++k) {
    const auto hk = h.middleRows(k * din, din);
    const auto dk = upstream.middleRows(k * dout, dout);
    block_sum += hk;
    delta_sum += dk;
    g.U.noalias() += dk * hk.transpose();
  }
  g.V.noalias() = delta_sum * block_sum.transpose();
  g.V -= g.U;
  g.bias = delta_sum.rowwise().sum();

  if (input_grad != nullptr) {
    const Matrix diff_t = (layer.U - layer.V).transpose();
    const Matrix shared = layer.V.transpose() * delta_sum;
    input_grad->resize(layer.in_dim(), h.cols());
    for (Index k = 0; k < layer.blocks; ++k) {
      input_grad->middleRows(k * din, din).noalias() =
          diff_t * upstream.middleRows(k * dout, dout);
      input_grad->middleRows(k * din, din) += shared;
    }
  }
  return g;
}

Matrix expand_to_dense(const EquivariantLayer& layer) {
  const Index din = layer.block_in();
  const Index dout = layer.block_out();
  Matrix w(layer.out_dim(), layer.in_dim());
  for (Index r = 0; r < layer.blocks; ++r) {
    for (Index c = 0; c < layer.blocks; ++c) {
      w.block(r * dout, c * din, dout, din) = (r == c) ? layer.U : layer.V;
    }
  }
  return w;
}

DenseLayer to_dense_layer(const EquivariantLayer& layer) {
  DenseLayer dense;
  dense.weights = expand_to_dense(layer);
  dense.bias = layer.bias.replicate(layer.blocks, 1);
  dense.activation = layer.activation;
  return dense;
}

bool is_permutation(std::span<const std::size_t> perm) {
  std::vector<bool> seen(perm.size(), false);
  for (const auto p : perm) {
    if (p >= perm.size() || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

Permutation inverse_permutation(std::span<const std::size_t> perm) {
  if (!is_permutation(perm)) {
    throw std::invalid_argument("inverse_permutation: not a permutation");
  }
  Permutation inv(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = k;
  return inv;
}

Matrix permute_blocks(const Matrix& x, std::span<const std::size_t> perm,
                      Index block_size) {
  if (!is_permutation(perm)) {
    throw std::invalid_argument("permute_blocks: not a permutation");
  }
  const auto k_blocks = static_cast<Index>(perm.size());
  require_dims(x.rows() == k_blocks * block_size,
               "permute_blocks: length must be K*block_size");
  Matrix out(x.rows(), x.cols());
  for (Index k = 0; k < k_blocks; ++k) {
    const auto src = static_cast<Index>(perm[static_cast<std::size_t>(k)]);
    out.middleRows(k * block_size, block_size) =
        x.middleRows(src * block_size, block_size);
  }
  return out;
}

Vector permute_blocks(const Vector& x, std::span<const std::size_t> perm,
                      Index block_size) {
  return permute_blocks(Matrix(x), perm, block_size).col(0);
}

std::vector<Vector> perm_invariant_reference(
    std::span<const Vector> blocks, const InvariantFunctionFixture& fixture) {
  const std::size_t k_blocks = blocks.size();
  std::vector<Vector> mapped;
  mapped.reserve(k_blocks);
  for (const auto& b : blocks) mapped.push_back(fixture.phi(b));

  std::vector<Vector> out;
  out.reserve(k_blocks);
  for (std::size_t k = 0; k < k_blocks; ++k) {
    Vector acc = fixture.identity;
    for (std::size_t n = 0; n < k_blocks; ++n) {
      if (n == k) continue;
      acc = fixture.reduce(acc, mapped[n]);
    }
    out.push_back(fixture.zeta(fixture.psi(blocks[k]), acc));
  }
  return out;
}

}  // namespace permnet
