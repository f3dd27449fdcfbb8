#pragma once

// Block weight-sharing layer for functions that commute with permutations
// of K input blocks.
//
// A layer maps K blocks of width d_in to K blocks of width d_out. Its full
// weight matrix has U on every diagonal block and V on every off-diagonal
// block, with one bias vector shared by all blocks:
//
//   h_out^k = g(U h^k + V sum_{n != k} h^n + b)
//
// so permuting the input blocks permutes the output blocks the same way.
// (Older literature calls this "permutation invariant"; in current usage it
// is permutation equivariance.)
//
// The forward pass never materializes the (K d_out) x (K d_in) matrix: with
// s = sum_n h^n it evaluates g((U - V) h^k + V s + b), which costs O(K)
// block products instead of O(K^2).

#include "permnet/nn.hpp"

#include <functional>
#include <span>
#include <vector>

namespace permnet {

struct EquivariantLayer {
  Matrix U;     // d_out x d_in, diagonal blocks
  Matrix V;     // d_out x d_in, off-diagonal blocks
  Vector bias;  // d_out, shared across blocks
  Index blocks = 1;
  Activation activation = Activation::Softplus;

  EquivariantLayer() = default;
  EquivariantLayer(Index blocks, Index block_in, Index block_out,
                   Activation act);

  /// Glorot-uniform init using the fan of the expanded dense matrix.
  static EquivariantLayer glorot(Index blocks, Index block_in,
                                 Index block_out, Activation act,
                                 std::mt19937_64& rng);

  Index block_in() const { return U.cols(); }
  Index block_out() const { return U.rows(); }
  Index in_dim() const { return blocks * block_in(); }
  Index out_dim() const { return blocks * block_out(); }
  /// 2 d_out d_in + d_out regardless of K.
  std::size_t parameter_count() const {
    return static_cast<std::size_t>(U.size() + V.size() + bias.size());
  }
  void validate() const;
};

Matrix eq_preactivation(const EquivariantLayer& layer, const Matrix& h);
Vector eq_forward(const EquivariantLayer& layer, const Vector& h);

struct EquivariantGrad {
  Matrix U;
  Matrix V;
  Vector bias;
};

/// Gradients are summed over blocks and over the batch; the block sum is
/// where the sharing shows up.
EquivariantGrad eq_backward(const EquivariantLayer& layer, const Matrix& h,
                            const Matrix& preact, Matrix upstream,
                            Matrix* input_grad);

/// The full (K d_out) x (K d_in) matrix with U on the block diagonal and V
/// elsewhere.
Matrix expand_to_dense(const EquivariantLayer& layer);

/// The equivalent dense layer (expanded weights, bias tiled K times).
DenseLayer to_dense_layer(const EquivariantLayer& layer);

using Permutation = std::vector<std::size_t>;

bool is_permutation(std::span<const std::size_t> perm);
Permutation inverse_permutation(std::span<const std::size_t> perm);

/// Block k of the result is block perm[k] of x. Throws std::invalid_argument
/// if perm is not a bijection on {0..K-1}.
Vector permute_blocks(const Vector& x, std::span<const std::size_t> perm,
                      Index block_size);

/// Applies permute_blocks to every column.
Matrix permute_blocks(const Matrix& x, std::span<const std::size_t> perm,
                      Index block_size);

/// Ingredients of y^k = zeta(psi(x^k), F_{n != k} phi(x^n)) with F a
/// commutative reduction.
struct InvariantFunctionFixture {
  using Block = Vector;
  std::function<Block(const Block&, const Block&)> zeta;
  std::function<Block(const Block&)> psi;
  std::function<Block(const Block&)> phi;
  std::function<Block(const Block&, const Block&)> reduce;
  /// Result of reducing an empty set (used when K = 1). Its length must
  /// match phi's output.
  Block identity;
};

/// Evaluates the reference function directly, reducing the other blocks by
/// a left fold in ascending index order.
std::vector<Vector> perm_invariant_reference(
    std::span<const Vector> blocks, const InvariantFunctionFixture& fixture);

}  // namespace permnet
