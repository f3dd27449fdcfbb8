#pragma once

// Shared fixtures for the test suites. Nothing here calls into the code under
// test beyond plain data construction.

#include "permnet/wireless.hpp"

#include <random>

namespace permnet::testing {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng,
                            double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

inline Vector random_vector(Index n, std::mt19937_64& rng, double scale = 1.0) {
  return random_matrix(n, 1, rng, scale).col(0);
}

/// Hand-built scenario: `r` holds normalized rates of the active users
/// (rows), `assoc` the serving BS per (user, frame). Rows beyond r.rows()
/// up to k_max are padding.
inline Scenario make_scenario(const Matrix& r, const Eigen::MatrixXi& assoc,
                              int num_bs, int k_max = -1) {
  const int users = static_cast<int>(r.rows());
  const int frames = static_cast<int>(r.cols());
  if (k_max < 0) k_max = users;
  Scenario sc;
  sc.seed = 1;
  sc.num_users = users;
  sc.k_max = k_max;
  sc.frames = frames;
  sc.num_bs = num_bs;
  sc.file_bits = Vector::Zero(k_max);
  sc.file_bits.head(users).setConstant(8e6);
  sc.gain = Matrix::Zero(k_max, frames);
  sc.bandwidth = Matrix::Constant(num_bs, frames, 10e6);
  sc.association = Eigen::MatrixXi::Constant(k_max, frames, -1);
  sc.association.topRows(users) = assoc;
  sc.norm_rate = Matrix::Zero(k_max, frames);
  sc.norm_rate.topRows(users) = r;
  sc.rate = sc.norm_rate * 8e6;
  sc.masks.assign(static_cast<std::size_t>(num_bs), Matrix::Zero(k_max, frames));
  for (int k = 0; k < users; ++k) {
    for (int j = 0; j < frames; ++j) {
      sc.masks[static_cast<std::size_t>(assoc(k, j))](k, j) = 1.0;
      sc.gain(k, j) = 1e-10;
    }
  }
  return sc;
}

/// Relabels users: row k of the result is row perm[k] of `sc`. `perm`
/// must permute the active users among themselves.
inline Scenario permute_users(const Scenario& sc, const std::vector<std::size_t>& perm) {
  Scenario out = sc;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    const auto src = static_cast<Index>(perm[k]);
    const auto dst = static_cast<Index>(k);
    out.file_bits(dst) = sc.file_bits(src);
    out.gain.row(dst) = sc.gain.row(src);
    out.association.row(dst) = sc.association.row(src);
    out.rate.row(dst) = sc.rate.row(src);
    out.norm_rate.row(dst) = sc.norm_rate.row(src);
    for (std::size_t i = 0; i < sc.masks.size(); ++i) out.masks[i].row(dst) = sc.masks[i].row(src);
  }
  return out;
}

/// Desk-scale network configuration used across tests.
inline NetworkConfig desk_config(int k_max = 4, int frames = 5, int num_bs = 2) {
  NetworkConfig cfg;
  cfg.k_max = k_max;
  cfg.frames = frames;
  cfg.num_bs = num_bs;
  return cfg;
}

}  // namespace permnet::testing
