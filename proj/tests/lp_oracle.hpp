#pragma once

// Brute-force references for the planning LP, independent of the simplex
// code path.
//
// vertex_enumeration_min: an LP in standard form attains its optimum at a
// basic feasible solution, so trying every basis (choice of m columns of
// [A_eq 0; A_ub I]) and keeping the best feasible one gives the exact
// optimum. Exponential, fine for K <= 3, T_f <= 4, N_b <= 2.
//
// grid_min: literal enumeration over a uniform grid of plan values; only
// practical for two or three variables.

#include "permnet/lp.hpp"

#include <Eigen/LU>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace permnet::testing {

inline std::optional<double> vertex_enumeration_min(const LpProblem& lp,
                                                    double tol = 1e-9) {
  const Index n = lp.c.size();
  const Index m_eq = lp.b_eq.size();
  const Index m_ub = lp.b_ub.size();
  const Index m = m_eq + m_ub;
  const Index cols = n + m_ub;
  Matrix a = Matrix::Zero(m, cols);
  Vector b(m);
  if (m_eq > 0) a.topLeftCorner(m_eq, n) = lp.a_eq;
  if (m_ub > 0) {
    a.bottomLeftCorner(m_ub, n) = lp.a_ub;
    a.bottomRightCorner(m_ub, m_ub).setIdentity();
  }
  b << lp.b_eq, lp.b_ub;
  Vector cost = Vector::Zero(cols);
  cost.head(n) = lp.c;

  double best = std::numeric_limits<double>::infinity();
  std::vector<Index> pick;
  std::function<void(Index)> recurse = [&](Index start) {
    if (static_cast<Index>(pick.size()) == m) {
      Matrix basis(m, m);
      for (Index i = 0; i < m; ++i) basis.col(i) = a.col(pick[static_cast<std::size_t>(i)]);
      Eigen::FullPivLU<Matrix> lu(basis);
      if (lu.rank() < m) return;
      const Vector xb = lu.solve(b);
      if (xb.minCoeff() < -tol) return;
      if ((basis * xb - b).cwiseAbs().maxCoeff() > 1e-7) return;
      double value = 0.0;
      for (Index i = 0; i < m; ++i) value += cost(pick[static_cast<std::size_t>(i)]) * xb(i);
      best = std::min(best, value);
      return;
    }
    const Index remaining = m - static_cast<Index>(pick.size());
    for (Index c = start; c <= cols - remaining; ++c) {
      pick.push_back(c);
      recurse(c + 1);
      pick.pop_back();
    }
  };
  recurse(0);
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

/// Minimum of c'x over grid points x in {0, step, ..., upper}^n that satisfy
/// the constraints within `slack`.
inline std::optional<double> grid_min(const LpProblem& lp, double step, double upper,
                                      double slack) {
  const Index n = lp.c.size();
  const int levels = static_cast<int>(std::round(upper / step));
  Vector x = Vector::Zero(n);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(Index)> recurse = [&](Index i) {
    if (i == n) {
      if (lp.b_eq.size() > 0 && (lp.a_eq * x - lp.b_eq).cwiseAbs().maxCoeff() > slack) return;
      if (lp.b_ub.size() > 0 && (lp.a_ub * x - lp.b_ub).maxCoeff() > slack) return;
      best = std::min(best, lp.c.dot(x));
      return;
    }
    for (int l = 0; l <= levels; ++l) {
      x(i) = l * step;
      recurse(i + 1);
    }
  };
  recurse(0);
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

}  // namespace permnet::testing
