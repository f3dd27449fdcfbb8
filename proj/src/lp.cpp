#include "permnet/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace permnet {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

void LpProblem::validate() const {
  const Index n = c.size();
  require_dims(a_eq.rows() == b_eq.size() && (a_eq.rows() == 0 || a_eq.cols() == n),
               "lp: equality system shape");
  require_dims(a_ub.rows() == b_ub.size() && (a_ub.rows() == 0 || a_ub.cols() == n),
               "lp: inequality system shape");
}

namespace {

// Dense tableau. Columns: [structural | slack | artificial | rhs].
// Every row gets an artificial, so the artificial block of the final
// tableau holds B^-1 and yields the duals directly.
class Simplex {
 public:
  Simplex(const LpProblem& lp, const LpOptions& opt) : lp_(lp), opt_(opt) {
    n_ = lp.c.size();
    m_eq_ = lp.b_eq.size();
    m_ub_ = lp.b_ub.size();
    m_ = m_eq_ + m_ub_;
    slack0_ = n_;
    art0_ = n_ + m_ub_;
    cols_ = art0_ + m_;
    t_ = Matrix::Zero(m_, cols_ + 1);
    flipped_.assign(static_cast<std::size_t>(m_), false);
    for (Index i = 0; i < m_eq_; ++i) {
      if (n_ > 0) t_.row(i).head(n_) = lp.a_eq.row(i);
      t_(i, cols_) = lp.b_eq(i);
    }
    for (Index i = 0; i < m_ub_; ++i) {
      const Index r = m_eq_ + i;
      if (n_ > 0) t_.row(r).head(n_) = lp.a_ub.row(i);
      t_(r, slack0_ + i) = 1.0;
      t_(r, cols_) = lp.b_ub(i);
    }
    for (Index r = 0; r < m_; ++r) {
      if (t_(r, cols_) < 0.0) {
        t_.row(r).head(art0_) *= -1.0;
        t_(r, cols_) *= -1.0;
        flipped_[static_cast<std::size_t>(r)] = true;
      }
      t_(r, art0_ + r) = 1.0;
    }
    basis_.resize(static_cast<std::size_t>(m_));
    for (Index r = 0; r < m_; ++r) basis_[static_cast<std::size_t>(r)] = art0_ + r;
    active_row_.assign(static_cast<std::size_t>(m_), true);
  }

  LpResult run() {
    LpResult res;
    // Phase 1: minimize the sum of artificials.
    Vector cost1 = Vector::Zero(cols_);
    cost1.segment(art0_, m_).setOnes();
    const auto p1 = iterate(cost1, cols_, res.iterations);
    if (p1 == LpStatus::NumericalFailure) {
      res.status = p1;
      return res;
    }
    const double scale = 1.0 + lp_.b_eq.cwiseAbs().sum() + lp_.b_ub.cwiseAbs().sum();
    if (objective_value(cost1) > opt_.tol * scale) {
      res.status = LpStatus::Infeasible;
      return res;
    }
    drive_out_artificials();

    // Phase 2 over structural + slack columns only.
    Vector cost2 = Vector::Zero(cols_);
    cost2.head(n_) = lp_.c;
    const auto p2 = iterate(cost2, art0_, res.iterations);
    if (p2 != LpStatus::Optimal) {
      res.status = p2;
      return res;
    }
    fill_result(cost2, res);
    return res;
  }

 private:
  double objective_value(const Vector& cost) const {
    double v = 0.0;
    for (Index r = 0; r < m_; ++r) {
      if (!active_row_[static_cast<std::size_t>(r)]) continue;
      v += cost(basis_[static_cast<std::size_t>(r)]) * t_(r, cols_);
    }
    return v;
  }

  // Reduced costs d_j = c_j - c_B' B^-1 A_j for columns [0, limit).
  Vector reduced_costs(const Vector& cost, Index limit) const {
    Vector d = cost.head(limit);
    for (Index r = 0; r < m_; ++r) {
      if (!active_row_[static_cast<std::size_t>(r)]) continue;
      const double cb = cost(basis_[static_cast<std::size_t>(r)]);
      if (cb != 0.0) d -= cb * t_.row(r).head(limit).transpose();
    }
    return d;
  }

  void pivot(Index row, Index col) {
    const double p = t_(row, col);
    t_.row(row) /= p;
    for (Index r = 0; r < m_; ++r) {
      if (r == row || !active_row_[static_cast<std::size_t>(r)]) continue;
      const double f = t_(r, col);
      if (f != 0.0) t_.row(r) -= f * t_.row(row);
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  // Bland's rule: lowest-index improving column, ratio ties broken by the
  // lowest basic variable index.
  LpStatus iterate(const Vector& cost, Index limit, int& iterations) {
    while (true) {
      if (iterations >= opt_.max_iterations) return LpStatus::NumericalFailure;
      const Vector d = reduced_costs(cost, limit);
      Index enter = -1;
      for (Index j = 0; j < limit; ++j) {
        if (d(j) < -opt_.tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return LpStatus::Optimal;
      Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Index r = 0; r < m_; ++r) {
        if (!active_row_[static_cast<std::size_t>(r)]) continue;
        const double a = t_(r, enter);
        if (a <= opt_.tol) continue;
        const double ratio = t_(r, cols_) / a;
        if (ratio < best - opt_.tol ||
            (std::abs(ratio - best) <= opt_.tol &&
             basis_[static_cast<std::size_t>(r)] <
                 basis_[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      pivot(leave, enter);
      ++iterations;
    }
  }

  void drive_out_artificials() {
    for (Index r = 0; r < m_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] < art0_) continue;
      Index col = -1;
      double best = opt_.tol;
      for (Index j = 0; j < art0_; ++j) {
        if (std::abs(t_(r, j)) > best) {
          best = std::abs(t_(r, j));
          col = j;
        }
      }
      if (col >= 0) {
        pivot(r, col);
      } else {
        active_row_[static_cast<std::size_t>(r)] = false;  // redundant row
      }
    }
  }

  void fill_result(const Vector& cost, LpResult& res) const {
    res.status = LpStatus::Optimal;
    res.x = Vector::Zero(n_);
    for (Index r = 0; r < m_; ++r) {
      if (!active_row_[static_cast<std::size_t>(r)]) continue;
      const Index b = basis_[static_cast<std::size_t>(r)];
      if (b < n_) res.x(b) = std::max(0.0, t_(r, cols_));
    }
    res.objective = lp_.c.dot(res.x);

    // y' = c_B' B^-1; B^-1 sits in the artificial columns.
    Vector y = Vector::Zero(m_);
    for (Index r = 0; r < m_; ++r) {
      if (!active_row_[static_cast<std::size_t>(r)]) continue;
      const double cb = cost(basis_[static_cast<std::size_t>(r)]);
      if (cb != 0.0) y += cb * t_.row(r).segment(art0_, m_).transpose();
    }
    for (Index r = 0; r < m_; ++r) {
      if (flipped_[static_cast<std::size_t>(r)]) y(r) = -y(r);
    }
    res.dual_eq = y.head(m_eq_);
    res.dual_ub = y.tail(m_ub_);

    double primal = 0.0;
    if (m_eq_ > 0) primal = std::max(primal, (lp_.a_eq * res.x - lp_.b_eq).cwiseAbs().maxCoeff());
    if (m_ub_ > 0) primal = std::max(primal, (lp_.a_ub * res.x - lp_.b_ub).maxCoeff());
    res.primal_residual = std::max(0.0, primal);

    Vector reduced = lp_.c;
    if (m_eq_ > 0) reduced -= lp_.a_eq.transpose() * res.dual_eq;
    if (m_ub_ > 0) reduced -= lp_.a_ub.transpose() * res.dual_ub;
    double dual_inf = n_ > 0 ? std::max(0.0, -reduced.minCoeff()) : 0.0;
    if (m_ub_ > 0) dual_inf = std::max(dual_inf, res.dual_ub.maxCoeff());
    res.dual_infeasibility = dual_inf;
    res.duality_gap =
        std::abs(res.objective - lp_.b_eq.dot(res.dual_eq) - lp_.b_ub.dot(res.dual_ub));
  }

  const LpProblem& lp_;
  LpOptions opt_;
  Index n_ = 0, m_eq_ = 0, m_ub_ = 0, m_ = 0;
  Index slack0_ = 0, art0_ = 0, cols_ = 0;
  Matrix t_;
  std::vector<Index> basis_;
  std::vector<bool> flipped_;
  std::vector<bool> active_row_;
};

}  // namespace

LpResult solve_lp(const LpProblem& lp, const LpOptions& options) {
  lp.validate();
  return Simplex(lp, options).run();
}

LpProblem build_lp(const Scenario& sc) {
  LpProblem lp;
  lp.k_max = sc.k_max;
  lp.frames = sc.frames;
  for (int k = 0; k < sc.num_users; ++k) {
    if (sc.norm_rate.row(k).maxCoeff() <= 0.0) {
      throw StructurallyInfeasible("user " + std::to_string(k) +
                                   " has zero rate in every frame");
    }
    for (int j = 0; j < sc.frames; ++j) lp.var_index.emplace_back(k, j);
  }
  const auto n = static_cast<Index>(lp.var_index.size());
  lp.c = Vector::Ones(n);
  lp.a_eq = Matrix::Zero(sc.num_users, n);
  lp.b_eq = Vector::Ones(sc.num_users);
  lp.a_ub = Matrix::Zero(static_cast<Index>(sc.num_bs) * sc.frames, n);
  lp.b_ub = Vector::Ones(static_cast<Index>(sc.num_bs) * sc.frames);
  for (Index v = 0; v < n; ++v) {
    const auto [k, j] = lp.var_index[static_cast<std::size_t>(v)];
    lp.a_eq(k, v) = sc.norm_rate(k, j);
    const int bs = sc.association(k, j);
    lp.a_ub(static_cast<Index>(bs) * sc.frames + j, v) = 1.0;
  }
  return lp;
}

PlanSolution solve_plan(const Scenario& sc, const LpOptions& options) {
  const LpProblem lp = build_lp(sc);
  PlanSolution sol;
  sol.lp = solve_lp(lp, options);
  sol.status = sol.lp.status;
  sol.plan = Matrix::Zero(sc.k_max, sc.frames);
  if (sol.status == LpStatus::Optimal) {
    for (Index v = 0; v < lp.num_vars(); ++v) {
      const auto [k, j] = lp.var_index[static_cast<std::size_t>(v)];
      sol.plan(k, j) = sol.lp.x(v);
    }
    sol.objective = sol.lp.objective;
  }
  return sol;
}

PlanReport verify_plan(const Matrix& plan, const Scenario& sc, double tol) {
  require_dims(plan.rows() == sc.k_max && plan.cols() == sc.frames,
               "verify_plan: plan shape must be k_max x T_f");
  PlanReport rep;
  for (int k = 0; k < sc.num_users; ++k) {
    const double delivered = plan.row(k).dot(sc.norm_rate.row(k));
    rep.qos_residual = std::max(rep.qos_residual, std::abs(delivered - 1.0));
  }
  for (int i = 0; i < sc.num_bs; ++i) {
    const Vector load =
        (plan.array() * sc.masks[static_cast<std::size_t>(i)].array()).colwise().sum().transpose();
    for (Index j = 0; j < load.size(); ++j) {
      const double over = std::max(0.0, load(j) - 1.0);
      rep.capacity_residual = std::max(rep.capacity_residual, over);
      rep.capacity_excess += over;
    }
  }
  rep.min_entry = plan.size() > 0 ? plan.minCoeff() : 0.0;
  rep.negative = rep.min_entry < -tol;
  rep.feasible = rep.qos_residual <= tol && rep.capacity_residual <= tol && !rep.negative;
  return rep;
}

RepairedPlan repair_plan(const Matrix& plan, const Scenario& sc) {
  require_dims(plan.rows() == sc.k_max && plan.cols() == sc.frames,
               "repair_plan: plan shape must be k_max x T_f");
  RepairedPlan out;
  out.plan = plan.cwiseMax(0.0);
  out.plan.bottomRows(sc.k_max - sc.num_users).setZero();

  Matrix load = Matrix::Zero(sc.num_bs, sc.frames);
  for (int k = 0; k < sc.num_users; ++k) {
    for (int j = 0; j < sc.frames; ++j) {
      load(sc.association(k, j), j) += out.plan(k, j);
    }
  }
  for (int k = 0; k < sc.num_users; ++k) {
    for (int j = 0; j < sc.frames; ++j) {
      const double l = load(sc.association(k, j), j);
      if (l > 1.0) out.plan(k, j) /= l;
    }
  }
  load = load.cwiseMin(1.0);

  for (int k = 0; k < sc.num_users; ++k) {
    double deficit = 1.0 - out.plan.row(k).dot(sc.norm_rate.row(k));
    if (deficit <= 1e-12) continue;
    std::vector<int> frames(static_cast<std::size_t>(sc.frames));
    for (int j = 0; j < sc.frames; ++j) frames[static_cast<std::size_t>(j)] = j;
    std::stable_sort(frames.begin(), frames.end(), [&](int a, int b) {
      return sc.norm_rate(k, a) > sc.norm_rate(k, b);
    });
    for (const int j : frames) {
      const double r = sc.norm_rate(k, j);
      if (r <= 0.0 || deficit <= 1e-12) continue;
      const int bs = sc.association(k, j);
      const double spare = std::max(0.0, 1.0 - load(bs, j));
      const double add = std::min(spare, deficit / r);
      out.plan(k, j) += add;
      load(bs, j) += add;
      deficit -= add * r;
    }
    if (deficit > 1e-12) {
      out.overflow += deficit / sc.norm_rate.row(k).maxCoeff();
      ++out.users_short;
    }
  }
  return out;
}

}  // namespace permnet
