#pragma once

// Exact solver for the minimum-airtime planning problem:
//
//   min  sum_{k,j} s[k][j]
//   s.t. sum_j s[k][j] r[k][j] = 1               for every active user k
//        sum_{k served by i in j} s[k][j] <= 1   for every BS i, frame j
//        s >= 0
//
// solved with a dense two-phase simplex using Bland's rule.

#include "permnet/nn.hpp"
#include "permnet/wireless.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace permnet {

/// Raised by build_lp when some active user has zero rate in every frame.
class StructurallyInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// min c'x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0.
struct LpProblem {
  Vector c;
  Matrix a_eq;
  Vector b_eq;
  Matrix a_ub;
  Vector b_ub;
  /// Plan entry (user, frame) of each variable, when built from a scenario.
  std::vector<std::pair<int, int>> var_index;
  int k_max = 0;
  int frames = 0;

  Index num_vars() const { return c.size(); }
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

const char* to_string(LpStatus status);

struct LpResult {
  LpStatus status = LpStatus::NumericalFailure;
  Vector x;
  double objective = 0.0;
  Vector dual_eq;  // multipliers of the equality rows
  Vector dual_ub;  // multipliers of the inequality rows (<= 0)
  double primal_residual = 0.0;
  double dual_infeasibility = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
};

struct LpOptions {
  double tol = 1e-8;
  int max_iterations = 100000;
};

LpResult solve_lp(const LpProblem& lp, const LpOptions& options = {});

struct PlanSolution {
  Matrix plan;  // k_max x T_f, fractions of frame time
  double objective = 0.0;
  LpStatus status = LpStatus::NumericalFailure;
  LpResult lp;
};

/// Throws StructurallyInfeasible for a user with all-zero rates.
LpProblem build_lp(const Scenario& sc);

/// build_lp + solve_lp, with the solution scattered back into a plan matrix.
PlanSolution solve_plan(const Scenario& sc, const LpOptions& options = {});

struct PlanReport {
  double qos_residual = 0.0;       // max_k |sum_j s r - 1|
  double capacity_residual = 0.0;  // max_{i,j} max(0, load - 1)
  double capacity_excess = 0.0;    // sum_{i,j} max(0, load - 1)
  double min_entry = 0.0;
  bool negative = false;
  bool feasible = false;
};

PlanReport verify_plan(const Matrix& plan, const Scenario& sc,
                       double tol = 1e-6);

struct RepairedPlan {
  Matrix plan;            // capacity-feasible, nonnegative
  double overflow = 0.0;  // frame-time still needed after the window
  int users_short = 0;    // users whose file does not fit in the window
  /// plan.sum() + overflow: the airtime actually needed.
  double mass() const { return plan.sum() + overflow; }
};

/// Makes a plan capacity-feasible without losing delivered volume where
/// possible:
///  1. every overloaded (BS, frame) cell is scaled down to load 1;
///  2. each user's lost volume is re-placed greedily into its frames with
///     spare capacity, highest rate first;
///  3. whatever still does not fit is charged as overflow airtime at the
///     user's best in-window rate.
/// Negative entries are clipped to zero first. Users short of their file
/// before repair are topped up the same way.
RepairedPlan repair_plan(const Matrix& plan, const Scenario& sc);

}  // namespace permnet
