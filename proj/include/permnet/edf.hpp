#pragma once

// Non-predictive earliest-deadline-first baseline and plan execution.
//
// All requests start at the window start and share the window end as their
// deadline, so the EDF primary key never separates users; the tie rule
// (most remaining bits first, then lowest index) decides each slot.

#include "permnet/lp.hpp"
#include "permnet/wireless.hpp"

#include <vector>

namespace permnet {

struct SimOutcome {
  std::vector<double> time_s;     // per active user
  std::vector<bool> completed;    // per active user
  std::vector<double> utilization;  // per BS: fraction of slots used
  PlanReport violations;          // plan execution only

  double mean_time() const;
  int incomplete() const;
};

/// Slot-level EDF on Rayleigh-faded rates. `rng` drives fading.
SimOutcome edf_schedule(const Scenario& sc, Rng& rng, const NetworkConfig& cfg);

/// Idealized execution at the predicted average rates: user k occupies
/// frame_s * sum_j S[k][j] seconds and completes iff its delivered volume
/// reaches the file size (within tol).
SimOutcome execute_plan(const Matrix& plan, const Scenario& sc,
                        const NetworkConfig& cfg, double tol = 1e-6);

/// Sensitivity variant: the plan's time fractions are spent on slot-level
/// faded rates (users in index order inside each frame). Not the headline
/// metric.
SimOutcome execute_plan_faded(const Matrix& plan, const Scenario& sc, Rng& rng,
                              const NetworkConfig& cfg);

}  // namespace permnet
