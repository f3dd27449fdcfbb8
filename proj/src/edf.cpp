#include "permnet/edf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace permnet {

double SimOutcome::mean_time() const {
  if (time_s.empty()) return 0.0;
  return std::accumulate(time_s.begin(), time_s.end(), 0.0) /
         static_cast<double>(time_s.size());
}

int SimOutcome::incomplete() const {
  return static_cast<int>(std::count(completed.begin(), completed.end(), false));
}

SimOutcome edf_schedule(const Scenario& sc, Rng& rng, const NetworkConfig& cfg) {
  const auto users = static_cast<std::size_t>(sc.num_users);
  const auto slots = slot_bandwidths(sc.seed, sc.frames, cfg);
  std::vector<double> remaining(users);
  std::vector<long> served(users, 0);
  for (std::size_t k = 0; k < users; ++k) remaining[k] = sc.file_bits(static_cast<Index>(k));
  std::vector<long> busy(static_cast<std::size_t>(sc.num_bs), 0);

  for (int j = 0; j < sc.frames; ++j) {
    for (int t = 0; t < cfg.slots_per_frame; ++t) {
      for (int i = 0; i < sc.num_bs; ++i) {
        // Equal deadlines: most remaining bits, then lowest index.
        int pick = -1;
        for (int k = 0; k < sc.num_users; ++k) {
          const auto ku = static_cast<std::size_t>(k);
          if (sc.association(k, j) != i || remaining[ku] <= 0.0) continue;
          if (pick < 0 || remaining[ku] > remaining[static_cast<std::size_t>(pick)]) pick = k;
        }
        if (pick < 0) continue;
        const auto pu = static_cast<std::size_t>(pick);
        const double w = slots[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                              [static_cast<std::size_t>(t)];
        const double rate = slot_rate(rng, sc.gain(pick, j), w, cfg);
        remaining[pu] -= rate * cfg.slot_s;
        ++served[pu];
        ++busy[static_cast<std::size_t>(i)];
      }
    }
  }

  SimOutcome out;
  for (std::size_t k = 0; k < users; ++k) {
    out.time_s.push_back(static_cast<double>(served[k]) * cfg.slot_s);
    out.completed.push_back(remaining[k] <= 0.0);
  }
  const double total = static_cast<double>(sc.frames) * cfg.slots_per_frame;
  for (const long b : busy) out.utilization.push_back(static_cast<double>(b) / total);
  return out;
}

SimOutcome execute_plan(const Matrix& plan, const Scenario& sc, const NetworkConfig& cfg,
                        double tol) {
  SimOutcome out;
  out.violations = verify_plan(plan, sc, tol);
  for (int k = 0; k < sc.num_users; ++k) {
    out.time_s.push_back(cfg.frame_s * plan.row(k).sum());
    const double delivered = plan.row(k).dot(sc.norm_rate.row(k));
    out.completed.push_back(delivered >= 1.0 - tol);
  }
  for (int i = 0; i < sc.num_bs; ++i) {
    const double used = (plan.array() * sc.masks[static_cast<std::size_t>(i)].array()).sum();
    out.utilization.push_back(used / static_cast<double>(sc.frames));
  }
  return out;
}

SimOutcome execute_plan_faded(const Matrix& plan, const Scenario& sc, Rng& rng,
                              const NetworkConfig& cfg) {
  const auto slots = slot_bandwidths(sc.seed, sc.frames, cfg);
  const auto users = static_cast<std::size_t>(sc.num_users);
  std::vector<double> remaining(users);
  std::vector<double> time(users, 0.0);
  for (std::size_t k = 0; k < users; ++k) remaining[k] = sc.file_bits(static_cast<Index>(k));
  std::vector<double> used(static_cast<std::size_t>(sc.num_bs), 0.0);

  for (int j = 0; j < sc.frames; ++j) {
    std::vector<double> cursor(static_cast<std::size_t>(sc.num_bs), 0.0);  // slots consumed
    for (int k = 0; k < sc.num_users; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const int i = sc.association(k, j);
      if (i < 0 || remaining[ku] <= 0.0) continue;
      auto& pos = cursor[static_cast<std::size_t>(i)];
      double budget = plan(k, j) * cfg.slots_per_frame;
      while (budget > 1e-12 && remaining[ku] > 0.0 && pos < cfg.slots_per_frame) {
        const auto t = static_cast<std::size_t>(pos);
        const double piece = std::min({budget, 1.0 - (pos - std::floor(pos)),
                                       static_cast<double>(cfg.slots_per_frame) - pos});
        const double w = slots[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][t];
        const double bits = slot_rate(rng, sc.gain(k, j), w, cfg) * cfg.slot_s;
        const double need = remaining[ku] / bits;  // slot fraction to finish
        const double spent = std::min(piece, need);
        remaining[ku] -= spent * bits;
        if (spent >= need) remaining[ku] = 0.0;
        time[ku] += spent * cfg.slot_s;
        used[static_cast<std::size_t>(i)] += spent;
        pos += spent;
        budget -= spent;
      }
    }
  }
  SimOutcome out;
  out.violations = verify_plan(plan, sc);
  for (std::size_t k = 0; k < users; ++k) {
    out.time_s.push_back(time[k]);
    out.completed.push_back(remaining[k] <= 0.0);
  }
  const double total = static_cast<double>(sc.frames) * cfg.slots_per_frame;
  for (const double u : used) out.utilization.push_back(u / total);
  return out;
}

}  // namespace permnet
