#pragma once

// Scenario generator for predictive resource allocation over a line of base
// stations (BSs) serving mobile stations (MSs) that drive along straight
// roads.
//
// Geometry: BS i sits at (cell_radius * (2i + 1), 0). Roads run parallel to
// the BS line at y = road offset (all on one side). Each MS starts at a
// uniform abscissa in [0, 2 * cell_radius * num_bs], picks a road, a speed
// and a direction (+x or -x), and is associated in each frame with the BS of
// highest large-scale gain (lowest index on ties).
//
// Cell-edge SNR is the per-antenna receive SNR at distance cell_radius;
// the array gain N_tx enters the average-rate formula separately.

#include "permnet/config.hpp"
#include "permnet/nn.hpp"
#include "permnet/random.hpp"

#include <cstdint>
#include <vector>

namespace permnet {

struct NetworkConfig {
  int num_bs = 4;
  double cell_radius_m = 250.0;
  int num_tx = 8;
  double p_max_w = 40.0;
  double w_max_hz = 20e6;
  double pathloss_intercept_db = 36.8;
  double pathloss_slope_db = 36.7;
  double cell_edge_snr_db = 5.0;
  std::vector<double> road_offsets_m{50.0, 100.0, 150.0};
  double frame_s = 1.0;
  int slots_per_frame = 100;
  double slot_s = 0.01;
  int frames = 30;
  int k_max = 20;
  double idle_bandwidth_hz = 10e6;
  double busy_bandwidth_hz = 5e6;
  double bandwidth_std_factor = 0.2;
  double speed_min_mps = 10.0;
  double speed_max_mps = 25.0;
  /// File sizes are uniform in [file_bits_min, file_bits_max]; equal bounds
  /// give a fixed size. 1 MB = 8e6 bits.
  double file_bits_min = 8e6;
  double file_bits_max = 8e6;
  /// When false, slot rates use |gamma|^2 = N_tx (no small-scale fading).
  bool rayleigh_fading = true;

  /// Throws ConfigError on non-positive or inconsistent values.
  void validate() const;
  static NetworkConfig from_config(const ConfigMap& cfg);
  static const std::vector<std::string>& keys();
  /// Mean residual bandwidth of BS i (idle, busy, idle, busy, ...).
  double mean_bandwidth(int bs) const;
};

struct Scenario {
  std::uint64_t seed = 0;  // seeds the per-slot bandwidth stream
  int num_users = 0;       // K active users, rows [0, K)
  int k_max = 0;
  int frames = 0;
  int num_bs = 0;
  Vector file_bits;                    // k_max, zero for padding
  Matrix gain;                         // k_max x T_f, large-scale gain to serving BS
  Matrix bandwidth;                    // num_bs x T_f, frame-average residual Hz
  Eigen::MatrixXi association;         // k_max x T_f, serving BS or -1
  Matrix rate;                         // k_max x T_f, R in bit/s
  Matrix norm_rate;                    // k_max x T_f, r = R / (B Delta)
  std::vector<Matrix> masks;           // num_bs of k_max x T_f, 0/1

  bool active(int k) const { return k < num_users; }
  /// Throws std::invalid_argument if an invariant is violated.
  void validate() const;
};

/// Linear gain 10^(-(a + b log10 d)/10). Throws std::invalid_argument for
/// d <= 0.
double pathloss_gain(double distance_m, const NetworkConfig& cfg);
double pathloss_db(double distance_m, const NetworkConfig& cfg);

/// Noise power such that P_max * g(cell_radius) / sigma^2 equals the
/// configured cell-edge SNR.
double derive_noise_power(const NetworkConfig& cfg);

/// Frame-average rate W log2(1 + gain N_tx P_max / sigma^2).
double avg_rate(double gain, double bandwidth_hz, const NetworkConfig& cfg);

/// Rate in one slot for a given small-scale power gain |gamma|^2.
double slot_rate_given_fading(double gain, double bandwidth_hz,
                              double fading_power, const NetworkConfig& cfg);

/// Draws |gamma|^2 as a sum of N_tx unit-mean exponentials (Rayleigh
/// fading) and returns the slot rate. Without fading the rate equals
/// avg_rate and no random numbers are consumed.
double slot_rate(Rng& rng, double gain, double bandwidth_hz,
                 const NetworkConfig& cfg);

/// Per-slot residual bandwidth, indexed [bs][frame][slot]. Reproducible
/// from the scenario seed.
std::vector<std::vector<std::vector<double>>> slot_bandwidths(
    std::uint64_t seed, int frames, const NetworkConfig& cfg);

/// Generates one scenario with K active users padded to cfg.k_max rows.
/// Throws std::invalid_argument if K is outside [1, k_max].
Scenario gen_scenario(Rng& rng, int num_users, const NetworkConfig& cfg);

/// Associates to the BS with the highest gain, lowest index on ties.
int strongest_bs(const std::vector<double>& gains);

}  // namespace permnet
