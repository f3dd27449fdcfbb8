#include "permnet/wireless.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace permnet {

namespace {

void require_positive(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("network config: " + what);
}

}  // namespace

const std::vector<std::string>& NetworkConfig::keys() {
  static const std::vector<std::string> k{
      "num_bs",           "cell_radius_m",        "num_tx",
      "p_max_w",          "w_max_hz",             "pathloss_intercept_db",
      "pathloss_slope_db", "cell_edge_snr_db",    "road_offsets_m",
      "frame_s",          "slots_per_frame",      "slot_s",
      "frames",           "k_max",                "idle_bandwidth_hz",
      "busy_bandwidth_hz", "bandwidth_std_factor", "speed_min_mps",
      "speed_max_mps",    "file_bits_min",        "file_bits_max",
      "rayleigh_fading"};
  return k;
}

NetworkConfig NetworkConfig::from_config(const ConfigMap& cfg) {
  NetworkConfig c;
  c.num_bs = static_cast<int>(cfg.get_int("num_bs", c.num_bs));
  c.cell_radius_m = cfg.get_double("cell_radius_m", c.cell_radius_m);
  c.num_tx = static_cast<int>(cfg.get_int("num_tx", c.num_tx));
  c.p_max_w = cfg.get_double("p_max_w", c.p_max_w);
  c.w_max_hz = cfg.get_double("w_max_hz", c.w_max_hz);
  c.pathloss_intercept_db =
      cfg.get_double("pathloss_intercept_db", c.pathloss_intercept_db);
  c.pathloss_slope_db = cfg.get_double("pathloss_slope_db", c.pathloss_slope_db);
  c.cell_edge_snr_db = cfg.get_double("cell_edge_snr_db", c.cell_edge_snr_db);
  c.road_offsets_m = cfg.get_doubles("road_offsets_m", c.road_offsets_m);
  c.frame_s = cfg.get_double("frame_s", c.frame_s);
  c.slots_per_frame =
      static_cast<int>(cfg.get_int("slots_per_frame", c.slots_per_frame));
  c.slot_s = cfg.get_double("slot_s", c.slot_s);
  c.frames = static_cast<int>(cfg.get_int("frames", c.frames));
  c.k_max = static_cast<int>(cfg.get_int("k_max", c.k_max));
  c.idle_bandwidth_hz = cfg.get_double("idle_bandwidth_hz", c.idle_bandwidth_hz);
  c.busy_bandwidth_hz = cfg.get_double("busy_bandwidth_hz", c.busy_bandwidth_hz);
  c.bandwidth_std_factor =
      cfg.get_double("bandwidth_std_factor", c.bandwidth_std_factor);
  c.speed_min_mps = cfg.get_double("speed_min_mps", c.speed_min_mps);
  c.speed_max_mps = cfg.get_double("speed_max_mps", c.speed_max_mps);
  c.file_bits_min = cfg.get_double("file_bits_min", c.file_bits_min);
  c.file_bits_max = cfg.get_double("file_bits_max", c.file_bits_max);
  c.rayleigh_fading = cfg.get_bool("rayleigh_fading", c.rayleigh_fading);
  c.validate();
  return c;
}

void NetworkConfig::validate() const {
  require_positive(num_bs >= 1, "num_bs must be >= 1");
  require_positive(cell_radius_m > 0, "cell_radius_m must be > 0");
  require_positive(num_tx >= 1, "num_tx must be >= 1");
  require_positive(p_max_w > 0, "p_max_w must be > 0");
  require_positive(w_max_hz > 0, "w_max_hz must be > 0");
  require_positive(!road_offsets_m.empty(), "road_offsets_m must be non-empty");
  for (const double r : road_offsets_m) {
    require_positive(r > 0, "road offsets must be > 0");
  }
  require_positive(frame_s > 0 && slot_s > 0 && slots_per_frame >= 1,
                   "frame/slot durations must be positive");
  require_positive(std::abs(slots_per_frame * slot_s - frame_s) <= 1e-9 * frame_s,
                   "slots_per_frame * slot_s must equal frame_s");
  require_positive(frames >= 1, "frames must be >= 1");
  require_positive(k_max >= 1, "k_max must be >= 1");
  require_positive(idle_bandwidth_hz > 0 && busy_bandwidth_hz > 0,
                   "mean bandwidths must be > 0");
  require_positive(bandwidth_std_factor >= 0, "bandwidth_std_factor must be >= 0");
  require_positive(speed_min_mps > 0 && speed_max_mps >= speed_min_mps,
                   "speed range must be positive and ordered");
  require_positive(file_bits_min > 0 && file_bits_max >= file_bits_min,
                   "file size range must be positive and ordered");
}

double NetworkConfig::mean_bandwidth(int bs) const {
  return bs % 2 == 0 ? idle_bandwidth_hz : busy_bandwidth_hz;
}

void Scenario::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("scenario: ") + what);
  };
  check(num_users >= 0 && num_users <= k_max, "K out of range");
  check(rate.rows() == k_max && rate.cols() == frames, "rate shape");
  check(norm_rate.rows() == k_max && norm_rate.cols() == frames,
        "normalized rate shape");
  check(static_cast<int>(masks.size()) == num_bs, "mask count");
  check((rate.array() >= 0).all() && (norm_rate.array() >= 0).all(),
        "negative rate");
  for (int k = 0; k < k_max; ++k) {
    for (int j = 0; j < frames; ++j) {
      double total = 0.0;
      for (const auto& m : masks) total += m(k, j);
      if (active(k)) {
        check(total == 1.0, "active user must associate to exactly one BS");
      } else {
        check(total == 0.0 && rate(k, j) == 0.0, "padded row must be zero");
      }
    }
  }
}

double pathloss_db(double distance_m, const NetworkConfig& cfg) {
  if (!(distance_m > 0.0)) {
    throw std::invalid_argument("pathloss: distance must be > 0");
  }
  return cfg.pathloss_intercept_db + cfg.pathloss_slope_db * std::log10(distance_m);
}

double pathloss_gain(double distance_m, const NetworkConfig& cfg) {
  return std::pow(10.0, -pathloss_db(distance_m, cfg) / 10.0);
}

double derive_noise_power(const NetworkConfig& cfg) {
  return cfg.p_max_w * pathloss_gain(cfg.cell_radius_m, cfg) /
         std::pow(10.0, cfg.cell_edge_snr_db / 10.0);
}

double avg_rate(double gain, double bandwidth_hz, const NetworkConfig& cfg) {
  return slot_rate_given_fading(gain, bandwidth_hz, cfg.num_tx, cfg);
}

double slot_rate_given_fading(double gain, double bandwidth_hz,
                              double fading_power, const NetworkConfig& cfg) {
  const double snr = gain * fading_power * cfg.p_max_w / derive_noise_power(cfg);
  return bandwidth_hz * std::log2(1.0 + snr);
}

double slot_rate(Rng& rng, double gain, double bandwidth_hz,
                 const NetworkConfig& cfg) {
  if (!cfg.rayleigh_fading) return avg_rate(gain, bandwidth_hz, cfg);
  std::exponential_distribution<double> unit_exp(1.0);
  double fading = 0.0;
  for (int a = 0; a < cfg.num_tx; ++a) fading += unit_exp(rng);
  return slot_rate_given_fading(gain, bandwidth_hz, fading, cfg);
}

std::vector<std::vector<std::vector<double>>> slot_bandwidths(
    std::uint64_t seed, int frames, const NetworkConfig& cfg) {
  Rng rng = substream(seed, Stream::Bandwidth);
  std::vector<std::vector<std::vector<double>>> out(
      static_cast<std::size_t>(cfg.num_bs));
  for (int i = 0; i < cfg.num_bs; ++i) {
    const double mean = cfg.mean_bandwidth(i);
    std::normal_distribution<double> dist(mean, cfg.bandwidth_std_factor * mean);
    auto& per_frame = out[static_cast<std::size_t>(i)];
    per_frame.resize(static_cast<std::size_t>(frames));
    for (auto& slots : per_frame) {
      slots.resize(static_cast<std::size_t>(cfg.slots_per_frame));
      for (auto& w : slots) w = std::clamp(dist(rng), 0.0, cfg.w_max_hz);
    }
  }
  return out;
}

int strongest_bs(const std::vector<double>& gains) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(gains.size()); ++i) {
    if (gains[static_cast<std::size_t>(i)] > gains[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

Scenario gen_scenario(Rng& rng, int num_users, const NetworkConfig& cfg) {
  if (num_users < 1 || num_users > cfg.k_max) {
    throw std::invalid_argument("gen_scenario: K=" + std::to_string(num_users) +
                                " outside [1, " + std::to_string(cfg.k_max) + "]");
  }
  const int kmax = cfg.k_max;
  const int tf = cfg.frames;
  Scenario sc;
  sc.seed = rng();
  sc.num_users = num_users;
  sc.k_max = kmax;
  sc.frames = tf;
  sc.num_bs = cfg.num_bs;
  sc.file_bits = Vector::Zero(kmax);
  sc.gain = Matrix::Zero(kmax, tf);
  sc.rate = Matrix::Zero(kmax, tf);
  sc.norm_rate = Matrix::Zero(kmax, tf);
  sc.association = Eigen::MatrixXi::Constant(kmax, tf, -1);
  sc.masks.assign(static_cast<std::size_t>(cfg.num_bs), Matrix::Zero(kmax, tf));

  const auto slots = slot_bandwidths(sc.seed, tf, cfg);
  sc.bandwidth = Matrix::Zero(cfg.num_bs, tf);
  for (int i = 0; i < cfg.num_bs; ++i) {
    for (int j = 0; j < tf; ++j) {
      const auto& s = slots[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      double total = 0.0;
      for (const double w : s) total += w;
      sc.bandwidth(i, j) = total / static_cast<double>(s.size());
    }
  }

  const double span = 2.0 * cfg.cell_radius_m * cfg.num_bs;
  std::uniform_real_distribution<double> start_dist(0.0, span);
  std::uniform_real_distribution<double> speed_dist(cfg.speed_min_mps,
                                                    cfg.speed_max_mps);
  std::uniform_int_distribution<std::size_t> road_dist(
      0, cfg.road_offsets_m.size() - 1);
  std::uniform_int_distribution<int> dir_dist(0, 1);
  std::uniform_real_distribution<double> file_dist(cfg.file_bits_min,
                                                   cfg.file_bits_max);

  std::vector<double> gains(static_cast<std::size_t>(cfg.num_bs));
  for (int k = 0; k < num_users; ++k) {
    const double x0 = start_dist(rng);
    const double road = cfg.road_offsets_m[road_dist(rng)];
    const double speed = speed_dist(rng);
    const double dir = dir_dist(rng) == 0 ? 1.0 : -1.0;
    sc.file_bits(k) = cfg.file_bits_min == cfg.file_bits_max
                          ? cfg.file_bits_min
                          : file_dist(rng);
    for (int j = 0; j < tf; ++j) {
      const double x = x0 + dir * speed * cfg.frame_s * j;
      for (int i = 0; i < cfg.num_bs; ++i) {
        const double bx = cfg.cell_radius_m * (2.0 * i + 1.0);
        gains[static_cast<std::size_t>(i)] =
            pathloss_gain(std::hypot(x - bx, road), cfg);
      }
      const int bs = strongest_bs(gains);
      const double g = gains[static_cast<std::size_t>(bs)];
      sc.association(k, j) = bs;
      sc.masks[static_cast<std::size_t>(bs)](k, j) = 1.0;
      sc.gain(k, j) = g;
      sc.rate(k, j) = avg_rate(g, sc.bandwidth(bs, j), cfg);
      sc.norm_rate(k, j) = sc.rate(k, j) / (sc.file_bits(k) * cfg.frame_s);
    }
  }
  return sc;
}

}  // namespace permnet
