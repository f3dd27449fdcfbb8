#include "permnet/wireless.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace permnet;

TEST(Pathloss, DirectFormula) {
  const NetworkConfig cfg;
  EXPECT_NEAR(pathloss_db(1.0, cfg), 36.8, 1e-12);
  EXPECT_NEAR(pathloss_db(10.0, cfg), 73.5, 1e-12);
  EXPECT_NEAR(pathloss_db(250.0, cfg), 36.8 + 36.7 * std::log10(250.0), 1e-12);
  EXPECT_NEAR(pathloss_db(250.0, cfg), 124.80, 0.01);
  EXPECT_NEAR(pathloss_gain(10.0, cfg), std::pow(10.0, -7.35), 1e-20);
}

TEST(Pathloss, RejectsNonPositiveDistance) {
  const NetworkConfig cfg;
  EXPECT_THROW(pathloss_gain(0.0, cfg), std::invalid_argument);
  EXPECT_THROW(pathloss_gain(-3.0, cfg), std::invalid_argument);
}

TEST(NoisePower, CellEdgeDefinition) {
  NetworkConfig cfg;
  cfg.cell_edge_snr_db = 0.0;
  EXPECT_DOUBLE_EQ(derive_noise_power(cfg), cfg.p_max_w * pathloss_gain(250.0, cfg));
  cfg.cell_edge_snr_db = 5.0;
  EXPECT_DOUBLE_EQ(derive_noise_power(cfg),
                   cfg.p_max_w * pathloss_gain(250.0, cfg) / std::pow(10.0, 0.5));
  const double base = derive_noise_power(cfg);
  cfg.p_max_w *= 2.0;
  EXPECT_DOUBLE_EQ(derive_noise_power(cfg), 2.0 * base);
}

namespace {
// Gain giving the requested SNR term alpha N_tx P / sigma^2.
double gain_for_snr(double snr_term, const NetworkConfig& cfg) {
  return snr_term * derive_noise_power(cfg) / (cfg.num_tx * cfg.p_max_w);
}
}  // namespace

TEST(AvgRate, KnownValues) {
  const NetworkConfig cfg;
  EXPECT_NEAR(avg_rate(gain_for_snr(1.0, cfg), 7e6, cfg), 7e6, 1e-6);
  EXPECT_EQ(avg_rate(0.0, 10e6, cfg), 0.0);
  EXPECT_NEAR(avg_rate(gain_for_snr(255.0, cfg), 10e6, cfg), 80e6, 1e-4);
}

TEST(AvgRate, MonotoneInGainLinearInBandwidth) {
  const NetworkConfig cfg;
  double prev = 0.0;
  for (double d = 1000.0; d >= 10.0; d *= 0.8) {
    const double r = avg_rate(pathloss_gain(d, cfg), 5e6, cfg);
    EXPECT_GE(r, prev);
    prev = r;
  }
  const double g = pathloss_gain(300.0, cfg);
  EXPECT_NEAR(avg_rate(g, 6e6, cfg), 3.0 * avg_rate(g, 2e6, cfg), 1e-6);
}

TEST(SlotRate, DeterministicFadingReproducesAverageFormula) {
  const NetworkConfig cfg;
  const double g = pathloss_gain(180.0, cfg);
  EXPECT_DOUBLE_EQ(slot_rate_given_fading(g, 9e6, cfg.num_tx, cfg), avg_rate(g, 9e6, cfg));
}

TEST(SlotRate, ZeroBandwidthGivesZero) {
  const NetworkConfig cfg;
  Rng rng(1);
  EXPECT_EQ(slot_rate(rng, pathloss_gain(100.0, cfg), 0.0, cfg), 0.0);
}

TEST(SlotRate, MonteCarloMeanCloseToAverageRate) {
  const NetworkConfig cfg;  // N_tx = 8
  const double g = gain_for_snr(100.0, cfg);
  Rng rng(2);
  double total = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) total += slot_rate(rng, g, 10e6, cfg);
  const double mean = total / draws;
  const double ref = avg_rate(g, 10e6, cfg);
  EXPECT_LE(std::abs(mean - ref) / ref, 0.02);
  EXPECT_LT(mean, ref);  // Jensen: fading can only lower the mean log-rate
}

TEST(SlotBandwidths, ClippedAndConcentrated) {
  NetworkConfig cfg;
  cfg.slots_per_frame = 2000;
  cfg.slot_s = cfg.frame_s / cfg.slots_per_frame;
  const auto w = slot_bandwidths(99, 3, cfg);
  ASSERT_EQ(w.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    const double mean = cfg.mean_bandwidth(i);
    for (const auto& frame : w[static_cast<std::size_t>(i)]) {
      double total = 0.0;
      for (const double x : frame) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, cfg.w_max_hz);
        total += x;
      }
      const double sigma = cfg.bandwidth_std_factor * mean / std::sqrt(2000.0);
      EXPECT_LE(std::abs(total / 2000.0 - mean), 3.0 * sigma);
    }
  }
  EXPECT_EQ(cfg.mean_bandwidth(0), 10e6);
  EXPECT_EQ(cfg.mean_bandwidth(1), 5e6);
  EXPECT_EQ(slot_bandwidths(99, 3, cfg), w);
}

TEST(SlotBandwidths, ClipsAtWMax) {
  NetworkConfig cfg;
  cfg.idle_bandwidth_hz = 19e6;
  cfg.bandwidth_std_factor = 1.0;
  const auto w = slot_bandwidths(5, 2, cfg);
  bool hit_top = false, hit_zero = false;
  for (const auto& bs : w)
    for (const auto& frame : bs)
      for (const double x : frame) {
        hit_top |= x == cfg.w_max_hz;
        hit_zero |= x == 0.0;
      }
  EXPECT_TRUE(hit_top);
  EXPECT_TRUE(hit_zero);
}

TEST(StrongestBs, TiesGoToLowestIndex) {
  EXPECT_EQ(strongest_bs({1.0, 1.0}), 0);
  EXPECT_EQ(strongest_bs({0.5, 2.0, 2.0}), 1);
  EXPECT_EQ(strongest_bs({3.0}), 0);
}

TEST(GenScenario, EquidistantUserAssociatesToLowerBs) {
  // A user parked exactly between BS 0 (x=250) and BS 1 (x=750).
  NetworkConfig cfg = permnet::testing::desk_config(1, 3, 2);
  const double mid = 500.0;
  const double d = std::hypot(mid - 250.0, 50.0);
  EXPECT_EQ(pathloss_gain(d, cfg), pathloss_gain(std::hypot(mid - 750.0, 50.0), cfg));
  EXPECT_EQ(strongest_bs({pathloss_gain(d, cfg), pathloss_gain(d, cfg)}), 0);
}

TEST(GenScenario, DeterministicForFixedSeed) {
  const auto cfg = permnet::testing::desk_config();
  Rng a = substream(7, Stream::Scenario);
  Rng b = substream(7, Stream::Scenario);
  for (int i = 0; i < 5; ++i) {
    const Scenario x = gen_scenario(a, 3, cfg);
    const Scenario y = gen_scenario(b, 3, cfg);
    EXPECT_EQ(x.seed, y.seed);
    EXPECT_EQ(x.rate, y.rate);
    EXPECT_EQ(x.norm_rate, y.norm_rate);
    EXPECT_EQ(x.association, y.association);
    EXPECT_EQ(x.bandwidth, y.bandwidth);
  }
}

TEST(GenScenario, InvariantsHold) {
  NetworkConfig cfg;  // defaults: 4 BSs, 30 frames, K_max 20
  cfg.file_bits_max = 24e6;
  Rng rng(3);
  for (int k = 1; k <= cfg.k_max; k += 3) {
    const Scenario sc = gen_scenario(rng, k, cfg);
    EXPECT_NO_THROW(sc.validate());
    for (int u = 0; u < cfg.k_max; ++u) {
      for (int j = 0; j < cfg.frames; ++j) {
        double total = 0.0;
        for (const auto& m : sc.masks) total += m(u, j);
        EXPECT_EQ(total, u < k ? 1.0 : 0.0);
        if (u >= k) {
          EXPECT_EQ(sc.rate(u, j), 0.0);
          EXPECT_EQ(sc.association(u, j), -1);
        } else {
          EXPECT_GT(sc.rate(u, j), 0.0);
          EXPECT_DOUBLE_EQ(sc.norm_rate(u, j), sc.rate(u, j) / (sc.file_bits(u) * cfg.frame_s));
        }
      }
      if (u < k) {
        EXPECT_GE(sc.file_bits(u), cfg.file_bits_min);
        EXPECT_LE(sc.file_bits(u), cfg.file_bits_max);
      }
    }
  }
}

TEST(GenScenario, AssociationIsNearestBs) {
  const NetworkConfig cfg;
  Rng rng(4);
  const Scenario sc = gen_scenario(rng, 10, cfg);
  for (int k = 0; k < 10; ++k) {
    for (int j = 0; j < cfg.frames; ++j) {
      const int bs = sc.association(k, j);
      // The serving gain must be the largest of all BSs at this position,
      // which on this geometry is the one with the smallest distance.
      EXPECT_GT(sc.gain(k, j), 0.0);
      EXPECT_NEAR(sc.rate(k, j), avg_rate(sc.gain(k, j), sc.bandwidth(bs, j), cfg), 1e-6);
    }
  }
}

TEST(GenScenario, FrameBandwidthIsSlotMean) {
  const auto cfg = permnet::testing::desk_config(2, 4, 2);
  Rng rng(5);
  const Scenario sc = gen_scenario(rng, 2, cfg);
  const auto slots = slot_bandwidths(sc.seed, cfg.frames, cfg);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 4; ++j) {
      double total = 0.0;
      for (const double w : slots[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])
        total += w;
      EXPECT_EQ(sc.bandwidth(i, j), total / cfg.slots_per_frame);
    }
  }
}

TEST(GenScenario, RejectsUserCountOutOfRange) {
  const auto cfg = permnet::testing::desk_config();
  Rng rng(6);
  EXPECT_THROW(gen_scenario(rng, 0, cfg), std::invalid_argument);
  EXPECT_THROW(gen_scenario(rng, cfg.k_max + 1, cfg), std::invalid_argument);
}

TEST(NetworkConfig, ValidatesAndParses) {
  NetworkConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.slot_s = 0.02;  // 100 * 0.02 != frame duration
  EXPECT_THROW(cfg.validate(), ConfigError);
  const auto parsed = NetworkConfig::from_config(
      ConfigMap::parse("num_bs = 2\nframes = 5\nroad_offsets_m = 10, 20\n"));
  EXPECT_EQ(parsed.num_bs, 2);
  EXPECT_EQ(parsed.frames, 5);
  EXPECT_EQ(parsed.road_offsets_m, (std::vector<double>{10, 20}));
  EXPECT_THROW(NetworkConfig::from_config(ConfigMap::parse("num_bs = 0\n")), ConfigError);
}
