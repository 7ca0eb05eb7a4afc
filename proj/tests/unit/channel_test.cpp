#include <gtest/gtest.h>

#include <cmath>

#include "pis/channel.hpp"
#include "pis/rng.hpp"

using namespace pis;

namespace {
// SNR (dB) of a link at distance d with unit fading, written out directly from the link budget.
double snr_db(double d, const ChannelParams& p) {
  return p.tx_power_dbm + p.gain_uav_dbi + p.gain_user_dbi - (p.alpha_pl + 10.0 * p.beta_pl * std::log10(d)) -
         p.noise_power_dbm;
}
}  // namespace

TEST(PathLoss, CanonicalValues) {
  const ChannelParams p;
  EXPECT_NEAR(path_loss_db(1.0, p), 69.8, 1e-12);
  EXPECT_NEAR(path_loss_db(100.0, p), 109.8, 1e-12);
  EXPECT_NEAR(path_loss_db(300.0, p), 119.34, 0.005);
  EXPECT_THROW(path_loss_db(0.0, p), DomainError);
  EXPECT_THROW(path_loss_db(-3.0, p), DomainError);
}

TEST(ReceivedPower, Examples) {
  ChannelParams p;
  EXPECT_NEAR(received_power_dbm(1.0, p), -39.8, 1e-12);
  p.gain_uav_dbi = 3.0;
  p.gain_user_dbi = 3.0;
  EXPECT_NEAR(received_power_dbm(100.0, p), -73.8, 1e-12);
  double prev = received_power_dbm(1.0, p);
  for (double d = 1.5; d < 2000.0; d *= 1.5) {
    const double now = received_power_dbm(d, p);
    EXPECT_LT(now, prev);
    prev = now;
  }
}

TEST(Fading, ZeroKLosMatchesNlos) {
  auto a = derive_stream(11, Stream::Fading);
  auto b = derive_stream(11, Stream::Fading);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_fading(true, 0.0, a), sample_fading(false, 2.0, b));
}

TEST(Fading, UnitMeanAndSecondMoment) {
  for (bool los : {true, false}) {
    const double k = los ? 2.0 : 0.0;
    auto rng = derive_stream(12, Stream::Fading, los ? 1 : 0);
    const int n = 1'000'000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = sample_fading(los, 2.0, rng);
      ASSERT_GE(g, 0.0);
      sum += g;
      sum_sq += g * g;
    }
    EXPECT_NEAR(sum / n, 1.0, 0.01);
    // E|g|^4 for unit-mean Rician power is (2 + 4K + K^2) / (1 + K)^2
    EXPECT_NEAR(sum_sq / n, (2.0 + 4.0 * k + k * k) / ((1.0 + k) * (1.0 + k)), 0.02);
  }
}

TEST(Fading, NlosMedianIsLn2) {
  auto rng = derive_stream(13, Stream::Fading);
  const int n = 1'000'000;
  int below = 0;
  for (int i = 0; i < n; ++i) below += sample_fading(false, 2.0, rng) <= std::log(2.0) ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(below) / n, 0.5, 0.01);
}

TEST(Fading, RejectsNegativeK) {
  RandomStream rng(1);
  EXPECT_THROW(sample_fading(true, -1.0, rng), DomainError);
}

TEST(Throughput, UnitSnrGivesBandwidth) {
  const ChannelParams p;
  const double d = 500.0;
  LinkState link{d, true, 1.0 / std::pow(10.0, snr_db(d, p) / 10.0)};
  EXPECT_NEAR(snr_linear(link, p), 1.0, 1e-12);
  EXPECT_NEAR(throughput_bps(link, p), p.bandwidth_hz, 1e-3);
  link.fading_coeff_sq = 0.0;
  EXPECT_EQ(throughput_bps(link, p), 0.0);
}

TEST(Throughput, DoublingDistanceCostsTenBetaLog2) {
  ChannelParams p;
  const LinkState a{150.0, true, 1.0}, b{300.0, true, 1.0};
  const double drop = 10.0 * std::log10(snr_linear(a, p) / snr_linear(b, p));
  EXPECT_NEAR(drop, 10.0 * p.beta_pl * std::log10(2.0), 1e-9);
  EXPECT_NEAR(drop, 6.02, 0.005);
  p.beta_pl = 4.0;
  EXPECT_NEAR(10.0 * std::log10(snr_linear(a, p) / snr_linear(b, p)), 12.04, 0.005);
}

TEST(Throughput, StrictlyDecreasingInDistance) {
  const ChannelParams p;
  double prev = throughput_bps({1.0, true, 1.0}, p);
  for (double d = 2.0; d < 1e5; d *= 1.3) {
    const double now = throughput_bps({d, true, 1.0}, p);
    EXPECT_LT(now, prev);
    prev = now;
  }
}

TEST(Conversions, RoundTrip) {
  for (double db = -150.0; db <= 150.0; db += 0.37) {
    EXPECT_NEAR(linear_to_db(db_to_linear(db)), db, 1e-9 * std::max(1.0, std::abs(db)));
    EXPECT_NEAR(watts_to_dbm(dbm_to_watts(db)), db, 1e-9 * std::max(1.0, std::abs(db)));
  }
  EXPECT_NEAR(dbm_to_watts(30.0), 1.0, 1e-15);
}

TEST(ChannelParams, Validation) {
  ChannelParams p;
  EXPECT_NO_THROW(p.validate());
  p.bandwidth_hz = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.beta_pl = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.rician_k = -0.1;
  EXPECT_THROW(p.validate(), ConfigError);
}
