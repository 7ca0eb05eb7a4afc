#pragma once

#include <cmath>

#include "pis/core.hpp"
#include "pis/rng.hpp"

namespace pis {

/// Air-to-ground link parameters. Defaults: 73 GHz LoS constants, 30 dBm transmit power and
/// Rician K = 2; noise floor and bandwidth are not published and are configurable.
struct ChannelParams {
  double alpha_pl = 69.8;           // dB
  double beta_pl = 2.0;             // path-loss exponent
  double tx_power_dbm = 30.0;
  double gain_uav_dbi = 0.0;
  double gain_user_dbi = 0.0;
  double bandwidth_hz = 100e6;
  double noise_power_dbm = -85.0;
  double rician_k = 2.0;
  double shadowing_sigma_db = 3.1;
  bool shadowing_enabled = false;

  void validate() const {
    if (!(bandwidth_hz > 0.0)) throw ConfigError("channel.bandwidth_hz must be > 0");
    if (!(beta_pl > 0.0)) throw ConfigError("channel.beta_pl must be > 0");
    if (!(rician_k >= 0.0)) throw ConfigError("channel.rician_k must be >= 0");
    if (!(shadowing_sigma_db >= 0.0)) throw ConfigError("channel.shadowing_sigma_db must be >= 0");
  }

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

struct LinkState {
  double distance_m = 1.0;
  bool los = true;
  double fading_coeff_sq = 1.0;  // |g|^2
  double shadowing_db = 0.0;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }
inline double dbm_to_watts(double dbm) { return db_to_linear(dbm - 30.0); }
inline double watts_to_dbm(double watts) { return linear_to_db(watts) + 30.0; }

inline double path_loss_db(double d, const ChannelParams& p) {
  if (!(d > 0.0)) throw DomainError("path_loss_db: distance must be > 0");
  return p.alpha_pl + 10.0 * p.beta_pl * std::log10(d);
}

inline double received_power_dbm(double d, const ChannelParams& p) {
  return p.tx_power_dbm + p.gain_uav_dbi + p.gain_user_dbi - path_loss_db(d, p);
}

/// Small-scale fading power |g|^2 with unit mean. LoS: Rician envelope with K-factor
/// `rician_k`; NLoS: Rayleigh envelope (exponential power), i.e. the same draw with K = 0.
inline double sample_fading(bool los, double rician_k, RandomStream& rng) {
  if (!(rician_k >= 0.0)) throw DomainError("sample_fading: rician_k must be >= 0");
  const double k = los ? rician_k : 0.0;
  const double specular = std::sqrt(k / (k + 1.0));
  const double scatter = std::sqrt(1.0 / (2.0 * (k + 1.0)));
  const double re = specular + scatter * rng.normal();
  const double im = scatter * rng.normal();
  return re * re + im * im;
}

/// Linear SNR of a link: received power times |g|^2 over the noise floor.
inline double snr_linear(const LinkState& link, const ChannelParams& p) {
  const double rx_dbm = received_power_dbm(link.distance_m, p) + link.shadowing_db;
  return db_to_linear(rx_dbm - p.noise_power_dbm) * link.fading_coeff_sq;
}

inline double shannon_bps(double bandwidth_hz, double snr) { return bandwidth_hz * std::log2(1.0 + snr); }

inline double throughput_bps(const LinkState& link, const ChannelParams& p) {
  return shannon_bps(p.bandwidth_hz, snr_linear(link, p));
}

}  // namespace pis
