#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "pis/channel.hpp"
#include "pis/core.hpp"

namespace pis {

struct RewardWeights {
  double throughput = 0.2;
  double coverage = 0.2;
  double balance = 0.2;
  double energy = 0.2;
  double collision = 0.2;

  void validate() const {
    for (double w : {throughput, coverage, balance, energy, collision})
      if (!(w >= 0.0)) throw ConfigError("reward.weights must be nonnegative");
    if (std::abs(throughput + coverage + balance + energy + collision - 1.0) > 1e-9)
      throw ConfigError("reward.weights must sum to 1");
  }
  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

struct RewardBreakdown {
  double phi_thr = 0.0;
  double phi_cov = 0.0;
  double phi_bal = 0.0;
  double phi_energy = 0.0;
  double phi_coll = 0.0;
  double total = 0.0;
};

/// Achieved sum rate over the best case: every user served at distance h_min, LoS, |g|^2 = 1.
inline double phi_throughput(std::span<const double> link_throughputs_bps, std::size_t n_users,
                             const ChannelParams& params, double h_min) {
  if (n_users == 0) return 0.0;
  double sum = 0.0;
  for (double t : link_throughputs_bps) sum += t;
  const double best = throughput_bps(LinkState{h_min, true, 1.0}, params);
  return std::clamp(sum / (static_cast<double>(n_users) * best), 0.0, 1.0);
}

inline double phi_coverage(std::span<const int> qualities, std::span<const double> weights) {
  if (qualities.empty()) throw DomainError("phi_coverage: empty user set");
  if (qualities.size() != weights.size()) throw DomainError("phi_coverage: qualities and weights differ in length");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < qualities.size(); ++i) {
    num += weights[i] * (qualities[i] != 0 ? 1.0 : 0.0);
    den += weights[i];
  }
  if (!(den > 0.0)) throw DomainError("phi_coverage: user weights sum to zero");
  return num / den;
}

/// (mean - population stddev) / (mean + eps) of users per UAV, clamped to [0, 1].
inline double phi_load_balance(std::span<const double> counts, double eps = 1e-6) {
  if (counts.empty()) throw DomainError("phi_load_balance: no UAVs");
  double mean = 0.0;
  for (double c : counts) mean += c;
  mean /= static_cast<double>(counts.size());
  double var = 0.0;
  for (double c : counts) var += (c - mean) * (c - mean);
  const double sd = std::sqrt(var / static_cast<double>(counts.size()));
  return std::clamp((mean - sd) / (mean + eps), 0.0, 1.0);
}

inline double phi_energy(std::span<const double> displacements, double v_max, double dt) {
  if (displacements.empty()) return 1.0;
  double total = 0.0;
  for (double d : displacements) total += d;
  return 1.0 - total / (static_cast<double>(displacements.size()) * v_max * dt);
}

/// Mean over UAV pairs of exp(-|d - d_shift| / k_scale); 0 with fewer than two UAVs.
inline double phi_collision(std::span<const double> pair_distances, double d_shift, double k_scale) {
  if (pair_distances.empty()) return 0.0;
  double sum = 0.0;
  for (double d : pair_distances) sum += std::exp(-std::abs(d - d_shift) / k_scale);
  return sum / static_cast<double>(pair_distances.size());
}

/// Weighted sum of the reward terms; the collision term is subtracted.
inline double aggregate_reward(const RewardBreakdown& b, const RewardWeights& w) {
  return w.throughput * b.phi_thr + w.coverage * b.phi_cov + w.balance * b.phi_bal + w.energy * b.phi_energy -
         w.collision * b.phi_coll;
}

/// Jain's fairness index (sum x)^2 / (n sum x^2).
inline double jain_index(std::span<const double> values) {
  if (values.empty()) throw DomainError("jain_index: empty input");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double v : values) {
    if (v < 0.0) throw DomainError("jain_index: negative value");
    sum += v;
    sum_sq += v * v;
  }
  if (sum_sq == 0.0) throw DomainError("jain_index: all values are zero");
  return sum * sum / (static_cast<double>(values.size()) * sum_sq);
}

}  // namespace pis
