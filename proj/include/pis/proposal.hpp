#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "pis/core.hpp"
#include "pis/gmm.hpp"
#include "pis/mobility.hpp"
#include "pis/rng.hpp"

namespace pis {

/// Prediction-free stand-in for a learned trajectory predictor: K Gaussians fanned over
/// headings around the current direction of travel.
struct KinematicParams {
  int components = 5;
  double spread = kPi / 4.0;      // half-angle of the heading fan, radians
  double reach = 0.75;            // fraction of the radius travelled along each heading, in (0, 1]
  double sigma_scale = 0.25;      // sigma = sigma_scale * r for moving users
  double still_sigma_scale = 0.5; // sigma = still_sigma_scale * r for a stationary user
  double min_sigma = 1e-3;        // floor that keeps variances positive when r = 0

  friend bool operator==(const KinematicParams&, const KinematicParams&) = default;
};

inline GaussianMixture2D kinematic_proposal(const UserState& u, const MobilityCircle& circle,
                                            const KinematicParams& params = {}) {
  if (params.components < 1) throw ConfigError("kinematic proposal: components must be >= 1");
  if (!(params.reach > 0.0 && params.reach <= 1.0)) throw ConfigError("kinematic proposal: reach must be in (0, 1]");
  const double r = circle.radius;
  const double speed = norm(u.velocity);
  if (speed == 0.0 || r == 0.0) {
    const double sigma = std::max(params.still_sigma_scale * r, params.min_sigma);
    return GaussianMixture2D({{1.0, circle.center, sigma, sigma}});
  }
  const int k_count = params.components;
  const Vec2 step = u.velocity * (r * params.reach / speed);
  const double sigma = std::max(params.sigma_scale * r, params.min_sigma);
  const double decay = params.spread > 0.0 ? params.spread / 2.0 : 1.0;

  std::vector<GaussianComponent> comps;
  comps.reserve(static_cast<std::size_t>(k_count));
  double total = 0.0;
  for (int k = 0; k < k_count; ++k) {
    const double heading = k_count == 1 ? 0.0 : params.spread * (2.0 * k / (k_count - 1) - 1.0);
    const double w = std::exp(-0.5 * (heading / decay) * (heading / decay));
    comps.push_back({w, circle.center + rotate(step, heading), sigma, sigma});
    total += w;
  }
  for (auto& c : comps) c.weight /= total;
  return GaussianMixture2D(std::move(comps));
}

enum class DensityMode {
  PaperFaithful,  // alpha * q_pred + (1 - alpha) / A, taken literally
  Renormalized,   // the same, divided by its mass on the region (the true sampling density)
};

/// Defensive mixture alpha * q_pred + (1 - alpha) * Uniform(region).
///
/// Sampling draws a branch, draws a point, and redraws from scratch whenever the point falls
/// outside the region. The density of that procedure is the literal mixture divided by
/// Z = alpha * G + (1 - alpha), where G is the predictor's mass on the region; Renormalized
/// mode uses it, PaperFaithful mode uses Z = 1.
struct DefensiveMixture {
  double alpha = 0.0;
  GaussianMixture2D gmm;
  ClippedDisk region;
  double area = 0.0;
  std::optional<double> gmm_mass;  // computed iff renormalized
  DensityMode mode = DensityMode::Renormalized;

  double normalizer() const {
    return mode == DensityMode::Renormalized ? alpha * gmm_mass.value() + (1.0 - alpha) : 1.0;
  }
};

inline DefensiveMixture make_defensive_mixture(double alpha, GaussianMixture2D gmm, const ClippedDisk& region,
                                               DensityMode mode = DensityMode::Renormalized,
                                               double mass_tol = 1e-4) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("defensive mixture: alpha must be in [0, 1)");
  DefensiveMixture q;
  q.alpha = alpha;
  q.region = region;
  q.area = region_area(region);
  q.mode = mode;
  if (mode == DensityMode::Renormalized) q.gmm_mass = gmm_mass_in_region(gmm, region, mass_tol);
  q.gmm = std::move(gmm);
  return q;
}

namespace detail {
inline bool in_region_tolerant(const ClippedDisk& region, Vec2 z) {
  const double slack = 1e-9 * std::max(1.0, region.circle.radius);
  return distance(z, region.circle.center) <= region.circle.radius + slack && z.x >= region.lo - slack &&
         z.x <= region.hi + slack && z.y >= region.lo - slack && z.y <= region.hi + slack;
}
}  // namespace detail

/// Proposal density at z (1/m^2). Throws DomainError outside the region.
inline double mixture_density(const DefensiveMixture& q, Vec2 z) {
  if (!detail::in_region_tolerant(q.region, z)) throw DomainError("mixture_density: point outside mobility circle");
  return (q.alpha * q.gmm.pdf(z) + (1.0 - q.alpha) / q.area) / q.normalizer();
}

/// Importance weight p(z) / q(z) with p = 1/A, written so alpha = 0 gives exactly 1.
inline double importance_weight(const DefensiveMixture& q, Vec2 z) {
  return q.normalizer() / (q.alpha * q.area * q.gmm.pdf(z) + (1.0 - q.alpha));
}

struct RejectionStats {
  std::uint64_t attempts = 0;
  std::uint64_t accepted = 0;
};

inline constexpr std::uint64_t kMinAttemptsForDegeneracy = 100000;
inline constexpr double kMinAcceptanceRate = 1e-3;

/// One draw from the defensive mixture restricted to its region. Draws outside the region are
/// rejected and redrawn (branch included). Throws DegenerateProposalError once at least 1e5
/// attempts have been made with an acceptance rate below 1e-3.
inline Vec2 sample_mixture(const DefensiveMixture& q, RandomStream& rng, RejectionStats& stats) {
  const MobilityCircle& c = q.region.circle;
  if (c.radius == 0.0) {
    ++stats.attempts;
    ++stats.accepted;
    return c.center;
  }
  for (;;) {
    const bool predicted = q.alpha > 0.0 && rng.uniform() < q.alpha;
    const Vec2 z = predicted ? q.gmm.sample(rng) : rng.uniform_in_disk(c.center, c.radius);
    ++stats.attempts;
    if (q.region.contains(z)) {
      ++stats.accepted;
      return z;
    }
    if (stats.attempts >= kMinAttemptsForDegeneracy &&
        static_cast<double>(stats.accepted) < kMinAcceptanceRate * static_cast<double>(stats.attempts))
      throw DegenerateProposalError("proposal mass lies almost entirely outside the mobility circle");
  }
}

inline Vec2 sample_mixture(const DefensiveMixture& q, RandomStream& rng) {
  RejectionStats stats;
  return sample_mixture(q, rng, stats);
}

}  // namespace pis
