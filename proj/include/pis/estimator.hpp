#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pis/core.hpp"
#include "pis/geometry.hpp"
#include "pis/gmm.hpp"
#include "pis/mdn.hpp"
#include "pis/mobility.hpp"
#include "pis/proposal.hpp"
#include "pis/rng.hpp"

namespace pis {

struct FailureEstimate {
  double p_hat = 0.0;
  double variance_hat = 0.0;
  std::uint64_t n_samples = 0;
  double max_weight_seen = 0.0;  // over failure samples
  std::uint64_t n_failures_hit = 0;
  std::uint64_t attempts = 0;  // draws including rejections
  bool covered = false;        // Q_u = 1 iff p_hat < epsilon
  double elapsed_s = 0.0;

  friend bool operator==(const FailureEstimate&, const FailureEstimate&) = default;
};

enum class ProposalMode { Uniform, Kinematic, Mdn };

struct VerificationConfig {
  std::uint64_t n_samples = 100;
  double alpha = 0.6;
  double epsilon = 1e-2;
  ProposalMode proposal = ProposalMode::Kinematic;
  DensityMode density = DensityMode::Renormalized;
  std::uint64_t seed = 0;
  KinematicParams kinematic;
  double mass_tol = 1e-4;
  bool conservative_radius = false;
  std::string mdn_weights;  // path, used when proposal == Mdn
  unsigned workers = 1;

  void validate() const {
    if (n_samples < 1) throw ConfigError("verification.n_samples must be >= 1");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("verification.alpha must be in [0, 1)");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("verification.epsilon must be in (0, 1)");
    if (!(mass_tol > 0.0)) throw ConfigError("verification.mass_tol must be > 0");
    if (proposal == ProposalMode::Mdn && mdn_weights.empty())
      throw ConfigError("verification.mdn_weights is required when proposal_mode is mdn");
    if (workers < 1) throw ConfigError("verification.workers must be >= 1");
  }

  friend bool operator==(const VerificationConfig&, const VerificationConfig&) = default;
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline FailureEstimate point_estimate(const MobilityCircle& circle, Vec3 uav, const Environment& env,
                                      double epsilon) {
  FailureEstimate e;
  const bool hit = is_nlos(uav, circle.center, env);
  e.p_hat = hit ? 1.0 : 0.0;
  e.n_samples = e.attempts = 1;
  e.n_failures_hit = hit ? 1 : 0;
  e.max_weight_seen = hit ? 1.0 : 0.0;
  e.covered = e.p_hat < epsilon;
  return e;
}

inline Vec2 sample_uniform_region(const ClippedDisk& region, RandomStream& rng, RejectionStats& stats) {
  for (;;) {
    const Vec2 z = rng.uniform_in_disk(region.circle.center, region.circle.radius);
    ++stats.attempts;
    if (region.contains(z)) {
      ++stats.accepted;
      return z;
    }
    if (stats.attempts >= kMinAttemptsForDegeneracy &&
        static_cast<double>(stats.accepted) < kMinAcceptanceRate * static_cast<double>(stats.attempts))
      throw DegenerateProposalError("mobility circle lies almost entirely outside the area");
  }
}

}  // namespace detail

/// Crude Monte Carlo: fraction of N uniform draws on the circle (clipped to the area) that are
/// NLoS, with the binomial variance p(1 - p)/N.
inline FailureEstimate estimate_uniform(const MobilityCircle& circle, Vec3 uav, const Environment& env,
                                        std::uint64_t n, RandomStream& rng, double epsilon = 1e-2) {
  if (n < 1) throw DomainError("estimate_uniform: N must be >= 1");
  const detail::Stopwatch clock;
  if (circle.radius == 0.0) {
    auto e = detail::point_estimate(circle, uav, env, epsilon);
    e.elapsed_s = clock.seconds();
    return e;
  }
  const ClippedDisk region = clip_to_area(circle, env.side_length());
  RejectionStats stats;
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const Vec2 z = detail::sample_uniform_region(region, rng, stats);
    if (is_nlos(uav, z, env)) ++hits;
  }
  FailureEstimate e;
  e.n_samples = n;
  e.attempts = stats.attempts;
  e.n_failures_hit = hits;
  e.p_hat = static_cast<double>(hits) / static_cast<double>(n);
  e.variance_hat = e.p_hat * (1.0 - e.p_hat) / static_cast<double>(n);
  e.max_weight_seen = hits > 0 ? 1.0 : 0.0;
  e.covered = e.p_hat < epsilon;
  e.elapsed_s = clock.seconds();
  return e;
}

/// Importance-sampling estimate of the failure probability with samples from the defensive
/// mixture `q`. Rejected draws do not consume the sample budget.
inline FailureEstimate estimate_pis(const MobilityCircle& circle, Vec3 uav, const Environment& env,
                                    const DefensiveMixture& q, std::uint64_t n, RandomStream& rng,
                                    double epsilon = 1e-2) {
  if (n < 1) throw DomainError("estimate_pis: N must be >= 1");
  if (!(q.region.circle.center == circle.center) || q.region.circle.radius != circle.radius)
    throw DomainError("estimate_pis: mixture is defined on a different circle");
  const detail::Stopwatch clock;
  if (circle.radius == 0.0) {
    auto e = detail::point_estimate(circle, uav, env, epsilon);
    e.elapsed_s = clock.seconds();
    return e;
  }
  RejectionStats stats;
  double sum = 0.0;
  double sum_sq = 0.0;
  FailureEstimate e;
  for (std::uint64_t i = 0; i < n; ++i) {
    const Vec2 z = sample_mixture(q, rng, stats);
    if (!is_nlos(uav, z, env)) continue;
    const double w = importance_weight(q, z);
    sum += w;
    sum_sq += w * w;
    e.max_weight_seen = std::max(e.max_weight_seen, w);
    ++e.n_failures_hit;
  }
  const double count = static_cast<double>(n);
  e.n_samples = n;
  e.attempts = stats.attempts;
  e.p_hat = sum / count;
  e.variance_hat = n > 1 ? std::max(0.0, (sum_sq - count * e.p_hat * e.p_hat) / (count - 1.0)) / count : 0.0;
  e.covered = e.p_hat < epsilon;
  e.elapsed_s = clock.seconds();
  return e;
}

inline FailureEstimate estimate_pis(const MobilityCircle& circle, Vec3 uav, const Environment& env,
                                    const DefensiveMixture& q, const VerificationConfig& cfg, RandomStream& rng) {
  return estimate_pis(circle, uav, env, q, cfg.n_samples, rng, cfg.epsilon);
}

/// Lattice points (spacing `resolution`, one point at the center) inside the clipped circle and
/// the NLoS subset.
struct FailureGrid {
  double spacing = 0.0;
  std::uint64_t n_points = 0;
  std::vector<Vec2> nlos_points;
  std::vector<Vec2> los_points;

  double pf() const { return n_points == 0 ? 0.0 : static_cast<double>(nlos_points.size()) / static_cast<double>(n_points); }
};

inline FailureGrid failure_grid(const MobilityCircle& circle, Vec3 uav, const Environment& env, double resolution) {
  if (!(resolution > 0.0)) throw DomainError("failure_grid: resolution must be > 0");
  FailureGrid grid;
  grid.spacing = resolution;
  const ClippedDisk region = clip_to_area(circle, env.side_length());
  const auto steps = static_cast<long>(std::floor(circle.radius / resolution));
  for (long j = -steps; j <= steps; ++j) {
    for (long i = -steps; i <= steps; ++i) {
      const Vec2 z{circle.center.x + static_cast<double>(i) * resolution,
                   circle.center.y + static_cast<double>(j) * resolution};
      if (!region.contains(z)) continue;
      ++grid.n_points;
      (is_nlos(uav, z, env) ? grid.nlos_points : grid.los_points).push_back(z);
    }
  }
  return grid;
}

/// Reference failure probability: NLoS fraction of a square lattice inside the circle.
inline double oracle_pf_grid(const MobilityCircle& circle, Vec3 uav, const Environment& env, double resolution) {
  if (circle.radius == 0.0) return is_nlos(uav, circle.center, env) ? 1.0 : 0.0;
  return failure_grid(circle, uav, env, resolution).pf();
}

/// True iff q(z) >= p(z) = 1/A at every NLoS lattice point (the variance-reduction condition).
inline bool dominates_uniform_on_failures(const DefensiveMixture& q, const FailureGrid& grid) {
  const double p = 1.0 / q.area;
  return std::all_of(grid.nlos_points.begin(), grid.nlos_points.end(),
                     [&](Vec2 z) { return mixture_density(q, z) >= p; });
}

/// Per-sample second moment E_p[I_F p/q] minus P_f^2, by lattice quadrature; dividing by N gives
/// the estimator variance.
inline double lattice_pis_variance(const DefensiveMixture& q, const FailureGrid& grid, std::uint64_t n) {
  double second = 0.0;
  for (Vec2 z : grid.nlos_points) second += importance_weight(q, z);
  second /= static_cast<double>(grid.n_points);
  const double pf = grid.pf();
  return (second - pf * pf) / static_cast<double>(n);
}

struct OptimalProposalResult {
  bool skipped = false;  // P_f in {0, 1}
  double pf_oracle = 0.0;
  double weight = 0.0;  // constant weight of every hit
  double max_abs_deviation = 0.0;
  double grid_error = 0.0;  // bound on |p_hat - pf| from cells straddling the shadow boundary
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> estimates;
};

/// Runs the importance-sampling estimator with the oracle-informed proposal: uniform over the
/// failure points of the lattice cells whose centers are NLoS, with density taken as one over the
/// cells' total area. Used to check the zero-variance property of q*; the estimate is off from
/// the true P_f only by the discretisation, which `grid_error` bounds.
inline OptimalProposalResult optimal_proposal_check(const MobilityCircle& circle, Vec3 uav, const Environment& env,
                                                    double resolution, std::uint64_t n, std::uint64_t replicates,
                                                    RandomStream& rng) {
  OptimalProposalResult out;
  const FailureGrid grid = failure_grid(circle, uav, env, resolution);
  out.pf_oracle = grid.pf();
  if (grid.nlos_points.empty() || grid.los_points.empty()) {
    out.skipped = true;
    return out;
  }
  const ClippedDisk region = clip_to_area(circle, env.side_length());
  const double area = region_area(region);
  const double h = grid.spacing;
  const auto cells = grid.nlos_points.size();
  out.weight = static_cast<double>(cells) * h * h / area;  // (1/A) / (1/(cells h^2))

  // Fraction of NLoS cells adjacent to a LoS lattice point bounds the share of a cell's area
  // that can be LoS.
  std::uint64_t boundary = 0;
  auto nlos_at = [&](Vec2 z) { return is_nlos(uav, z, env); };
  for (Vec2 z : grid.nlos_points) {
    const Vec2 nbrs[4] = {{z.x + h, z.y}, {z.x - h, z.y}, {z.x, z.y + h}, {z.x, z.y - h}};
    for (Vec2 nb : nbrs)
      if (!region.contains(nb) || !nlos_at(nb)) {
        ++boundary;
        break;
      }
  }
  out.grid_error = std::abs(out.weight - out.pf_oracle) +
                   out.weight * static_cast<double>(boundary) / static_cast<double>(cells);

  for (std::uint64_t rep = 0; rep < replicates; ++rep) {
    double sum = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
      // q* lives on the failure set only, so LoS draws inside a straddling cell are redrawn
      bool hit = false;
      for (int attempt = 0; attempt < 10000 && !hit; ++attempt) {
        const auto idx = std::min(cells - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(cells)));
        const Vec2 c = grid.nlos_points[idx];
        const Vec2 z{c.x + h * (rng.uniform() - 0.5), c.y + h * (rng.uniform() - 0.5)};
        hit = region.contains(z) && is_nlos(uav, z, env);
      }
      if (!hit) throw DegenerateProposalError("optimal_proposal_check: no failure point found in the NLoS cells");
      sum += out.weight;
    }
    out.estimates.push_back(sum / static_cast<double>(n));
  }
  double mean = 0.0;
  for (double v : out.estimates) mean += v;
  mean /= static_cast<double>(replicates);
  double var = 0.0;
  for (double v : out.estimates) {
    var += (v - mean) * (v - mean);
    out.max_abs_deviation = std::max(out.max_abs_deviation, std::abs(v - out.pf_oracle));
  }
  out.mean = mean;
  out.variance = replicates > 1 ? var / static_cast<double>(replicates - 1) : 0.0;
  return out;
}

/// Velocity history of length `h`, left-padded with the oldest known velocity (or the current
/// one when nothing has been recorded yet).
inline std::vector<Vec2> padded_history(const UserState& u, std::size_t h) {
  std::vector<Vec2> out(u.history.begin(), u.history.end());
  if (out.size() > h) out.erase(out.begin(), out.end() - static_cast<std::ptrdiff_t>(h));
  const Vec2 fill = out.empty() ? u.velocity : out.front();
  out.insert(out.begin(), h - out.size(), fill);
  return out;
}

/// Builds the configured proposal for one user and runs the estimator. `elapsed_s` covers the
/// whole pipeline (prediction, mixture construction, sampling).
inline FailureEstimate verify_user(const UserState& u, Vec3 uav, const Environment& env, double dt,
                                   const VerificationConfig& cfg, RandomStream& rng,
                                   const MdnWeights* mdn = nullptr) {
  const detail::Stopwatch clock;
  const MobilityCircle circle = mobility_circle(u, dt, cfg.conservative_radius);
  FailureEstimate e;
  if (cfg.proposal == ProposalMode::Uniform) {
    e = estimate_uniform(circle, uav, env, cfg.n_samples, rng, cfg.epsilon);
  } else {
    GaussianMixture2D gmm;
    if (cfg.proposal == ProposalMode::Mdn) {
      if (mdn == nullptr) throw ConfigError("verification: mdn proposal requested without loaded weights");
      const auto hist = padded_history(u, mdn->history_length);
      gmm = mdn_infer(hist, *mdn, u.position);
    } else {
      gmm = kinematic_proposal(u, circle, cfg.kinematic);
    }
    const auto q = make_defensive_mixture(cfg.alpha, std::move(gmm), clip_to_area(circle, env.side_length()),
                                          cfg.density, cfg.mass_tol);
    e = estimate_pis(circle, uav, env, q, cfg, rng);
  }
  e.elapsed_s = clock.seconds();
  return e;
}

}  // namespace pis
