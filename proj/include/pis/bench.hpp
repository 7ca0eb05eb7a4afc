#pragma once

#include <cstdint>
#include <iomanip>
#include <ostream>
#include <vector>

#include "pis/config.hpp"
#include "pis/estimator.hpp"
#include "pis/gmm.hpp"
#include "pis/proposal.hpp"
#include "pis/rng.hpp"
#include "pis/scenarios.hpp"

namespace pis {

inline GaussianMixture2D shift_means(const GaussianMixture2D& g, Vec2 offset) {
  auto comps = g.components();
  for (auto& c : comps) c.mean = c.mean + offset;
  return GaussianMixture2D(std::move(comps));
}

struct BenchRow {
  BenchCell cell;
  std::uint64_t replicates = 0;
  double oracle_pf = 0.0;
  double mean_p_hat = 0.0;
  double var_p_hat = 0.0;  // empirical, over replicates (divisor R - 1)
  double max_weight = 0.0;
  double mean_latency_us = 0.0;
};

/// One estimate on the shadow scenario with the given cell settings. alpha = 0 runs the plain
/// uniform estimator; `mismatched` pushes the predictor's means `shift` radii away from the shadow.
inline FailureEstimate bench_estimate(const ShadowScenario& sc, const BenchCell& cell, const VerificationConfig& base,
                                      double mismatch_shift, RandomStream& rng) {
  if (cell.alpha == 0.0) return estimate_uniform(sc.circle, sc.uav, sc.env, cell.n_samples, rng, base.epsilon);
  GaussianMixture2D gmm = kinematic_proposal(sc.user, sc.circle, base.kinematic);
  if (cell.mismatched) {
    const double speed = norm(sc.user.velocity);
    const Vec2 away = speed > 0.0 ? sc.user.velocity * (-1.0 / speed) : Vec2{1.0, 0.0};
    gmm = shift_means(gmm, away * (mismatch_shift * sc.circle.radius));
  }
  const auto q = make_defensive_mixture(cell.alpha, std::move(gmm), clip_to_area(sc.circle, sc.env.side_length()),
                                        base.density, base.mass_tol);
  return estimate_pis(sc.circle, sc.uav, sc.env, q, cell.n_samples, rng, base.epsilon);
}

inline BenchRow run_bench_cell(const ShadowScenario& sc, const BenchCell& cell, const VerificationConfig& base,
                               double mismatch_shift, std::uint64_t replicates, std::uint64_t seed,
                               std::uint64_t cell_index, double oracle_pf) {
  BenchRow row;
  row.cell = cell;
  row.replicates = replicates;
  row.oracle_pf = oracle_pf;
  std::vector<double> est;
  est.reserve(replicates);
  double elapsed = 0.0;
  for (std::uint64_t r = 0; r < replicates; ++r) {
    auto rng = derive_stream(seed, Stream::Bench, cell_index, r);
    const detail::Stopwatch clock;
    const FailureEstimate e = bench_estimate(sc, cell, base, mismatch_shift, rng);
    elapsed += clock.seconds();
    est.push_back(e.p_hat);
    row.max_weight = std::max(row.max_weight, e.max_weight_seen);
  }
  double mean = 0.0;
  for (double v : est) mean += v;
  mean /= static_cast<double>(replicates);
  double var = 0.0;
  for (double v : est) var += (v - mean) * (v - mean);
  row.mean_p_hat = mean;
  row.var_p_hat = replicates > 1 ? var / static_cast<double>(replicates - 1) : 0.0;
  row.mean_latency_us = elapsed / static_cast<double>(replicates) * 1e6;
  return row;
}

inline std::vector<BenchRow> run_bench(const ScenarioConfig& cfg) {
  const ShadowScenario sc = make_shadow_scenario(cfg.bench.scenario);
  const double pf = oracle_pf_grid(sc.circle, sc.uav, sc.env, sc.circle.radius * cfg.bench.oracle_resolution_fraction);
  std::vector<BenchRow> rows;
  for (std::size_t i = 0; i < cfg.bench.cells.size(); ++i)
    rows.push_back(run_bench_cell(sc, cfg.bench.cells[i], cfg.verification, cfg.bench.mismatch_shift,
                                  cfg.bench.replicates, cfg.seed, i, pf));
  return rows;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "alpha,n_samples,mismatched,replicates,oracle_pf,mean_p_hat,var_p_hat,uniform_var,max_weight,"
         "mean_latency_us\n";
  out << std::setprecision(12);
  for (const auto& r : rows) {
    const double uniform_var = r.oracle_pf * (1.0 - r.oracle_pf) / static_cast<double>(r.cell.n_samples);
    out << r.cell.alpha << ',' << r.cell.n_samples << ',' << (r.cell.mismatched ? 1 : 0) << ',' << r.replicates << ','
        << r.oracle_pf << ',' << r.mean_p_hat << ',' << r.var_p_hat << ',' << uniform_var << ',' << r.max_weight
        << ',' << r.mean_latency_us << '\n';
  }
}

}  // namespace pis
