#include <gtest/gtest.h>

#include <sstream>

#include "pis/sim.hpp"

using namespace pis;

namespace {

UserState user_at(Vec2 p, Vec2 v = {1.0, 0.0}, TrafficClass tc = TrafficClass::Urllc) {
  UserState u;
  u.position = p;
  u.velocity = v;
  u.traffic = tc;
  u.history.assign(u.history_length, v);
  return u;
}

// Small obstacle-free world with a handful of users near two UAVs.
ScenarioConfig small_world() {
  ScenarioConfig c;
  c.seed = 3;
  c.environment.side_length = 600.0;
  c.users.n_urllc = 6;
  c.users.n_embb = 8;
  c.uavs.count = 2;
  c.uavs.initial = {{200, 300, 80}, {400, 300, 80}};
  c.episode.n_steps = 5;
  c.episode.policy.name = "stationary";
  return c;
}

ScenarioConfig canonical_small(std::uint64_t seed) {
  ScenarioConfig c;
  c.seed = seed;
  c.environment.random_buildings = {40, 20, 70, 15, 80};
  c.users.n_urllc = 20;
  c.users.n_embb = 20;
  c.episode.n_steps = 15;
  return c;
}

std::string csv_of(const EpisodeResult& r) {
  std::ostringstream os;
  write_episode_csv(os, r);
  write_verification_jsonl(os, r, false);
  return os.str();
}

}  // namespace

TEST(Associate, NearestInRange) {
  const std::vector<UserState> users{user_at({0, 0})};
  // ground distances 250 and 280 at zero altitude difference
  const std::vector<UavState> uavs{{{280, 0, 0}, 30}, {{250, 0, 0}, 30}};
  EXPECT_EQ(associate_users(users, uavs, 300)[0], 1);
}

TEST(Associate, TieGoesToLowerId) {
  const std::vector<UserState> users{user_at({100, 100})};
  const std::vector<UavState> uavs{{{150, 100, 50}, 30}, {{50, 100, 50}, 30}};
  EXPECT_EQ(associate_users(users, uavs, 300)[0], 0);
}

TEST(Associate, NoneInRange) {
  const std::vector<UserState> users{user_at({0, 0})};
  const std::vector<UavState> uavs{{{400, 0, 0}, 30}};
  EXPECT_EQ(associate_users(users, uavs, 300)[0], kUnassigned);
  EXPECT_EQ(associate_users(users, uavs, 400)[0], 0);
}

TEST(Simulate, ZeroActionObstacleFree) {
  auto cfg = small_world();
  cfg.users.initial = {{{200, 310}, {1, 0}, TrafficClass::Urllc},
                       {{400, 280}, {0, -2}, TrafficClass::Urllc},
                       {{210, 250}, {0, 0}, TrafficClass::Embb}};
  StationaryPolicy policy;
  const auto r = run_episode(cfg, policy);
  for (const auto& step : r.steps) {
    EXPECT_EQ(step.reward.phi_energy, 1.0);
    EXPECT_EQ(step.urllc_cr, 1.0);
    EXPECT_EQ(step.records.size(), 2u);
    for (const auto& rec : step.records) {
      EXPECT_EQ(rec.q_u, 1);
      EXPECT_EQ(rec.estimate.p_hat, 0.0);
    }
  }
  EXPECT_EQ(r.metrics.energy_kj, 0.0);
}

TEST(Simulate, Deterministic) {
  auto cfg = canonical_small(5);
  GreedyCoveragePolicy a, b;
  EXPECT_EQ(csv_of(run_episode(cfg, a)), csv_of(run_episode(cfg, b)));
}

TEST(Simulate, WorkerCountDoesNotChangeResults) {
  auto cfg = canonical_small(9);
  GreedyCoveragePolicy a, b;
  const auto one = csv_of(run_episode(cfg, a));
  cfg.verification.workers = 4;
  EXPECT_EQ(one, csv_of(run_episode(cfg, b)));
}

TEST(Simulate, ParkedOverClusterCoversMore) {
  ScenarioConfig cfg;
  cfg.environment.side_length = 800;
  cfg.environment.obstacles = {{{380, 0}, {400, 800}, 120}};  // tall wall splitting the map
  cfg.users.initial.clear();
  for (int i = 0; i < 8; ++i)
    cfg.users.initial.push_back({{200.0 + 10 * i, 400.0 + 5 * i}, {0.5, 0.0}, TrafficClass::Urllc});
  cfg.uavs.count = 1;
  cfg.episode.n_steps = 3;
  StationaryPolicy policy;
  cfg.uavs.initial = {{230, 420, 80}};
  const double over = run_episode(cfg, policy).metrics.mean_breakdown.phi_cov;
  cfg.uavs.initial = {{450, 420, 30}};
  const double behind = run_episode(cfg, policy).metrics.mean_breakdown.phi_cov;
  EXPECT_GT(over, behind);
  EXPECT_EQ(over, 1.0);
}

TEST(Simulate, SingleStepMetricsEqualStep) {
  auto cfg = canonical_small(4);
  cfg.episode.n_steps = 1;
  GreedyCoveragePolicy policy;
  const auto r = run_episode(cfg, policy);
  ASSERT_EQ(r.steps.size(), 1u);
  const auto& s = r.steps[0];
  EXPECT_DOUBLE_EQ(r.metrics.urllc_cr, s.urllc_cr);
  EXPECT_DOUBLE_EQ(r.metrics.embb_cr, s.embb_cr);
  EXPECT_DOUBLE_EQ(r.metrics.sum_throughput_bps, s.sum_throughput_bps);
  EXPECT_DOUBLE_EQ(r.metrics.mean_reward, s.reward.total);
  EXPECT_DOUBLE_EQ(r.metrics.energy_kj, s.energy_kj);
}

TEST(Simulate, AllEmbbReportsUrllcEmpty) {
  auto cfg = small_world();
  cfg.users.n_urllc = 0;
  StationaryPolicy policy;
  const auto r = run_episode(cfg, policy);
  EXPECT_TRUE(r.metrics.urllc_empty);
  EXPECT_EQ(r.metrics.urllc_cr, 1.0);
  for (const auto& s : r.steps) EXPECT_TRUE(s.records.empty());
}

TEST(Policies, StationaryKeepsPositions) {
  auto cfg = canonical_small(2);
  auto s = init_world(cfg);
  const auto start = s.uavs;
  StationaryPolicy policy;
  StepContext ctx{&cfg, nullptr, 0.0};
  for (int k = 0; k < 5; ++k) run_step(s, policy, ctx);
  for (std::size_t k = 0; k < start.size(); ++k) EXPECT_EQ(s.uavs[k].position, start[k].position);
}

TEST(Policies, RandomWalkStaysWithinReachAndVolume) {
  auto cfg = canonical_small(8);
  auto s = init_world(cfg);
  RandomWalkPolicy policy;
  StepContext ctx{&cfg, nullptr, 0.0};
  for (int k = 0; k < 10; ++k) {
    const auto before = s.uavs;
    for (const auto& a : policy.act(s, cfg)) EXPECT_LE(norm(a), cfg.uavs.v_max * cfg.episode.dt + 1e-9);
    run_step(s, policy, ctx);
    for (std::size_t j = 0; j < s.uavs.size(); ++j) {
      EXPECT_LE(norm(s.uavs[j].position - before[j].position), cfg.uavs.v_max * cfg.episode.dt + 1e-9);
      EXPECT_TRUE(s.env.contains(ground(s.uavs[j].position)));
      EXPECT_GE(s.uavs[j].position.z, s.env.altitude_bounds().min);
      EXPECT_LE(s.uavs[j].position.z, s.env.altitude_bounds().max);
    }
    for (const auto& u : s.users) EXPECT_TRUE(s.env.contains(u.position));
  }
}

TEST(Policies, GreedyMovesTowardItsUsers) {
  ScenarioConfig cfg;
  cfg.environment.side_length = 1000;
  cfg.users.initial = {{{600, 500}, {0, 0}, TrafficClass::Urllc}, {{620, 520}, {0, 0}, TrafficClass::Urllc}};
  cfg.uavs.count = 1;
  cfg.uavs.initial = {{400, 500, 100}};
  auto s = init_world(cfg);
  ASSERT_EQ(s.association[0], 0);
  GreedyCoveragePolicy policy;
  StepContext ctx{&cfg, nullptr, 0.0};
  const Vec2 centroid{610, 510};
  double d = distance(ground(s.uavs[0].position), centroid);
  for (int k = 0; k < 6; ++k) {
    run_step(s, policy, ctx);
    const double next = distance(ground(s.uavs[0].position), centroid);
    EXPECT_LE(next, d + 1e-9);
    d = next;
  }
  EXPECT_LT(d, 1.0);
}

TEST(Policies, GreedyBeatsRandomWalkOverSeeds) {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto cfg = canonical_small(seed);
    GreedyCoveragePolicy g;
    RandomWalkPolicy w;
    if (run_episode(cfg, g).metrics.urllc_cr >= run_episode(cfg, w).metrics.urllc_cr) ++wins;
  }
  EXPECT_GE(wins, 15);
}

TEST(Output, CsvHeaderAndRows) {
  auto cfg = small_world();
  StationaryPolicy policy;
  const auto r = run_episode(cfg, policy);
  std::ostringstream os;
  write_episode_csv(os, r);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,phi_thr,phi_cov,phi_bal,phi_energy,phi_coll,total,sum_throughput_bps,urllc_cr,embb_cr,energy_kj");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, cfg.episode.n_steps);
  const auto j = metrics_to_json(r.metrics);
  EXPECT_EQ(j["reward"].size(), 6u);
  EXPECT_GE(j["metrics"].size(), 4u);
}
