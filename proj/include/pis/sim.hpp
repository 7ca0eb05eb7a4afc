#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pis/channel.hpp"
#include "pis/config.hpp"
#include "pis/estimator.hpp"
#include "pis/geometry.hpp"
#include "pis/mdn.hpp"
#include "pis/mobility.hpp"
#include "pis/proposal.hpp"
#include "pis/reward.hpp"
#include "pis/rng.hpp"

namespace pis {

inline constexpr int kUnassigned = -1;

struct WorldState {
  int t = 0;
  Environment env;
  std::vector<UserState> users;
  std::vector<UavState> uavs;
  std::vector<int> association;  // serving UAV per user, kUnassigned if none
};

/// Nearest UAV (3D distance) within `comm_range`; ties go to the lower id.
inline std::vector<int> associate_users(const std::vector<UserState>& users, const std::vector<UavState>& uavs,
                                        double comm_range) {
  std::vector<int> out(users.size(), kUnassigned);
  for (std::size_t i = 0; i < users.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < uavs.size(); ++k) {
      const double d = norm(uavs[k].position - lift(users[i].position, 0.0));
      if (d <= comm_range && d < best) {
        best = d;
        out[i] = static_cast<int>(k);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Policies

class Policy {
 public:
  virtual ~Policy() = default;
  /// One displacement per UAV for the coming interval.
  virtual std::vector<Vec3> act(const WorldState& s, const ScenarioConfig& cfg) = 0;
  virtual std::string name() const = 0;
};

class StationaryPolicy final : public Policy {
 public:
  std::vector<Vec3> act(const WorldState& s, const ScenarioConfig&) override { return std::vector<Vec3>(s.uavs.size()); }
  std::string name() const override { return "stationary"; }
};

class RandomWalkPolicy final : public Policy {
 public:
  std::vector<Vec3> act(const WorldState& s, const ScenarioConfig& cfg) override {
    std::vector<Vec3> out;
    for (std::size_t k = 0; k < s.uavs.size(); ++k) {
      auto rng = derive_stream(cfg.seed, Stream::Policy, static_cast<std::uint64_t>(s.t), k);
      const double reach = s.uavs[k].v_max * cfg.episode.dt;
      const double r = reach * std::sqrt(rng.uniform());
      const double theta = 2.0 * kPi * rng.uniform();
      out.push_back({r * std::cos(theta), r * std::sin(theta), 0.0});
    }
    return out;
  }
  std::string name() const override { return "random_walk"; }
};

/// Flies each UAV toward the centroid of its URLLC users' predicted positions (mixture mean of
/// the kinematic proposal). A UAV with no URLLC users heads for the nearest unserved one.
class GreedyCoveragePolicy final : public Policy {
 public:
  std::vector<Vec3> act(const WorldState& s, const ScenarioConfig& cfg) override {
    const double dt = cfg.episode.dt;
    std::vector<Vec2> predicted(s.users.size());
    for (std::size_t i = 0; i < s.users.size(); ++i) {
      const auto& u = s.users[i];
      if (u.traffic != TrafficClass::Urllc) continue;
      const MobilityCircle c = mobility_circle(u, dt);
      predicted[i] = c.radius > 0.0 ? kinematic_proposal(u, c, cfg.verification.kinematic).mean() : u.position;
    }
    std::vector<Vec3> out(s.uavs.size());
    for (std::size_t k = 0; k < s.uavs.size(); ++k) {
      Vec2 sum;
      int n = 0;
      for (std::size_t i = 0; i < s.users.size(); ++i) {
        if (s.users[i].traffic != TrafficClass::Urllc || s.association[i] != static_cast<int>(k)) continue;
        sum = sum + predicted[i];
        ++n;
      }
      const Vec2 here = ground(s.uavs[k].position);
      std::optional<Vec2> target;
      if (n > 0) {
        target = sum * (1.0 / n);
      } else {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < s.users.size(); ++i) {
          if (s.users[i].traffic != TrafficClass::Urllc || s.association[i] != kUnassigned) continue;
          const double d = distance(predicted[i], here);
          if (d < best) {
            best = d;
            target = predicted[i];
          }
        }
      }
      if (!target) continue;
      Vec2 step = *target - here;
      const double len = norm(step);
      const double reach = s.uavs[k].v_max * dt;
      if (len > reach) step = step * (reach / len);
      out[k] = lift(step, 0.0);
    }
    return out;
  }
  std::string name() const override { return "greedy_coverage"; }
};

inline std::unique_ptr<Policy> make_policy(const std::string& name) {
  if (name == "stationary") return std::make_unique<StationaryPolicy>();
  if (name == "random_walk") return std::make_unique<RandomWalkPolicy>();
  if (name == "greedy_coverage") return std::make_unique<GreedyCoveragePolicy>();
  throw ConfigError("unknown policy '" + name + "' (expected stationary, random_walk or greedy_coverage)");
}

// ---------------------------------------------------------------------------------------------
// World construction

inline Environment build_environment(const ScenarioConfig& cfg) {
  const auto& e = cfg.environment;
  std::vector<Obstacle> boxes = e.obstacles;
  auto rng = derive_stream(cfg.seed, Stream::Environment);
  const auto& rb = e.random_buildings;
  for (int i = 0; i < rb.count; ++i) {
    const double w = rng.uniform(rb.min_size, rb.max_size);
    const double d = rng.uniform(rb.min_size, rb.max_size);
    const double x = rng.uniform(0.0, e.side_length - w);
    const double y = rng.uniform(0.0, e.side_length - d);
    const double h = rng.uniform(rb.min_height, rb.max_height);
    boxes.push_back({{x, y}, {x + w, y + d}, h});
  }
  return Environment(e.side_length, std::move(boxes), e.altitude, e.grid_cell);
}

inline bool inside_any_footprint(const Environment& env, Vec2 p) {
  for (const auto& o : env.obstacles())
    if (p.x > o.footprint_min.x && p.x < o.footprint_max.x && p.y > o.footprint_min.y && p.y < o.footprint_max.y)
      return true;
  return false;
}

inline std::vector<UserState> place_users(const ScenarioConfig& cfg, const Environment& env) {
  const auto& up = cfg.users;
  std::vector<UserState> users;
  auto make = [&](Vec2 pos, Vec2 vel, TrafficClass tc) {
    UserState u;
    u.position = pos;
    u.velocity = vel;
    u.v_max = up.v_max;
    u.traffic = tc;
    u.history_length = static_cast<std::size_t>(up.history_length);
    u.history.assign(u.history_length, vel);
    users.push_back(std::move(u));
  };
  if (!up.initial.empty()) {
    for (const auto& iu : up.initial) make(iu.position, iu.velocity, iu.traffic);
    return users;
  }
  const int total = up.n_urllc + up.n_embb;
  const double side = env.side_length();
  for (int i = 0; i < total; ++i) {
    auto rng = derive_stream(cfg.seed, Stream::Placement, 0, static_cast<std::uint64_t>(i));
    Vec2 pos{rng.uniform(0.0, side), rng.uniform(0.0, side)};
    for (int tries = 0; tries < 1000 && inside_any_footprint(env, pos); ++tries)
      pos = {rng.uniform(0.0, side), rng.uniform(0.0, side)};
    const double speed = rng.uniform(up.speed_min, up.v_max);
    const double heading = rng.uniform(0.0, 2.0 * kPi);
    make(pos, {speed * std::cos(heading), speed * std::sin(heading)},
         i < up.n_urllc ? TrafficClass::Urllc : TrafficClass::Embb);
  }
  return users;
}

inline std::vector<UavState> place_uavs(const ScenarioConfig& cfg, const Environment& env) {
  std::vector<UavState> uavs;
  const auto& f = cfg.uavs;
  const double z = std::clamp(f.initial_altitude, env.altitude_bounds().min, env.altitude_bounds().max);
  for (int k = 0; k < f.count; ++k) {
    Vec3 p;
    if (!f.initial.empty()) {
      p = f.initial[static_cast<std::size_t>(k)];
    } else {
      auto rng = derive_stream(cfg.seed, Stream::Placement, 1, static_cast<std::uint64_t>(k));
      p = {rng.uniform(0.0, env.side_length()), rng.uniform(0.0, env.side_length()), z};
    }
    uavs.push_back({p, f.v_max});
  }
  return uavs;
}

inline WorldState init_world(const ScenarioConfig& cfg) {
  cfg.validate();
  WorldState s{0, build_environment(cfg), {}, {}, {}};
  s.users = place_users(cfg, s.env);
  s.uavs = place_uavs(cfg, s.env);
  for (const auto& u : s.uavs)
    if (!s.env.contains(ground(u.position)) || u.position.z < s.env.altitude_bounds().min ||
        u.position.z > s.env.altitude_bounds().max)
      throw ConfigError("uavs.initial: position outside the flight volume");
  s.association = associate_users(s.users, s.uavs, cfg.uavs.comm_range);
  return s;
}

// ---------------------------------------------------------------------------------------------
// Stepping

struct VerificationRecord {
  int t = 0;
  int user_id = 0;
  int uav_id = kUnassigned;
  FailureEstimate estimate;
  int q_u = 0;
  std::string error;  // non-empty when the estimator threw; q_u is then 0
};

struct StepLog {
  int t = 0;
  RewardBreakdown reward;
  double sum_throughput_bps = 0.0;
  double urllc_cr = 1.0;
  double embb_cr = 1.0;
  bool urllc_empty = false;
  bool embb_empty = false;
  double energy_kj = 0.0;  // cumulative
  double verification_s = 0.0;
  std::vector<double> user_throughput_bps;
  std::vector<int> quality;
  std::vector<VerificationRecord> records;
};

struct StepContext {
  const ScenarioConfig* cfg = nullptr;
  const MdnWeights* mdn = nullptr;
  double travelled_m = 0.0;  // accumulated over the episode
};

namespace detail {

template <class F>
void parallel_for(std::size_t n, unsigned workers, F&& f) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) f(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

inline StepLog run_step(WorldState& s, Policy& policy, StepContext& ctx) {
  const ScenarioConfig& cfg = *ctx.cfg;
  const double dt = cfg.episode.dt;
  const Environment& env = s.env;
  const std::uint64_t t_next = static_cast<std::uint64_t>(s.t) + 1;

  const auto actions = policy.act(s, cfg);
  if (actions.size() != s.uavs.size()) throw std::logic_error("policy returned the wrong number of actions");
  std::vector<double> moved(s.uavs.size());
  for (std::size_t k = 0; k < s.uavs.size(); ++k) {
    const Vec3 before = s.uavs[k].position;
    s.uavs[k] = step_uav(s.uavs[k], actions[k], dt, env.side_length(), env.altitude_bounds());
    moved[k] = norm(s.uavs[k].position - before);
    ctx.travelled_m += moved[k];
  }

  const UserMotionParams motion{env.side_length(), cfg.users.heading_sigma_deg * kPi / 180.0};
  for (std::size_t i = 0; i < s.users.size(); ++i) {
    auto rng = derive_stream(cfg.seed, Stream::Mobility, t_next, i);
    s.users[i] = step_user(s.users[i], dt, motion, rng);
  }
  s.t = static_cast<int>(t_next);
  s.association = associate_users(s.users, s.uavs, cfg.uavs.comm_range);

  StepLog log;
  log.t = s.t;
  const std::size_t n = s.users.size();
  log.user_throughput_bps.assign(n, 0.0);
  log.quality.assign(n, 0);

  std::vector<int> load(s.uavs.size(), 0);
  for (int a : s.association)
    if (a != kUnassigned) ++load[static_cast<std::size_t>(a)];

  std::vector<char> los(n, 0);
  std::vector<double> served;
  for (std::size_t i = 0; i < n; ++i) {
    const int a = s.association[i];
    if (a == kUnassigned) continue;
    const Vec3 uav = s.uavs[static_cast<std::size_t>(a)].position;
    los[i] = is_nlos(uav, s.users[i].position, env) ? 0 : 1;
    auto rng = derive_stream(cfg.seed, Stream::Fading, t_next, i);
    LinkState link;
    link.distance_m = std::max(norm(uav - lift(s.users[i].position, 0.0)), 1e-3);
    link.los = los[i] != 0;
    link.fading_coeff_sq = sample_fading(link.los, cfg.channel.rician_k, rng);
    if (cfg.channel.shadowing_enabled) link.shadowing_db = cfg.channel.shadowing_sigma_db * rng.normal();
    ChannelParams p = cfg.channel;
    if (cfg.episode.bandwidth_mode == BandwidthMode::EqualSplit)
      p.bandwidth_hz /= static_cast<double>(load[static_cast<std::size_t>(a)]);
    log.user_throughput_bps[i] = throughput_bps(link, p);
    served.push_back(log.user_throughput_bps[i]);
    log.sum_throughput_bps += log.user_throughput_bps[i];
  }

  std::vector<std::size_t> urllc;
  for (std::size_t i = 0; i < n; ++i)
    if (s.users[i].traffic == TrafficClass::Urllc && s.association[i] != kUnassigned) urllc.push_back(i);
  std::vector<VerificationRecord> records(urllc.size());
  const detail::Stopwatch clock;
  detail::parallel_for(urllc.size(), cfg.verification.workers, [&](std::size_t j) {
    const std::size_t i = urllc[j];
    auto& r = records[j];
    r.t = s.t;
    r.user_id = static_cast<int>(i);
    r.uav_id = s.association[i];
    auto rng = derive_stream(cfg.seed ^ cfg.verification.seed, Stream::Sampling, t_next, i);
    try {
      r.estimate = verify_user(s.users[i], s.uavs[static_cast<std::size_t>(r.uav_id)].position, env, dt,
                               cfg.verification, rng, ctx.mdn);
      r.q_u = r.estimate.covered ? 1 : 0;
    } catch (const std::exception& e) {
      r.q_u = 0;
      r.error = e.what();
    }
  });
  log.verification_s = clock.seconds();
  for (const auto& r : records) log.quality[static_cast<std::size_t>(r.user_id)] = r.q_u;
  for (std::size_t i = 0; i < n; ++i)
    if (s.users[i].traffic == TrafficClass::Embb && s.association[i] != kUnassigned) log.quality[i] = los[i];
  log.records = std::move(records);

  int n_urllc = 0, ok_urllc = 0, n_embb = 0, ok_embb = 0;
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool is_urllc = s.users[i].traffic == TrafficClass::Urllc;
    weights[i] = is_urllc ? cfg.reward.urllc_weight : cfg.reward.embb_weight;
    (is_urllc ? n_urllc : n_embb) += 1;
    (is_urllc ? ok_urllc : ok_embb) += log.quality[i];
  }
  log.urllc_empty = n_urllc == 0;
  log.embb_empty = n_embb == 0;
  log.urllc_cr = log.urllc_empty ? 1.0 : static_cast<double>(ok_urllc) / n_urllc;
  log.embb_cr = log.embb_empty ? 1.0 : static_cast<double>(ok_embb) / n_embb;

  RewardBreakdown& b = log.reward;
  b.phi_thr = phi_throughput(served, n, cfg.channel, env.altitude_bounds().min);
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  b.phi_cov = (n == 0 || wsum <= 0.0) ? 0.0 : phi_coverage(log.quality, weights);
  std::vector<double> counts(load.begin(), load.end());
  b.phi_bal = counts.empty() ? 0.0 : phi_load_balance(counts, cfg.reward.eps_denom);
  b.phi_energy = phi_energy(moved, cfg.uavs.v_max, dt);
  std::vector<double> pairs;
  for (std::size_t a = 0; a < s.uavs.size(); ++a)
    for (std::size_t c = a + 1; c < s.uavs.size(); ++c) pairs.push_back(norm(s.uavs[a].position - s.uavs[c].position));
  b.phi_coll = phi_collision(pairs, cfg.reward.d_shift, cfg.reward.k_scale);
  b.total = aggregate_reward(b, cfg.reward.weights);
  log.energy_kj = cfg.reward.energy_per_meter * ctx.travelled_m / 1000.0;
  return log;
}

struct EpisodeMetrics {
  double sum_throughput_bps = 0.0;  // mean over steps
  double urllc_cr = 1.0;
  double embb_cr = 1.0;
  double energy_kj = 0.0;
  double jain = 0.0;
  double mean_reward = 0.0;
  RewardBreakdown mean_breakdown;
  bool urllc_empty = false;  // no URLLC users: urllc_cr reported as 1
  bool embb_empty = false;
  bool jain_undefined = false;  // nobody received any throughput: jain reported as 0
  std::uint64_t verification_errors = 0;
};

struct EpisodeResult {
  EpisodeMetrics metrics;
  std::vector<StepLog> steps;
};

inline EpisodeResult run_episode(const ScenarioConfig& cfg, Policy& policy, const MdnWeights* mdn = nullptr) {
  WorldState s = init_world(cfg);
  std::optional<MdnWeights> loaded;
  if (cfg.verification.proposal == ProposalMode::Mdn && mdn == nullptr) {
    loaded = load_mdn_weights(cfg.verification.mdn_weights);
    if (loaded->history_length != static_cast<std::uint32_t>(cfg.users.history_length))
      throw ConfigError("verification.mdn_weights: history length does not match users.history_length");
    mdn = &*loaded;
  }
  StepContext ctx{&cfg, mdn, 0.0};
  EpisodeResult out;
  std::vector<double> per_user(s.users.size(), 0.0);
  auto& m = out.metrics;
  m.urllc_cr = 0.0;
  m.embb_cr = 0.0;
  for (int step = 0; step < cfg.episode.n_steps; ++step) {
    StepLog log = run_step(s, policy, ctx);
    for (std::size_t i = 0; i < per_user.size(); ++i) per_user[i] += log.user_throughput_bps[i];
    m.sum_throughput_bps += log.sum_throughput_bps;
    m.urllc_cr += log.urllc_cr;
    m.embb_cr += log.embb_cr;
    m.mean_reward += log.reward.total;
    m.mean_breakdown.phi_thr += log.reward.phi_thr;
    m.mean_breakdown.phi_cov += log.reward.phi_cov;
    m.mean_breakdown.phi_bal += log.reward.phi_bal;
    m.mean_breakdown.phi_energy += log.reward.phi_energy;
    m.mean_breakdown.phi_coll += log.reward.phi_coll;
    for (const auto& r : log.records) m.verification_errors += r.error.empty() ? 0 : 1;
    m.urllc_empty = log.urllc_empty;
    m.embb_empty = log.embb_empty;
    m.energy_kj = log.energy_kj;
    out.steps.push_back(std::move(log));
  }
  const double steps = cfg.episode.n_steps;
  m.sum_throughput_bps /= steps;
  m.urllc_cr /= steps;
  m.embb_cr /= steps;
  m.mean_reward /= steps;
  m.mean_breakdown.phi_thr /= steps;
  m.mean_breakdown.phi_cov /= steps;
  m.mean_breakdown.phi_bal /= steps;
  m.mean_breakdown.phi_energy /= steps;
  m.mean_breakdown.phi_coll /= steps;
  m.mean_breakdown.total = m.mean_reward;
  for (double& v : per_user) v /= steps;
  const bool any = std::any_of(per_user.begin(), per_user.end(), [](double v) { return v > 0.0; });
  m.jain_undefined = !any;
  m.jain = any ? jain_index(per_user) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------------------------
// Output

inline void write_episode_csv(std::ostream& out, const EpisodeResult& r) {
  out << "t,phi_thr,phi_cov,phi_bal,phi_energy,phi_coll,total,sum_throughput_bps,urllc_cr,embb_cr,energy_kj\n";
  out << std::setprecision(12);
  for (const auto& s : r.steps) {
    const auto& b = s.reward;
    out << s.t << ',' << b.phi_thr << ',' << b.phi_cov << ',' << b.phi_bal << ',' << b.phi_energy << ','
        << b.phi_coll << ',' << b.total << ',' << s.sum_throughput_bps << ',' << s.urllc_cr << ',' << s.embb_cr
        << ',' << s.energy_kj << '\n';
  }
}

inline nlohmann::json estimate_to_json(const FailureEstimate& e, bool record_timing) {
  return {{"p_hat", e.p_hat},
          {"var_hat", e.variance_hat},
          {"n", e.n_samples},
          {"n_failures_hit", e.n_failures_hit},
          {"max_w", e.max_weight_seen},
          {"attempts", e.attempts},
          {"q_u", e.covered ? 1 : 0},
          {"elapsed_us", record_timing ? e.elapsed_s * 1e6 : 0.0}};
}

inline void write_verification_jsonl(std::ostream& out, const EpisodeResult& r, bool record_timing) {
  for (const auto& s : r.steps)
    for (const auto& rec : s.records) {
      nlohmann::json j = estimate_to_json(rec.estimate, record_timing);
      j["step"] = rec.t;
      j["user_id"] = rec.user_id;
      j["uav_id"] = rec.uav_id;
      j["q_u"] = rec.q_u;
      if (!rec.error.empty()) j["error"] = rec.error;
      out << j.dump() << '\n';
    }
}

inline nlohmann::json metrics_to_json(const EpisodeMetrics& m) {
  const auto& b = m.mean_breakdown;
  return {{"reward",
           {{"phi_thr", b.phi_thr},
            {"phi_cov", b.phi_cov},
            {"phi_bal", b.phi_bal},
            {"phi_energy", b.phi_energy},
            {"phi_coll", b.phi_coll},
            {"total", b.total}}},
          {"metrics",
           {{"sum_throughput_mbps", m.sum_throughput_bps / 1e6},
            {"urllc_cr", m.urllc_cr},
            {"embb_cr", m.embb_cr},
            {"energy_kj", m.energy_kj},
            {"jain", m.jain}}},
          {"flags",
           {{"urllc_empty", m.urllc_empty},
            {"embb_empty", m.embb_empty},
            {"jain_undefined", m.jain_undefined},
            {"verification_errors", m.verification_errors}}}};
}

}  // namespace pis
