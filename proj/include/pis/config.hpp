#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pis/channel.hpp"
#include "pis/core.hpp"
#include "pis/estimator.hpp"
#include "pis/geometry.hpp"
#include "pis/mobility.hpp"
#include "pis/proposal.hpp"
#include "pis/reward.hpp"
#include "pis/scenarios.hpp"

namespace pis {

using json = nlohmann::json;

struct RandomBuildings {
  int count = 0;
  double min_size = 20.0;
  double max_size = 60.0;
  double min_height = 10.0;
  double max_height = 60.0;
  friend bool operator==(const RandomBuildings&, const RandomBuildings&) = default;
};

struct EnvironmentSpec {
  double side_length = 1500.0;
  AltitudeBounds altitude;
  double grid_cell = 50.0;
  std::vector<Obstacle> obstacles;
  RandomBuildings random_buildings;
  friend bool operator==(const EnvironmentSpec&, const EnvironmentSpec&) = default;
};

struct InitialUser {
  Vec2 position;
  Vec2 velocity;
  TrafficClass traffic = TrafficClass::Urllc;
  friend bool operator==(const InitialUser&, const InitialUser&) = default;
};

struct UserPopulation {
  int n_urllc = 30;
  int n_embb = 200;
  double v_max = 3.0;
  double speed_min = 0.5;
  int history_length = 8;
  double heading_sigma_deg = 15.0;
  std::vector<InitialUser> initial;  // overrides random placement when non-empty
  friend bool operator==(const UserPopulation&, const UserPopulation&) = default;
};

struct UavFleet {
  int count = 5;
  double v_max = 30.0;
  double comm_range = 300.0;
  double initial_altitude = 100.0;
  std::vector<Vec3> initial;
  friend bool operator==(const UavFleet&, const UavFleet&) = default;
};

enum class BandwidthMode { PerLink, EqualSplit };

struct PolicyConfig {
  std::string name = "greedy_coverage";  // stationary | random_walk | greedy_coverage
  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

struct EpisodeConfig {
  int n_steps = 50;
  double dt = 10.0;
  BandwidthMode bandwidth_mode = BandwidthMode::PerLink;
  PolicyConfig policy;
  friend bool operator==(const EpisodeConfig&, const EpisodeConfig&) = default;
};

struct RewardParams {
  RewardWeights weights;
  double d_shift = 100.0;
  double k_scale = 50.0;
  double eps_denom = 1e-6;
  double energy_per_meter = 100.0;  // J/m
  double urllc_weight = 1.0;
  double embb_weight = 1.0;
  friend bool operator==(const RewardParams&, const RewardParams&) = default;
};

struct OutputConfig {
  std::string csv = "episode.csv";
  std::string jsonl = "verification.jsonl";
  std::string bench_csv = "bench.csv";
  bool record_timing = false;  // wall-clock fields are zero unless enabled (keeps outputs reproducible)
  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

/// Single placement for the `verify` command: either explicit positions or a shadow construction.
struct VerifyTarget {
  std::optional<ShadowScenarioSpec> shadow;
  Vec2 user_position{750.0, 750.0};
  Vec2 user_velocity{2.0, 0.0};
  Vec3 uav{750.0, 750.0, 100.0};
  friend bool operator==(const VerifyTarget&, const VerifyTarget&) = default;
};

struct BenchCell {
  double alpha = 0.6;
  std::uint64_t n_samples = 100;
  bool mismatched = false;  // predictor means shifted away from the shadow
  friend bool operator==(const BenchCell&, const BenchCell&) = default;
};

struct BenchConfig {
  ShadowScenarioSpec scenario;
  std::uint64_t replicates = 1000;
  double mismatch_shift = 1.5;  // in circle radii, along the direction of travel reversed
  double oracle_resolution_fraction = 1.0 / 200.0;
  std::vector<BenchCell> cells{{0.6, 100, false}, {0.9, 100, true}, {0.3, 100, false}, {0.0, 1000, false},
                               {0.0, 100, false}};
  friend bool operator==(const BenchConfig&, const BenchConfig&) = default;
};

struct ScenarioConfig {
  std::uint64_t seed = 7;
  EnvironmentSpec environment;
  ChannelParams channel;
  UserPopulation users;
  UavFleet uavs;
  EpisodeConfig episode;
  VerificationConfig verification;
  RewardParams reward;
  OutputConfig output;
  VerifyTarget verify;
  BenchConfig bench;

  void validate() const;
  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

inline void ScenarioConfig::validate() const {
  const auto& e = environment;
  if (!(e.side_length > 0.0)) throw ConfigError("environment.side_length must be > 0");
  if (!(e.altitude.min > 0.0 && e.altitude.min < e.altitude.max))
    throw ConfigError("environment.altitude_bounds must satisfy 0 < h_min < h_max");
  if (e.random_buildings.count < 0) throw ConfigError("environment.random_buildings.count must be >= 0");
  if (e.random_buildings.count > 0) {
    const auto& r = e.random_buildings;
    if (!(r.min_size > 0.0 && r.min_size <= r.max_size && r.max_size < e.side_length))
      throw ConfigError("environment.random_buildings sizes must satisfy 0 < min_size <= max_size < side_length");
    if (!(r.min_height > 0.0 && r.min_height <= r.max_height))
      throw ConfigError("environment.random_buildings heights must satisfy 0 < min_height <= max_height");
  }
  channel.validate();
  if (users.n_urllc < 0 || users.n_embb < 0) throw ConfigError("users.n_urllc and users.n_embb must be >= 0");
  if (!(users.v_max >= 0.0)) throw ConfigError("users.v_max must be >= 0");
  if (!(users.speed_min >= 0.0 && users.speed_min <= users.v_max))
    throw ConfigError("users.speed_min must be in [0, users.v_max]");
  if (users.history_length < 1) throw ConfigError("users.history_length must be >= 1");
  if (!(users.heading_sigma_deg >= 0.0)) throw ConfigError("users.heading_sigma_deg must be >= 0");
  for (std::size_t i = 0; i < users.initial.size(); ++i) {
    const auto& u = users.initial[i];
    const std::string where = "users.initial[" + std::to_string(i) + "]";
    if (u.position.x < 0.0 || u.position.y < 0.0 || u.position.x > e.side_length || u.position.y > e.side_length)
      throw ConfigError(where + ".position must lie in [0, side_length]^2");
    if (norm(u.velocity) > users.v_max + 1e-12) throw ConfigError(where + ".velocity exceeds users.v_max");
  }
  if (uavs.count < 0) throw ConfigError("uavs.count must be >= 0");
  if (!(uavs.v_max > 0.0)) throw ConfigError("uavs.v_max must be > 0");
  if (!(uavs.comm_range > 0.0)) throw ConfigError("uavs.comm_range must be > 0");
  if (!uavs.initial.empty() && static_cast<int>(uavs.initial.size()) != uavs.count)
    throw ConfigError("uavs.initial must list exactly uavs.count positions");
  if (episode.n_steps < 1) throw ConfigError("episode.n_steps must be >= 1");
  if (!(episode.dt > 0.0)) throw ConfigError("episode.dt must be > 0");
  const auto& p = episode.policy.name;
  if (p != "stationary" && p != "random_walk" && p != "greedy_coverage")
    throw ConfigError("episode.policy.name must be one of stationary, random_walk, greedy_coverage");
  verification.validate();
  reward.weights.validate();
  if (!(reward.k_scale > 0.0)) throw ConfigError("reward.k_scale must be > 0");
  if (!(reward.eps_denom > 0.0)) throw ConfigError("reward.eps_denom must be > 0");
  if (!(reward.energy_per_meter >= 0.0)) throw ConfigError("reward.energy_per_meter must be >= 0");
  if (!(reward.urllc_weight >= 0.0 && reward.embb_weight >= 0.0))
    throw ConfigError("reward.urllc_weight and reward.embb_weight must be >= 0");
  if (bench.replicates < 2) throw ConfigError("bench.replicates must be >= 2");
  for (const auto& c : bench.cells) {
    if (!(c.alpha >= 0.0 && c.alpha < 1.0)) throw ConfigError("bench.cells[].alpha must be in [0, 1)");
    if (c.n_samples < 1) throw ConfigError("bench.cells[].n_samples must be >= 1");
  }
}

// ---------------------------------------------------------------------------------------------
// JSON mapping. Every section is optional; missing keys keep their defaults, unknown keys are
// rejected so typos surface as errors.

namespace detail {

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown field " + (path.empty() ? key : path + "." + key));
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("field " + (path.empty() ? std::string(key) : path + "." + key) + ": " + e.what());
  }
}

template <class E>
struct EnumName {
  E value;
  const char* name;
};

template <class E, std::size_t N>
E parse_enum(const json& j, const char* key, E fallback, const std::string& path, const EnumName<E> (&names)[N]) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  const std::string field = path + "." + key;
  if (!it->is_string()) throw ConfigError("field " + field + " must be a string");
  const auto s = it->template get<std::string>();
  for (const auto& n : names)
    if (s == n.name) return n.value;
  std::string options;
  for (const auto& n : names) options += std::string(options.empty() ? "" : ", ") + n.name;
  throw ConfigError("field " + field + " must be one of: " + options);
}

template <class E, std::size_t N>
const char* enum_name(E v, const EnumName<E> (&names)[N]) {
  for (const auto& n : names)
    if (n.value == v) return n.name;
  return "?";
}

inline constexpr EnumName<ProposalMode> kProposalNames[] = {
    {ProposalMode::Uniform, "uniform"}, {ProposalMode::Kinematic, "kinematic"}, {ProposalMode::Mdn, "mdn"}};
inline constexpr EnumName<DensityMode> kDensityNames[] = {{DensityMode::PaperFaithful, "paper_faithful"},
                                                          {DensityMode::Renormalized, "renormalized"}};
inline constexpr EnumName<BandwidthMode> kBandwidthNames[] = {{BandwidthMode::PerLink, "per_link"},
                                                              {BandwidthMode::EqualSplit, "equal_split"}};
inline constexpr EnumName<TrafficClass> kTrafficNames[] = {{TrafficClass::Urllc, "urllc"},
                                                           {TrafficClass::Embb, "embb"}};

inline Vec2 read_vec2(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError("field " + field + " must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Vec3 read_vec3(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number())
    throw ConfigError("field " + field + " must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json vec_json(Vec2 v) { return json::array({v.x, v.y}); }
inline json vec_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }

}  // namespace detail

inline ShadowScenarioSpec shadow_spec_from_json(const json& j, const std::string& path) {
  detail::check_keys(j, path,
                     {"target_pf", "radius", "dt", "side_length", "wall_x", "wall_thickness", "wall_height",
                      "uav_altitude", "uav_standoff", "street_y", "street_half_width", "lining_depth",
                      "lining_length", "lining_gap", "lining_height", "lined", "grid_cell"});
  ShadowScenarioSpec s;
  detail::read(j, "target_pf", s.target_pf, path);
  detail::read(j, "radius", s.radius, path);
  detail::read(j, "dt", s.dt, path);
  detail::read(j, "side_length", s.side_length, path);
  detail::read(j, "wall_x", s.wall_x, path);
  detail::read(j, "wall_thickness", s.wall_thickness, path);
  detail::read(j, "wall_height", s.wall_height, path);
  detail::read(j, "uav_altitude", s.uav_altitude, path);
  detail::read(j, "uav_standoff", s.uav_standoff, path);
  detail::read(j, "street_y", s.street_y, path);
  detail::read(j, "street_half_width", s.street_half_width, path);
  detail::read(j, "lining_depth", s.lining_depth, path);
  detail::read(j, "lining_length", s.lining_length, path);
  detail::read(j, "lining_gap", s.lining_gap, path);
  detail::read(j, "lining_height", s.lining_height, path);
  detail::read(j, "lined", s.lined, path);
  detail::read(j, "grid_cell", s.grid_cell, path);
  return s;
}

inline json shadow_spec_to_json(const ShadowScenarioSpec& s) {
  return {{"target_pf", s.target_pf},       {"radius", s.radius},
          {"dt", s.dt},                     {"side_length", s.side_length},
          {"wall_x", s.wall_x},             {"wall_thickness", s.wall_thickness},
          {"wall_height", s.wall_height},   {"uav_altitude", s.uav_altitude},
          {"uav_standoff", s.uav_standoff}, {"street_y", s.street_y},
          {"street_half_width", s.street_half_width}, {"lining_depth", s.lining_depth},
          {"lining_length", s.lining_length}, {"lining_gap", s.lining_gap},
          {"lining_height", s.lining_height}, {"lined", s.lined},
          {"grid_cell", s.grid_cell}};
}

inline ScenarioConfig config_from_json(const json& root) {
  using namespace detail;
  ScenarioConfig c;
  check_keys(root, "", {"seed", "environment", "channel", "users", "uavs", "episode", "verification", "reward",
                        "output", "verify", "bench"});
  read(root, "seed", c.seed, "");

  if (auto it = root.find("environment"); it != root.end()) {
    const json& j = *it;
    const std::string p = "environment";
    check_keys(j, p, {"side_length", "altitude_bounds", "grid_cell", "obstacles", "random_buildings"});
    read(j, "side_length", c.environment.side_length, p);
    read(j, "grid_cell", c.environment.grid_cell, p);
    if (auto a = j.find("altitude_bounds"); a != j.end()) {
      const Vec2 b = read_vec2(*a, p + ".altitude_bounds");
      c.environment.altitude = {b.x, b.y};
    }
    if (auto o = j.find("obstacles"); o != j.end()) {
      if (!o->is_array()) throw ConfigError("field environment.obstacles must be a list");
      for (std::size_t i = 0; i < o->size(); ++i) {
        const json& b = (*o)[i];
        if (!b.is_array() || b.size() != 5)
          throw ConfigError("field environment.obstacles[" + std::to_string(i) +
                            "] must be [x_min, y_min, x_max, y_max, height]");
        c.environment.obstacles.push_back(
            {{b[0].get<double>(), b[1].get<double>()}, {b[2].get<double>(), b[3].get<double>()}, b[4].get<double>()});
      }
    }
    if (auto r = j.find("random_buildings"); r != j.end()) {
      const std::string rp = p + ".random_buildings";
      check_keys(*r, rp, {"count", "min_size", "max_size", "min_height", "max_height"});
      auto& rb = c.environment.random_buildings;
      read(*r, "count", rb.count, rp);
      read(*r, "min_size", rb.min_size, rp);
      read(*r, "max_size", rb.max_size, rp);
      read(*r, "min_height", rb.min_height, rp);
      read(*r, "max_height", rb.max_height, rp);
    }
  }

  if (auto it = root.find("channel"); it != root.end()) {
    const std::string p = "channel";
    check_keys(*it, p, {"alpha_pl", "beta_pl", "tx_power_dbm", "gain_uav_dbi", "gain_user_dbi", "bandwidth_hz",
                        "noise_power_dbm", "rician_k", "shadowing_sigma_db", "shadowing_enabled"});
    auto& ch = c.channel;
    read(*it, "alpha_pl", ch.alpha_pl, p);
    read(*it, "beta_pl", ch.beta_pl, p);
    read(*it, "tx_power_dbm", ch.tx_power_dbm, p);
    read(*it, "gain_uav_dbi", ch.gain_uav_dbi, p);
    read(*it, "gain_user_dbi", ch.gain_user_dbi, p);
    read(*it, "bandwidth_hz", ch.bandwidth_hz, p);
    read(*it, "noise_power_dbm", ch.noise_power_dbm, p);
    read(*it, "rician_k", ch.rician_k, p);
    read(*it, "shadowing_sigma_db", ch.shadowing_sigma_db, p);
    read(*it, "shadowing_enabled", ch.shadowing_enabled, p);
  }

  if (auto it = root.find("users"); it != root.end()) {
    const std::string p = "users";
    check_keys(*it, p, {"n_urllc", "n_embb", "v_max", "speed_min", "history_length", "heading_sigma_deg", "initial"});
    auto& u = c.users;
    read(*it, "n_urllc", u.n_urllc, p);
    read(*it, "n_embb", u.n_embb, p);
    read(*it, "v_max", u.v_max, p);
    read(*it, "speed_min", u.speed_min, p);
    read(*it, "history_length", u.history_length, p);
    read(*it, "heading_sigma_deg", u.heading_sigma_deg, p);
    if (auto init = it->find("initial"); init != it->end()) {
      if (!init->is_array()) throw ConfigError("field users.initial must be a list");
      for (std::size_t i = 0; i < init->size(); ++i) {
        const std::string ip = p + ".initial[" + std::to_string(i) + "]";
        const json& e = (*init)[i];
        check_keys(e, ip, {"position", "velocity", "class"});
        InitialUser iu;
        if (!e.contains("position")) throw ConfigError("field " + ip + ".position is required");
        iu.position = read_vec2(e["position"], ip + ".position");
        if (e.contains("velocity")) iu.velocity = read_vec2(e["velocity"], ip + ".velocity");
        iu.traffic = parse_enum(e, "class", TrafficClass::Urllc, ip, kTrafficNames);
        u.initial.push_back(iu);
      }
    }
  }

  if (auto it = root.find("uavs"); it != root.end()) {
    const std::string p = "uavs";
    check_keys(*it, p, {"count", "v_max", "comm_range", "initial_altitude", "initial"});
    read(*it, "count", c.uavs.count, p);
    read(*it, "v_max", c.uavs.v_max, p);
    read(*it, "comm_range", c.uavs.comm_range, p);
    read(*it, "initial_altitude", c.uavs.initial_altitude, p);
    if (auto init = it->find("initial"); init != it->end()) {
      if (!init->is_array()) throw ConfigError("field uavs.initial must be a list");
      for (std::size_t i = 0; i < init->size(); ++i)
        c.uavs.initial.push_back(read_vec3((*init)[i], p + ".initial[" + std::to_string(i) + "]"));
    }
  }

  if (auto it = root.find("episode"); it != root.end()) {
    const std::string p = "episode";
    check_keys(*it, p, {"n_steps", "dt", "bandwidth_mode", "policy"});
    read(*it, "n_steps", c.episode.n_steps, p);
    read(*it, "dt", c.episode.dt, p);
    c.episode.bandwidth_mode = parse_enum(*it, "bandwidth_mode", c.episode.bandwidth_mode, p, kBandwidthNames);
    if (auto pol = it->find("policy"); pol != it->end()) {
      check_keys(*pol, p + ".policy", {"name"});
      read(*pol, "name", c.episode.policy.name, p + ".policy");
    }
  }

  if (auto it = root.find("verification"); it != root.end()) {
    const std::string p = "verification";
    check_keys(*it, p, {"n_samples", "alpha", "epsilon", "proposal_mode", "density_mode", "seed", "components",
                        "spread_deg", "reach", "sigma_scale", "still_sigma_scale", "mass_tol",
                        "conservative_radius", "mdn_weights", "workers"});
    auto& v = c.verification;
    read(*it, "n_samples", v.n_samples, p);
    read(*it, "alpha", v.alpha, p);
    read(*it, "epsilon", v.epsilon, p);
    v.proposal = parse_enum(*it, "proposal_mode", v.proposal, p, kProposalNames);
    v.density = parse_enum(*it, "density_mode", v.density, p, kDensityNames);
    read(*it, "seed", v.seed, p);
    read(*it, "components", v.kinematic.components, p);
    double spread_deg = v.kinematic.spread * 180.0 / kPi;
    read(*it, "spread_deg", spread_deg, p);
    v.kinematic.spread = spread_deg * kPi / 180.0;
    read(*it, "reach", v.kinematic.reach, p);
    read(*it, "sigma_scale", v.kinematic.sigma_scale, p);
    read(*it, "still_sigma_scale", v.kinematic.still_sigma_scale, p);
    read(*it, "mass_tol", v.mass_tol, p);
    read(*it, "conservative_radius", v.conservative_radius, p);
    read(*it, "mdn_weights", v.mdn_weights, p);
    read(*it, "workers", v.workers, p);
  }

  if (auto it = root.find("reward"); it != root.end()) {
    const std::string p = "reward";
    check_keys(*it, p, {"weights", "d_shift", "k_scale", "eps_denom", "energy_per_meter", "urllc_weight",
                        "embb_weight"});
    auto& r = c.reward;
    if (auto w = it->find("weights"); w != it->end()) {
      const std::string wp = p + ".weights";
      check_keys(*w, wp, {"throughput", "coverage", "balance", "energy", "collision"});
      read(*w, "throughput", r.weights.throughput, wp);
      read(*w, "coverage", r.weights.coverage, wp);
      read(*w, "balance", r.weights.balance, wp);
      read(*w, "energy", r.weights.energy, wp);
      read(*w, "collision", r.weights.collision, wp);
    }
    read(*it, "d_shift", r.d_shift, p);
    read(*it, "k_scale", r.k_scale, p);
    read(*it, "eps_denom", r.eps_denom, p);
    read(*it, "energy_per_meter", r.energy_per_meter, p);
    read(*it, "urllc_weight", r.urllc_weight, p);
    read(*it, "embb_weight", r.embb_weight, p);
  }

  if (auto it = root.find("output"); it != root.end()) {
    const std::string p = "output";
    check_keys(*it, p, {"csv", "jsonl", "bench_csv", "record_timing"});
    read(*it, "csv", c.output.csv, p);
    read(*it, "jsonl", c.output.jsonl, p);
    read(*it, "bench_csv", c.output.bench_csv, p);
    read(*it, "record_timing", c.output.record_timing, p);
  }

  if (auto it = root.find("verify"); it != root.end()) {
    const std::string p = "verify";
    check_keys(*it, p, {"shadow", "user_position", "user_velocity", "uav"});
    if (auto s = it->find("shadow"); s != it->end()) c.verify.shadow = shadow_spec_from_json(*s, p + ".shadow");
    if (auto v = it->find("user_position"); v != it->end()) c.verify.user_position = read_vec2(*v, p + ".user_position");
    if (auto v = it->find("user_velocity"); v != it->end()) c.verify.user_velocity = read_vec2(*v, p + ".user_velocity");
    if (auto v = it->find("uav"); v != it->end()) c.verify.uav = read_vec3(*v, p + ".uav");
  }

  if (auto it = root.find("bench"); it != root.end()) {
    const std::string p = "bench";
    check_keys(*it, p, {"scenario", "replicates", "mismatch_shift", "oracle_resolution_fraction", "cells"});
    if (auto s = it->find("scenario"); s != it->end()) c.bench.scenario = shadow_spec_from_json(*s, p + ".scenario");
    read(*it, "replicates", c.bench.replicates, p);
    read(*it, "mismatch_shift", c.bench.mismatch_shift, p);
    read(*it, "oracle_resolution_fraction", c.bench.oracle_resolution_fraction, p);
    if (auto cells = it->find("cells"); cells != it->end()) {
      if (!cells->is_array()) throw ConfigError("field bench.cells must be a list");
      c.bench.cells.clear();
      for (std::size_t i = 0; i < cells->size(); ++i) {
        const std::string cp = p + ".cells[" + std::to_string(i) + "]";
        check_keys((*cells)[i], cp, {"alpha", "n_samples", "mismatched"});
        BenchCell cell;
        read((*cells)[i], "alpha", cell.alpha, cp);
        read((*cells)[i], "n_samples", cell.n_samples, cp);
        read((*cells)[i], "mismatched", cell.mismatched, cp);
        c.bench.cells.push_back(cell);
      }
    }
  }

  c.validate();
  return c;
}

inline json config_to_json(const ScenarioConfig& c) {
  using namespace detail;
  json obstacles = json::array();
  for (const auto& o : c.environment.obstacles)
    obstacles.push_back({o.footprint_min.x, o.footprint_min.y, o.footprint_max.x, o.footprint_max.y, o.height});
  const auto& rb = c.environment.random_buildings;
  json users_initial = json::array();
  for (const auto& u : c.users.initial)
    users_initial.push_back({{"position", vec_json(u.position)},
                             {"velocity", vec_json(u.velocity)},
                             {"class", enum_name(u.traffic, kTrafficNames)}});
  json uavs_initial = json::array();
  for (const auto& p : c.uavs.initial) uavs_initial.push_back(vec_json(p));
  const auto& v = c.verification;
  const auto& r = c.reward;
  json verify = {{"user_position", vec_json(c.verify.user_position)},
                 {"user_velocity", vec_json(c.verify.user_velocity)},
                 {"uav", vec_json(c.verify.uav)}};
  if (c.verify.shadow) verify["shadow"] = shadow_spec_to_json(*c.verify.shadow);
  json cells = json::array();
  for (const auto& cell : c.bench.cells)
    cells.push_back({{"alpha", cell.alpha}, {"n_samples", cell.n_samples}, {"mismatched", cell.mismatched}});

  return {
      {"seed", c.seed},
      {"environment",
       {{"side_length", c.environment.side_length},
        {"altitude_bounds", {c.environment.altitude.min, c.environment.altitude.max}},
        {"grid_cell", c.environment.grid_cell},
        {"obstacles", obstacles},
        {"random_buildings",
         {{"count", rb.count},
          {"min_size", rb.min_size},
          {"max_size", rb.max_size},
          {"min_height", rb.min_height},
          {"max_height", rb.max_height}}}}},
      {"channel",
       {{"alpha_pl", c.channel.alpha_pl},
        {"beta_pl", c.channel.beta_pl},
        {"tx_power_dbm", c.channel.tx_power_dbm},
        {"gain_uav_dbi", c.channel.gain_uav_dbi},
        {"gain_user_dbi", c.channel.gain_user_dbi},
        {"bandwidth_hz", c.channel.bandwidth_hz},
        {"noise_power_dbm", c.channel.noise_power_dbm},
        {"rician_k", c.channel.rician_k},
        {"shadowing_sigma_db", c.channel.shadowing_sigma_db},
        {"shadowing_enabled", c.channel.shadowing_enabled}}},
      {"users",
       {{"n_urllc", c.users.n_urllc},
        {"n_embb", c.users.n_embb},
        {"v_max", c.users.v_max},
        {"speed_min", c.users.speed_min},
        {"history_length", c.users.history_length},
        {"heading_sigma_deg", c.users.heading_sigma_deg},
        {"initial", users_initial}}},
      {"uavs",
       {{"count", c.uavs.count},
        {"v_max", c.uavs.v_max},
        {"comm_range", c.uavs.comm_range},
        {"initial_altitude", c.uavs.initial_altitude},
        {"initial", uavs_initial}}},
      {"episode",
       {{"n_steps", c.episode.n_steps},
        {"dt", c.episode.dt},
        {"bandwidth_mode", enum_name(c.episode.bandwidth_mode, kBandwidthNames)},
        {"policy", {{"name", c.episode.policy.name}}}}},
      {"verification",
       {{"n_samples", v.n_samples},
        {"alpha", v.alpha},
        {"epsilon", v.epsilon},
        {"proposal_mode", enum_name(v.proposal, kProposalNames)},
        {"density_mode", enum_name(v.density, kDensityNames)},
        {"seed", v.seed},
        {"components", v.kinematic.components},
        {"spread_deg", v.kinematic.spread * 180.0 / kPi},
        {"reach", v.kinematic.reach},
        {"sigma_scale", v.kinematic.sigma_scale},
        {"still_sigma_scale", v.kinematic.still_sigma_scale},
        {"mass_tol", v.mass_tol},
        {"conservative_radius", v.conservative_radius},
        {"mdn_weights", v.mdn_weights},
        {"workers", v.workers}}},
      {"reward",
       {{"weights",
         {{"throughput", r.weights.throughput},
          {"coverage", r.weights.coverage},
          {"balance", r.weights.balance},
          {"energy", r.weights.energy},
          {"collision", r.weights.collision}}},
        {"d_shift", r.d_shift},
        {"k_scale", r.k_scale},
        {"eps_denom", r.eps_denom},
        {"energy_per_meter", r.energy_per_meter},
        {"urllc_weight", r.urllc_weight},
        {"embb_weight", r.embb_weight}}},
      {"output",
       {{"csv", c.output.csv},
        {"jsonl", c.output.jsonl},
        {"bench_csv", c.output.bench_csv},
        {"record_timing", c.output.record_timing}}},
      {"verify", verify},
      {"bench",
       {{"scenario", shadow_spec_to_json(c.bench.scenario)},
        {"replicates", c.bench.replicates},
        {"mismatch_shift", c.bench.mismatch_shift},
        {"oracle_resolution_fraction", c.bench.oracle_resolution_fraction},
        {"cells", cells}}},
  };
}

inline ScenarioConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string serialize_config(const ScenarioConfig& c) { return config_to_json(c).dump(2); }

}  // namespace pis
