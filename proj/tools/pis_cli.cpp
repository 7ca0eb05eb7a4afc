#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pis/pis.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<std::uint64_t> samples;
  std::optional<std::string> mode;
  std::optional<std::string> density;
  std::optional<std::string> weights;
};

pis::ScenarioConfig load(const std::string& path, const Overrides& o) {
  pis::ScenarioConfig cfg = path.empty() ? pis::ScenarioConfig{} : pis::load_config(path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.alpha) cfg.verification.alpha = *o.alpha;
  if (o.samples) cfg.verification.n_samples = *o.samples;
  if (o.weights) cfg.verification.mdn_weights = *o.weights;
  if (o.mode) {
    if (*o.mode == "uniform") cfg.verification.proposal = pis::ProposalMode::Uniform;
    else if (*o.mode == "kinematic") cfg.verification.proposal = pis::ProposalMode::Kinematic;
    else if (*o.mode == "mdn") cfg.verification.proposal = pis::ProposalMode::Mdn;
    else throw pis::ConfigError("--mode must be uniform, kinematic or mdn");
  }
  if (o.density) {
    if (*o.density == "renormalized") cfg.verification.density = pis::DensityMode::Renormalized;
    else if (*o.density == "paper_faithful") cfg.verification.density = pis::DensityMode::PaperFaithful;
    else throw pis::ConfigError("--density must be renormalized or paper_faithful");
  }
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  return out;
}

fs::path resolve(const std::string& dir, const std::string& file) {
  return dir.empty() ? fs::path(file) : fs::path(dir) / fs::path(file).filename();
}

int cmd_simulate(const std::string& config, const Overrides& o, const std::string& out_dir,
                 std::optional<int> steps, std::optional<std::string> policy) {
  auto cfg = load(config, o);
  if (steps) cfg.episode.n_steps = *steps;
  if (policy) cfg.episode.policy.name = *policy;
  cfg.validate();
  auto pol = pis::make_policy(cfg.episode.policy.name);
  const auto result = pis::run_episode(cfg, *pol);
  {
    auto f = open_out(resolve(out_dir, cfg.output.csv));
    pis::write_episode_csv(f, result);
  }
  {
    auto f = open_out(resolve(out_dir, cfg.output.jsonl));
    pis::write_verification_jsonl(f, result, cfg.output.record_timing);
  }
  json summary = pis::metrics_to_json(result.metrics);
  summary["policy"] = cfg.episode.policy.name;
  summary["seed"] = cfg.seed;
  summary["steps"] = cfg.episode.n_steps;
  std::cout << summary.dump(2) << '\n';
  return 0;
}

pis::Vec2 vec2_of(const std::vector<double>& v, const char* flag) {
  if (v.size() != 2) throw pis::ConfigError(std::string(flag) + " expects x,y");
  return {v[0], v[1]};
}

int cmd_verify(const std::string& config, const Overrides& o, const std::vector<double>& user,
               const std::vector<double>& velocity, const std::vector<double>& uav, std::optional<double> pf) {
  auto cfg = load(config, o);
  std::optional<pis::ShadowScenario> shadow;
  if (pf) {
    auto spec = cfg.verify.shadow.value_or(pis::ShadowScenarioSpec{});
    spec.target_pf = *pf;
    cfg.verify.shadow = spec;
  }
  pis::UserState u;
  pis::Vec3 uav_pos = cfg.verify.uav;
  std::optional<pis::Environment> built;
  if (cfg.verify.shadow) {
    shadow = pis::make_shadow_scenario(*cfg.verify.shadow);
    u = shadow->user;
    uav_pos = shadow->uav;
  } else {
    built = pis::build_environment(cfg);
    u.position = cfg.verify.user_position;
    u.velocity = cfg.verify.user_velocity;
    u.v_max = std::max(cfg.users.v_max, pis::norm(u.velocity));
    u.history_length = static_cast<std::size_t>(cfg.users.history_length);
    u.history.assign(u.history_length, u.velocity);
  }
  if (!user.empty()) u.position = vec2_of(user, "--user");
  if (!velocity.empty()) {
    u.velocity = vec2_of(velocity, "--velocity");
    u.v_max = std::max(u.v_max, pis::norm(u.velocity));
    u.history.assign(u.history_length, u.velocity);
  }
  if (!uav.empty()) {
    if (uav.size() != 3) throw pis::ConfigError("--uav expects x,y,z");
    uav_pos = {uav[0], uav[1], uav[2]};
  }
  const pis::Environment& env = shadow ? shadow->env : *built;
  const double dt = shadow ? cfg.verify.shadow->dt : cfg.episode.dt;

  std::optional<pis::MdnWeights> mdn;
  if (cfg.verification.proposal == pis::ProposalMode::Mdn) mdn = pis::load_mdn_weights(cfg.verification.mdn_weights);
  auto rng = pis::derive_stream(cfg.seed ^ cfg.verification.seed, pis::Stream::Sampling);
  const auto e = pis::verify_user(u, uav_pos, env, dt, cfg.verification, rng, mdn ? &*mdn : nullptr);
  json j = pis::estimate_to_json(e, cfg.output.record_timing);
  if (shadow) j["analytic_pf"] = shadow->analytic_pf;
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_bench(const std::string& config, const Overrides& o, const std::string& out,
              std::optional<std::uint64_t> replicates) {
  auto cfg = load(config, o);
  if (replicates) cfg.bench.replicates = *replicates;
  cfg.validate();
  const auto rows = pis::run_bench(cfg);
  const fs::path path = out.empty() ? fs::path(cfg.output.bench_csv) : fs::path(out);
  {
    auto f = open_out(path);
    pis::write_bench_csv(f, rows);
  }
  std::cout << "oracle P_f = " << rows.front().oracle_pf << ", R = " << cfg.bench.replicates << '\n';
  std::cout << "alpha      N  mismatch        mean p_hat     Var(p_hat)     latency_us\n";
  for (const auto& r : rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%5.2f %6llu  %8s  %16.6g %14.6g %14.2f\n", r.cell.alpha,
                  static_cast<unsigned long long>(r.cell.n_samples), r.cell.mismatched ? "yes" : "no", r.mean_p_hat,
                  r.var_p_hat, r.mean_latency_us);
    std::cout << line;
  }
  return 0;
}

int cmd_export(const std::string& config, const Overrides& o, const std::string& out, std::optional<int> n_users,
               std::optional<int> n_steps) {
  auto cfg = load(config, o);
  if (n_users) {
    cfg.users.n_urllc = *n_users;
    cfg.users.n_embb = 0;
    cfg.users.initial.clear();
  }
  const int steps = n_steps.value_or(cfg.episode.n_steps);
  if (steps < 1) throw pis::ConfigError("--steps must be >= 1");
  cfg.validate();
  if (steps <= cfg.users.history_length)
    std::cerr << "warning: " << steps << " steps with history length " << cfg.users.history_length
              << " yields no training windows\n";
  const auto env = pis::build_environment(cfg);
  auto users = pis::place_users(cfg, env);
  const pis::UserMotionParams motion{env.side_length(), cfg.users.heading_sigma_deg * pis::kPi / 180.0};
  auto f = open_out(out.empty() ? fs::path("trajectories.jsonl") : fs::path(out));
  for (int t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < users.size(); ++i) {
      const auto& u = users[i];
      json row = {{"user_id", i}, {"t", t},         {"vx", u.velocity.x},
                  {"vy", u.velocity.y}, {"x", u.position.x}, {"y", u.position.y}};
      f << row.dump() << '\n';
    }
    for (std::size_t i = 0; i < users.size(); ++i) {
      auto rng = pis::derive_stream(cfg.seed, pis::Stream::Mobility, static_cast<std::uint64_t>(t) + 1, i);
      users[i] = pis::step_user(users[i], cfg.episode.dt, motion, rng);
    }
  }
  std::cout << "wrote " << users.size() * static_cast<std::size_t>(steps) << " rows\n";
  return 0;
}

std::vector<pis::Vec2> parse_history(const std::string& text) {
  std::vector<pis::Vec2> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    double x = 0.0, y = 0.0;
    char comma = 0;
    std::stringstream is(item);
    if (!(is >> x >> comma >> y) || comma != ',')
      throw pis::ConfigError("--history expects vx,vy;vx,vy;... (got '" + item + "')");
    out.push_back({x, y});
  }
  return out;
}

int cmd_eval_proposal(const std::string& weights, const std::string& history_text, const std::string& history_file,
                      const std::vector<double>& anchor) {
  const auto w = pis::load_mdn_weights(weights);
  std::vector<pis::Vec2> history;
  if (!history_file.empty()) {
    std::ifstream in(history_file);
    if (!in) throw pis::ConfigError("cannot open history file '" + history_file + "'");
    const json j = json::parse(in);
    for (const auto& v : j) history.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
  } else {
    history = parse_history(history_text);
  }
  const pis::Vec2 a = anchor.empty() ? pis::Vec2{} : vec2_of(anchor, "--anchor");
  const auto g = pis::mdn_infer(history, w, a);
  json pi = json::array(), mu = json::array(), sigma = json::array();
  for (const auto& c : g.components()) {
    pi.push_back(c.weight);
    mu.push_back({c.mean.x, c.mean.y});
    sigma.push_back({c.sigma_x, c.sigma_y});
  }
  std::cout << json{{"pi", pi}, {"mu", mu}, {"sigma", sigma}}.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predictive importance sampling for UAV coverage verification"};
  app.require_subcommand(1);

  std::string config;
  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Scenario config (JSON)");
    sub->add_option("--seed", o.seed, "Master seed (overrides config)");
    sub->add_option("--alpha", o.alpha, "Mixture weight of the predictor");
    sub->add_option("--samples", o.samples, "Samples per estimate");
    sub->add_option("--mode", o.mode, "Proposal: uniform | kinematic | mdn");
    sub->add_option("--density", o.density, "renormalized | paper_faithful");
    sub->add_option("--weights", o.weights, "MDN weight file");
  };

  std::string out;
  std::optional<int> steps, users;
  std::optional<std::string> policy;
  auto* simulate = app.add_subcommand("simulate", "Run one episode and write the step log");
  add_common(simulate);
  simulate->add_option("--out", out, "Output directory");
  simulate->add_option("--steps", steps, "Episode length override");
  simulate->add_option("--policy", policy, "stationary | random_walk | greedy_coverage");

  std::vector<double> user_pos, user_vel, uav_pos;
  std::optional<double> pf;
  auto* verify = app.add_subcommand("verify", "Estimate the failure probability for one user");
  add_common(verify);
  verify->add_option("--user", user_pos, "User position x,y")->delimiter(',');
  verify->add_option("--velocity", user_vel, "User velocity vx,vy")->delimiter(',');
  verify->add_option("--uav", uav_pos, "Serving UAV x,y,z")->delimiter(',');
  verify->add_option("--shadow-pf", pf, "Use the street-canyon construction with this shadowed fraction");

  std::optional<std::uint64_t> replicates;
  auto* bench = app.add_subcommand("bench", "Compare estimator settings on the shadow scenario");
  add_common(bench);
  bench->add_option("--out", out, "CSV path");
  bench->add_option("--replicates", replicates, "Replicates per cell");

  auto* exporter = app.add_subcommand("export-trajectories", "Write user trajectories as JSONL");
  add_common(exporter);
  exporter->add_option("--out", out, "JSONL path");
  exporter->add_option("--users", users, "Number of users");
  exporter->add_option("--steps", steps, "Number of steps");

  std::string history, history_file;
  std::vector<double> anchor;
  auto* eval = app.add_subcommand("eval-proposal", "Print the MDN mixture for a velocity history");
  eval->add_option("--weights", o.weights, "MDN weight file")->required();
  eval->add_option("--history", history, "vx,vy;vx,vy;... oldest first");
  eval->add_option("--history-file", history_file, "JSON list of [vx, vy]");
  eval->add_option("--anchor", anchor, "Anchor position x,y (default 0,0)")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return cmd_simulate(config, o, out, steps, policy);
    if (*verify) return cmd_verify(config, o, user_pos, user_vel, uav_pos, pf);
    if (*bench) return cmd_bench(config, o, out, replicates);
    if (*exporter) return cmd_export(config, o, out, users, steps);
    if (*eval) return cmd_eval_proposal(*o.weights, history, history_file, anchor);
  } catch (const pis::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const pis::DegenerateProposalError& e) {
    std::cerr << "degenerate proposal: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
