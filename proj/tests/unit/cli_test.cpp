#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into stdout.
Run cli(const std::string& args) {
  const std::string cmd = std::string(PIS_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config(const char* name) { return std::string(PIS_CONFIG_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("pis_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// The JSON object printed after any diagnostic lines.
json last_json(const std::string& text) {
  const auto start = text.find('{');
  if (start == std::string::npos) return {};
  return json::parse(text.substr(start));
}

}  // namespace

TEST(Cli, MissingConfigFails) {
  const auto r = cli("simulate --config /nonexistent/none.json");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("cannot open config file"), std::string::npos);
}

TEST(Cli, BadFieldIsReported) {
  const auto dir = scratch("bad");
  std::ofstream(dir / "bad.json") << R"({"uavs": {"count": -2}})";
  const auto r = cli("simulate --config " + (dir / "bad.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("uavs.count"), std::string::npos);
}

TEST(Cli, SimulateIsByteIdentical) {
  const auto a = scratch("sim_a");
  const auto b = scratch("sim_b");
  const auto ra = cli("simulate --config " + config("canonical.json") + " --steps 8 --out " + a.string());
  const auto rb = cli("simulate --config " + config("canonical.json") + " --steps 8 --out " + b.string());
  ASSERT_EQ(ra.code, 0) << ra.out;
  ASSERT_EQ(rb.code, 0) << rb.out;
  EXPECT_EQ(ra.out, rb.out);
  EXPECT_EQ(slurp(a / "episode.csv"), slurp(b / "episode.csv"));
  EXPECT_EQ(slurp(a / "verification.jsonl"), slurp(b / "verification.jsonl"));
  EXPECT_FALSE(slurp(a / "verification.jsonl").empty());

  const json summary = last_json(ra.out);
  EXPECT_EQ(summary["reward"].size(), 6u);
  for (const char* k : {"phi_thr", "phi_cov", "phi_bal", "phi_energy", "phi_coll"})
    EXPECT_TRUE(summary["reward"].contains(k)) << k;
  for (const char* k : {"sum_throughput_mbps", "urllc_cr", "embb_cr", "energy_kj", "jain"})
    EXPECT_TRUE(summary["metrics"].contains(k)) << k;
}

TEST(Cli, SeedChangesOutput) {
  const auto a = cli("simulate --config " + config("canonical.json") + " --steps 3 --out " + scratch("s1").string());
  const auto b = cli("simulate --config " + config("canonical.json") + " --steps 3 --seed 8 --out " +
                     scratch("s2").string());
  EXPECT_NE(a.out, b.out);
}

TEST(Cli, VerifyObstacleFree) {
  const auto r = cli("verify --config " + config("obstacle_free.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const json j = last_json(r.out);
  EXPECT_EQ(j["p_hat"].get<double>(), 0.0);
  EXPECT_EQ(j["q_u"].get<int>(), 1);
  EXPECT_EQ(j["n"].get<int>(), 100);
}

TEST(Cli, VerifyFullShadow) {
  const auto r = cli("verify --config " + config("full_shadow.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const json j = last_json(r.out);
  EXPECT_EQ(j["p_hat"].get<double>(), 1.0);
  EXPECT_EQ(j["q_u"].get<int>(), 0);
}

TEST(Cli, VerifyHalfShadowWithinThreeStandardErrors) {
  const auto r = cli("verify --config " + config("half_shadow.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const json j = last_json(r.out);
  const double pf = j["analytic_pf"].get<double>();
  const double n = j["n"].get<double>();
  EXPECT_NEAR(pf, 0.5, 1e-9);
  // uniform-sampling standard error bounds the PIS one for this proposal
  EXPECT_NEAR(j["p_hat"].get<double>(), pf, 3.0 * std::sqrt(pf * (1 - pf) / n));
}

TEST(Cli, VerifyModeFlags) {
  const auto r = cli("verify --config " + config("half_shadow.json") + " --mode kinematic --alpha 0.6 --samples 4000");
  ASSERT_EQ(r.code, 0) << r.out;
  const json j = last_json(r.out);
  EXPECT_EQ(j["n"].get<int>(), 4000);
  EXPECT_GT(j["n_failures_hit"].get<int>(), 0);
  EXPECT_LE(j["max_w"].get<double>(), 1.0 / (1.0 - 0.6) + 1e-6);
  EXPECT_EQ(cli("verify --config " + config("half_shadow.json") + " --mode bogus").code, 2);
}

TEST(Cli, BenchWritesOneRowPerCell) {
  const auto dir = scratch("bench");
  const auto r = cli("bench --config " + config("bench.json") + " --replicates 20 --out " + (dir / "b.csv").string());
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(dir / "b.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("alpha,n_samples,mismatched,replicates", 0), 0u);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 5);
}

TEST(Cli, ExportTrajectories) {
  const auto dir = scratch("export");
  const auto path = dir / "traj.jsonl";
  const auto r = cli("export-trajectories --config " + config("canonical.json") + " --users 7 --steps 20 --out " +
                     path.string());
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(path);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    EXPECT_LE(std::hypot(j["vx"].get<double>(), j["vy"].get<double>()), 3.0 + 1e-9);
    EXPECT_GE(j["x"].get<double>(), 0.0);
    EXPECT_LE(j["x"].get<double>(), 1500.0);
    ++rows;
  }
  EXPECT_EQ(rows, 7 * 20);
  EXPECT_EQ(r.out.find("warning"), std::string::npos);

  const auto shortrun = cli("export-trajectories --config " + config("canonical.json") + " --users 2 --steps 5 --out " +
                            (dir / "short.jsonl").string());
  EXPECT_EQ(shortrun.code, 0);
  EXPECT_NE(shortrun.out.find("warning"), std::string::npos);
}

TEST(Cli, EvalProposalMatchesGolden) {
  const fs::path data(PIS_TEST_DATA);
  const json golden = json::parse(slurp(data / "golden.json"));
  int checked = 0;
  for (const auto& c : golden["cases"]) {
    std::string hist;
    for (const auto& v : c["history"]) {
      if (!hist.empty()) hist += ';';
      std::ostringstream os;
      os.precision(17);
      os << v[0].get<double>() << ',' << v[1].get<double>();
      hist += os.str();
    }
    std::ostringstream anchor;
    anchor.precision(17);
    anchor << c["anchor"][0].get<double>() << ',' << c["anchor"][1].get<double>();
    const auto r = cli("eval-proposal --weights " + (data / c["weights"].get<std::string>()).string() +
                       " --history \"" + hist + "\" --anchor " + anchor.str());
    ASSERT_EQ(r.code, 0) << r.out;
    const json j = last_json(r.out);
    ASSERT_EQ(j["pi"].size(), c["pi"].size());
    for (std::size_t k = 0; k < c["pi"].size(); ++k) {
      EXPECT_NEAR(j["pi"][k].get<double>(), c["pi"][k].get<double>(), 1e-5);
      for (int d = 0; d < 2; ++d) {
        EXPECT_NEAR(j["mu"][k][d].get<double>(), c["mu"][k][d].get<double>(), 1e-5);
        EXPECT_NEAR(j["sigma"][k][d].get<double>(), c["sigma"][k][d].get<double>(), 1e-5);
      }
    }
    ++checked;
  }
  EXPECT_EQ(checked, 10);
}

TEST(Cli, EvalProposalRejectsBadHistory) {
  const fs::path data(PIS_TEST_DATA);
  const auto r = cli("eval-proposal --weights " + (data / "golden_00.pismdn").string() + " --history 1,2,3");
  EXPECT_NE(r.code, 0);
}
