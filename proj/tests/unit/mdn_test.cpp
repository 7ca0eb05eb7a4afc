#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "pis/mdn.hpp"
#include "pis/rng.hpp"

using namespace pis;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("pis_test_" + name)).string();
}

MdnWeights random_weights(std::uint64_t seed, std::uint32_t h, std::uint32_t k, std::uint32_t hidden, double scale) {
  MdnWeights w = zero_mdn_weights(h, k, hidden, 2);
  auto rng = derive_stream(seed, Stream::Bench);
  for (auto& [name, t] : w.tensors)
    for (auto& v : t.data) v = static_cast<float>(rng.normal(0.0, scale));
  return w;
}

}  // namespace

TEST(Mdn, ZeroWeightsGiveUniformWeightsAndAnchorMeans) {
  const MdnWeights w = zero_mdn_weights(8, 5, 16, 2);
  std::vector<Vec2> hist(8, Vec2{1.5, -2.0});
  const auto g = mdn_infer(hist, w, {100, 200});
  ASSERT_EQ(g.size(), 5u);
  for (const auto& c : g.components()) {
    EXPECT_NEAR(c.weight, 0.2, 1e-15);
    EXPECT_EQ(c.mean, (Vec2{100, 200}));
    EXPECT_DOUBLE_EQ(c.sigma_x, 1.0);
    EXPECT_DOUBLE_EQ(c.sigma_y, 1.0);
  }
}

TEST(Mdn, OutputsAlwaysValidMixtures) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const MdnWeights w = random_weights(seed, 4, 3, 8, seed < 15 ? 1.0 : 20.0);
    auto rng = derive_stream(seed, Stream::Mobility);
    std::vector<Vec2> hist;
    for (int i = 0; i < 4; ++i) hist.push_back({rng.normal(0, 50), rng.normal(0, 50)});
    const auto g = mdn_infer(hist, w, {0, 0});
    double sum = 0;
    for (const auto& c : g.components()) {
      EXPECT_GT(c.sigma_x, 0.0);
      EXPECT_GT(c.sigma_y, 0.0);
      EXPECT_GT(c.weight, 0.0);
      sum += c.weight;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Mdn, HistoryLengthMismatchIsConfigError) {
  const MdnWeights w = zero_mdn_weights(8, 2, 4, 2);
  std::vector<Vec2> hist(7);
  EXPECT_THROW(mdn_infer(hist, w, {}), ConfigError);
}

TEST(Mdn, SaveLoadRoundTrip) {
  const MdnWeights w = random_weights(3, 6, 4, 5, 0.7);
  const auto path = temp_path("roundtrip.pismdn");
  save_mdn_weights(w, path);
  const MdnWeights back = load_mdn_weights(path);
  EXPECT_EQ(back.history_length, 6u);
  EXPECT_EQ(back.components, 4u);
  EXPECT_EQ(back.hidden, 5u);
  EXPECT_EQ(back.layers, 2u);
  EXPECT_EQ(back.tensors, w.tensors);
  std::remove(path.c_str());
}

TEST(Mdn, LoadRejectsCorruptFiles) {
  const auto path = temp_path("corrupt.pismdn");
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTMDN1garbage";
  }
  EXPECT_THROW(load_mdn_weights(path), ConfigError);
  save_mdn_weights(zero_mdn_weights(2, 2, 3, 2), path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  EXPECT_THROW(load_mdn_weights(path), ConfigError);
  EXPECT_THROW(load_mdn_weights(temp_path("does_not_exist.pismdn")), ConfigError);

  MdnWeights bad = zero_mdn_weights(2, 2, 3, 2);
  bad.tensors["mdn.pi.weight"].dims = {3, 3};
  bad.tensors["mdn.pi.weight"].data.assign(9, 0.0f);
  save_mdn_weights(bad, path);
  EXPECT_THROW(load_mdn_weights(path), ConfigError);
  bad = zero_mdn_weights(2, 2, 3, 2);
  bad.tensors.erase("lstm.bias_hh_l1");
  save_mdn_weights(bad, path);
  EXPECT_THROW(load_mdn_weights(path), ConfigError);
  std::remove(path.c_str());
}

TEST(Mdn, MatchesReferenceForwardPass) {
  std::ifstream in(std::string(PIS_TEST_DATA) + "/golden.json");
  ASSERT_TRUE(in.good());
  const auto golden = nlohmann::json::parse(in);
  ASSERT_EQ(golden["cases"].size(), 10u);
  for (const auto& c : golden["cases"]) {
    const auto w = load_mdn_weights(std::string(PIS_TEST_DATA) + "/" + c["weights"].get<std::string>());
    std::vector<Vec2> hist;
    for (const auto& v : c["history"]) hist.push_back({v[0].get<double>(), v[1].get<double>()});
    const Vec2 anchor{c["anchor"][0].get<double>(), c["anchor"][1].get<double>()};
    const auto g = mdn_infer(hist, w, anchor);
    ASSERT_EQ(g.size(), c["pi"].size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      const auto& comp = g.components()[k];
      EXPECT_NEAR(comp.weight, c["pi"][k].get<double>(), 1e-5);
      EXPECT_NEAR(comp.mean.x, c["mu"][k][0].get<double>(), 1e-5);
      EXPECT_NEAR(comp.mean.y, c["mu"][k][1].get<double>(), 1e-5);
      EXPECT_NEAR(comp.sigma_x, c["sigma"][k][0].get<double>(), 1e-5);
      EXPECT_NEAR(comp.sigma_y, c["sigma"][k][1].get<double>(), 1e-5);
    }
  }
}
