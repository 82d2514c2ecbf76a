#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "csad/lgst_scoring.hpp"
#include "error_helpers.hpp"
#include "temp_dir.hpp"

namespace csad {
namespace {

using testing_support::code_of;
using testing_support::TempDir;

Tensor random_tensor(std::mt19937& rng, std::uint32_t c, std::uint32_t h, std::uint32_t w) {
  std::normal_distribution<float> g(0, 1);
  Tensor t = Tensor::zeros(c, h, w);
  for (auto& v : t.data) v = g(rng);
  return t;
}

TEST(LgstScoring, DifferenceMapMatchesTripleLoop) {
  std::mt19937 rng(1);
  const auto a = random_tensor(rng, 7, 5, 9);
  const auto b = random_tensor(rng, 7, 5, 9);
  const auto d = difference_map(a, b);
  ASSERT_EQ(d.width, 9);
  ASSERT_EQ(d.height, 5);
  for (std::uint32_t y = 0; y < 5; ++y) {
    for (std::uint32_t x = 0; x < 9; ++x) {
      double s = 0;
      for (std::uint32_t c = 0; c < 7; ++c) {
        const double diff = static_cast<double>(a.at(c, y, x)) - b.at(c, y, x);
        s += diff * diff;
      }
      EXPECT_NEAR(d.at(static_cast<int>(x), static_cast<int>(y)), s / 7, 1e-12);
    }
  }
  EXPECT_EQ(code_of([&] { difference_map(a, random_tensor(rng, 7, 5, 8)); }), ErrorCode::kDimMismatch);
}

TEST(LgstScoring, CombinedMapAveragesBranches) {
  std::mt19937 rng(2);
  LgstInputs in{random_tensor(rng, 3, 4, 4), random_tensor(rng, 3, 4, 4), random_tensor(rng, 3, 4, 4),
                random_tensor(rng, 3, 4, 4)};
  const auto maps = lgst_maps(in);
  const auto local = difference_map(in.teacher, in.local_head_local);
  const auto global = difference_map(in.global_student, in.local_head_global);
  for (std::size_t i = 0; i < local.values.size(); ++i) {
    EXPECT_EQ(maps.local.values[i], local.values[i]);
    EXPECT_EQ(maps.global.values[i], global.values[i]);
    EXPECT_NEAR(maps.combined.values[i], (local.values[i] + global.values[i]) / 2, 1e-15);
  }
  in.global_student = random_tensor(rng, 3, 4, 5);
  EXPECT_EQ(code_of([&] { lgst_maps(in); }), ErrorCode::kDimMismatch);
}

TEST(LgstScoring, IdenticalFeaturesGiveZeroMap) {
  std::mt19937 rng(3);
  const auto t = random_tensor(rng, 4, 6, 6);
  const auto maps = lgst_maps({t, t, t, t});
  EXPECT_EQ(map_to_score(maps.combined), 0.0);
}

TEST(LgstScoring, ReductionsMatchSortOracle) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-5, 5);
  AnomalyMap m(40, 25);
  for (auto& v : m.values) v = u(rng);
  auto sorted = m.values;
  std::sort(sorted.rbegin(), sorted.rend());
  EXPECT_EQ(map_to_score(m), sorted[0]);
  for (double frac : {0.0, 0.001, 0.01, 0.1, 1.0}) {
    const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(frac * sorted.size())));
    double mean = 0;
    for (std::size_t i = 0; i < k; ++i) mean += sorted[i] / k;
    EXPECT_NEAR(map_to_score(m, {MapReduction::Kind::kTopKMean, frac}), mean, 1e-12) << frac;
  }
  EXPECT_EQ(code_of([] { map_to_score(AnomalyMap{}); }), ErrorCode::kEmptyInput);
}

TEST(LgstScoring, ManifestResolvesRelativePaths) {
  TempDir dir;
  std::mt19937 rng(5);
  std::map<std::string, std::string> files;
  for (const char* key : {"teacher", "local_head_local", "local_head_global", "global_student"}) {
    const std::string name = std::string("img0_") + key + ".cstf";
    write_tensor(random_tensor(rng, 2, 3, 3), dir / "t" / name);
    files[key] = "t/" + name;
  }
  LgstManifest::write(dir / "tensors.json", {{"img0", files}});
  const auto man = LgstManifest::load(dir / "tensors.json");
  EXPECT_EQ(man.size(), 1u);
  EXPECT_TRUE(man.contains("img0"));
  const auto in = man.read("img0");
  EXPECT_EQ(in.teacher.data, read_tensor(dir / "t" / "img0_teacher.cstf").data);
  EXPECT_EQ(code_of([&] { man.read("img1"); }), ErrorCode::kMissingInput);

  write_text_file(dir / "bad.json", R"({"images": {"x": {"teacher": "a"}}})");
  EXPECT_EQ(code_of([&] { LgstManifest::load(dir / "bad.json"); }), ErrorCode::kUnsupportedFormat);
}

}  // namespace
}  // namespace csad
