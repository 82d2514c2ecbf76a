#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "csad/localization.hpp"
#include "error_helpers.hpp"
#include "oracles.hpp"

namespace csad {
namespace {

using testing_support::code_of;

LabelMap squares(int w, std::vector<std::tuple<int, int, int, std::uint16_t>> items) {
  LabelMap m(w, w);
  for (auto [x0, y0, side, cls] : items)
    for (int y = y0; y < y0 + side; ++y)
      for (int x = x0; x < x0 + side; ++x) m.at(x, y) = cls;
  return m;
}

TEST(Localization, NearestTrainingMapMatchesL1Oracle) {
  std::mt19937 rng(1);
  std::uniform_int_distribution<int> pos(0, 40), side(2, 20);
  std::vector<LabelMap> train;
  for (int i = 0; i < 15; ++i) train.push_back(squares(64, {{pos(rng), pos(rng), side(rng), 1}, {pos(rng), pos(rng), side(rng), 2}}));
  for (int t = 0; t < 10; ++t) {
    const auto test = squares(64, {{pos(rng), pos(rng), side(rng), 1}, {pos(rng), pos(rng), side(rng), 2}});
    const auto h = oracle::class_histogram(test.pixels, 2);
    std::size_t best = 0;
    double best_d = 1e9;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const double d = oracle::mean_abs_difference(h, oracle::class_histogram(train[i].pixels, 2));
      if (d < best_d) best_d = d, best = i;
    }
    EXPECT_EQ(nearest_training_map(test, train, 2), best);
  }
  EXPECT_EQ(code_of([] { nearest_training_map(LabelMap(4, 4), {}, 1); }), ErrorCode::kNoTrainingMaps);
}

TEST(Localization, MatchingMeanGivesZeroMap) {
  const auto m = squares(64, {{4, 4, 20, 1}, {40, 40, 10, 2}});
  const auto map = histogram_anomaly_map(m, patch_histogram(m, 32, 2), 32, 2, {m});
  for (double v : map.values) EXPECT_EQ(v, 0.0);
}

TEST(Localization, MassEqualsHistogramDeviation) {
  std::mt19937 rng(2);
  std::uniform_int_distribution<int> pos(0, 40), side(4, 22);
  std::vector<LabelMap> train;
  for (int i = 0; i < 8; ++i) train.push_back(squares(64, {{pos(rng), pos(rng), side(rng), 1}, {pos(rng), pos(rng), side(rng), 2}}));
  for (int s : {16, 24, 64}) {
    HistogramVector mean(patch_histogram(train[0], s, 2).size(), 0.0);
    for (const auto& t : train) {
      const auto h = patch_histogram(t, s, 2);
      for (std::size_t k = 0; k < h.size(); ++k) mean[k] += h[k] / train.size();
    }
    const auto test = squares(64, {{pos(rng), pos(rng), side(rng), 2}});
    const auto h = patch_histogram(test, s, 2);
    double deviation = 0;
    for (std::size_t k = 0; k < h.size(); ++k) deviation += std::abs(h[k] - mean[k]);
    const auto map = histogram_anomaly_map(test, mean, s, 2, train);
    double mass = 0;
    for (double v : map.values) {
      EXPECT_GE(v, 0.0);
      mass += v;
    }
    EXPECT_NEAR(mass, deviation, 1e-9) << s;
  }
}

TEST(Localization, ExtraAndMissingRegionsAreImplicated) {
  const auto normal = squares(64, {{4, 4, 12, 1}, {40, 40, 12, 2}});
  const auto extra = squares(64, {{4, 4, 12, 1}, {40, 40, 12, 2}, {40, 4, 8, 1}});
  const auto missing = squares(64, {{4, 4, 12, 1}});
  const auto mean = patch_histogram(normal, 32, 2);

  const auto e = histogram_anomaly_map(extra, mean, 32, 2, {normal});
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) EXPECT_EQ(e.at(x, y) > 0, x >= 40 && x < 48 && y >= 4 && y < 12) << x << "," << y;

  const auto m = histogram_anomaly_map(missing, mean, 32, 2, {normal});
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) EXPECT_EQ(m.at(x, y) > 0, normal.at(x, y) == 2) << x << "," << y;
}

TEST(Localization, MultiScaleSumsPerSizeMaps) {
  const auto normal = squares(64, {{4, 4, 12, 1}, {40, 40, 12, 2}});
  const auto test = squares(64, {{10, 30, 12, 1}, {40, 40, 12, 2}});
  const std::vector<int> sizes{16, 64};
  const std::vector<HistogramVector> means{patch_histogram(normal, 16, 2), patch_histogram(normal, 64, 2)};
  const auto sum = histogram_anomaly_map(test, means, sizes, 2, {normal});
  const auto a = histogram_anomaly_map(test, means[0], 16, 2, {normal});
  const auto b = histogram_anomaly_map(test, means[1], 64, 2, {normal});
  for (std::size_t i = 0; i < sum.values.size(); ++i) EXPECT_NEAR(sum.values[i], a.values[i] + b.values[i], 1e-15);
  EXPECT_EQ(code_of([&] { histogram_anomaly_map(test, means, {16}, 2, {normal}); }), ErrorCode::kDimMismatch);
  EXPECT_EQ(code_of([&] { histogram_anomaly_map(test, means[0], 16, 2, {}); }), ErrorCode::kNoTrainingMaps);
  EXPECT_EQ(code_of([&] { histogram_anomaly_map(test, means[1], 16, 2, {normal}); }), ErrorCode::kDimMismatch);
}

TEST(Localization, MergeMapsIsSigmaWeightedSum) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0, 3);
  AnomalyMap ph(9, 7), lg(9, 7);
  for (auto& v : ph.values) v = u(rng);
  for (auto& v : lg.values) v = u(rng);
  const auto m = merge_maps(ph, lg, 0.5, 4.0);
  for (std::size_t i = 0; i < m.values.size(); ++i) EXPECT_NEAR(m.values[i], ph.values[i] / 0.5 + lg.values[i] / 4.0, 1e-14);
  EXPECT_EQ(code_of([&] { merge_maps(ph, AnomalyMap(9, 8), 1, 1); }), ErrorCode::kDimMismatch);
  EXPECT_EQ(code_of([&] { merge_maps(ph, lg, 0, 1); }), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace csad
