#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "csad/fusion_calibration.hpp"
#include "error_helpers.hpp"
#include "oracles.hpp"

namespace csad {
namespace {

using testing_support::code_of;

TEST(FusionCalibration, TrimmedStatsOfOneToTen) {
  std::vector<double> v{10, 3, 1, 7, 5, 9, 2, 8, 6, 4};
  const auto st = trimmed_stats(v);
  const auto want = oracle::trimmed(v, 0.2, 0.8);
  EXPECT_DOUBLE_EQ(st.mean, 5.5);
  EXPECT_DOUBLE_EQ(want.mean, 5.5);
  EXPECT_NEAR(st.stddev, want.stddev, 1e-14);
  EXPECT_NEAR(st.stddev, std::sqrt(35.0 / 12.0), 1e-14);  // kept 3..8
}

TEST(FusionCalibration, TrimmedStatsMatchOracleOnRandomSamples) {
  std::mt19937 rng(1);
  std::lognormal_distribution<double> g(0, 1);
  for (int n = 5; n < 60; n += 3) {
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    for (auto [lo, hi] : {std::pair{0.2, 0.8}, std::pair{0.0, 1.0}, std::pair{0.1, 0.5}}) {
      const auto st = trimmed_stats(v, lo, hi);
      const auto want = oracle::trimmed(v, lo, hi);
      EXPECT_NEAR(st.mean, want.mean, 1e-12) << n;
      EXPECT_NEAR(st.stddev, std::max(want.stddev, kSigmaFloor), 1e-12) << n;
    }
  }
}

TEST(FusionCalibration, NormalizationIsAffineInvariant) {
  std::mt19937 rng(2);
  std::normal_distribution<double> g(3, 2);
  std::vector<double> v(50);
  for (auto& x : v) x = g(rng);
  const auto base = calibrate({{"s", v}});
  for (auto [a, b] : {std::pair{2.5, -7.0}, std::pair{0.01, 100.0}}) {
    std::vector<double> w(v);
    for (auto& x : w) x = a * x + b;
    const auto moved = calibrate({{"s", w}});
    for (double probe : {-1.0, 3.0, 8.0}) {
      EXPECT_NEAR(moved.normalize("s", a * probe + b), base.normalize("s", probe), 1e-9);
    }
  }
}

TEST(FusionCalibration, FuseSumsNormalizedStreams) {
  CalibrationProfile p;
  p.streams["hist"] = {2.0, 0.5};
  p.streams["lgst"] = {10.0, 4.0};
  EXPECT_DOUBLE_EQ(p.fuse({{"hist", 3.0}, {"lgst", 2.0}}), 2.0 - 2.0);
  EXPECT_DOUBLE_EQ(fuse(p, {{"hist", 4.0}}), 4.0);
  EXPECT_EQ(code_of([&] { p.fuse({{"other", 1.0}}); }), ErrorCode::kUnknownStream);
}

TEST(FusionCalibration, ConstantScoresHitSigmaFloor) {
  const auto st = trimmed_stats(std::vector<double>(8, 4.0));
  EXPECT_EQ(st.mean, 4.0);
  EXPECT_EQ(st.stddev, kSigmaFloor);
}

TEST(FusionCalibration, Errors) {
  EXPECT_EQ(code_of([] { trimmed_stats({1, 2, 3, 4}); }), ErrorCode::kTooFewScores);
  EXPECT_EQ(code_of([] { trimmed_stats({1, 2, 3, 4, NAN}); }), ErrorCode::kNonFinite);
  EXPECT_EQ(code_of([] { trimmed_stats({1, 2, 3, 4, 5}, 0.8, 0.2); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { calibrate({}); }), ErrorCode::kTooFewScores);
  EXPECT_EQ(code_of([] { CalibrationProfile::from_json("{"); }), ErrorCode::kConfig);
}

TEST(FusionCalibration, ProfileJsonRoundTrip) {
  const auto p = calibrate({{"a", {1, 2, 3, 4, 5, 6}}, {"b", {0.1, 0.7, 0.3, 0.2, 0.9}}});
  const auto back = CalibrationProfile::from_json(p.to_json());
  ASSERT_EQ(back.streams.size(), 2u);
  for (const auto& [name, st] : p.streams) {
    EXPECT_EQ(back.streams.at(name).mean, st.mean);
    EXPECT_EQ(back.streams.at(name).stddev, st.stddev);
    EXPECT_EQ(back.streams.at(name).low, st.low);
  }
}

}  // namespace
}  // namespace csad
