#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "csad/clustering.hpp"
#include "error_helpers.hpp"

namespace csad {
namespace {

using testing_support::code_of;

std::vector<FeatureVector> blobs(std::mt19937_64& rng, const std::vector<FeatureVector>& centers, int per,
                                 double sigma, std::vector<int>* truth = nullptr) {
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<FeatureVector> pts;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (int i = 0; i < per; ++i) {
      FeatureVector p = centers[c];
      for (auto& x : p) x += g(rng);
      pts.push_back(p);
      if (truth) truth->push_back(static_cast<int>(c));
    }
  }
  return pts;
}

// Same partition up to renaming of labels (noise must match noise).
bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == kNoise) != (b[i] == kNoise)) return false;
    if (a[i] == kNoise) continue;
    if (ab.emplace(a[i], b[i]).first->second != b[i]) return false;
    if (ba.emplace(b[i], a[i]).first->second != a[i]) return false;
  }
  return true;
}

TEST(MeanShift, ModesAreFlatKernelFixedPoints) {
  std::mt19937_64 rng(1);
  const auto pts = blobs(rng, {{0, 0, 0}, {12, 0, 3}, {0, 14, -5}}, 30, 1.0);
  MeanShiftConfig cfg;
  cfg.bandwidth = 4.0;
  const auto a = mean_shift(pts, cfg);
  ASSERT_EQ(a.cluster_count(), 3u);
  for (const auto& mode : a.modes) {
    FeatureVector mean(3, 0.0);
    int count = 0;
    for (const auto& p : pts) {
      double d2 = 0;
      for (int k = 0; k < 3; ++k) d2 += (p[k] - mode[k]) * (p[k] - mode[k]);
      if (std::sqrt(d2) <= cfg.bandwidth) {
        for (int k = 0; k < 3; ++k) mean[k] += p[k];
        ++count;
      }
    }
    ASSERT_GT(count, 0);
    double step2 = 0;
    for (int k = 0; k < 3; ++k) step2 += std::pow(mean[k] / count - mode[k], 2);
    EXPECT_LE(std::sqrt(step2), 10 * cfg.effective_tol());
  }
}

TEST(MeanShift, RecoversSeparatedBlobs) {
  std::mt19937_64 rng(2);
  std::vector<int> truth;
  const auto pts = blobs(rng, {{0, 0}, {10, 0}, {0, 10}, {10, 10}}, 25, 1.0, &truth);
  MeanShiftConfig cfg;
  cfg.bandwidth = 4.0;
  const auto a = mean_shift(pts, cfg);
  EXPECT_EQ(a.cluster_count(), 4u);
  EXPECT_TRUE(same_partition(a.labels, truth));
  std::size_t total = 0;
  for (auto s : a.sizes) total += s;
  EXPECT_EQ(total, pts.size());
  EXPECT_EQ(a.noise_count(), 0u);
}

TEST(MeanShift, SinglePointAndBadInputs) {
  MeanShiftConfig cfg;
  const auto a = mean_shift({{1.0, 2.0}}, cfg);
  EXPECT_EQ(a.cluster_count(), 1u);
  EXPECT_EQ(a.labels, std::vector<int>{0});

  EXPECT_EQ(code_of([&] { mean_shift({}, cfg); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(code_of([&] { mean_shift({{1.0}, {1.0, 2.0}}, cfg); }), ErrorCode::kDimMismatch);
  EXPECT_EQ(code_of([&] { mean_shift({{NAN}}, cfg); }), ErrorCode::kNonFinite);
  cfg.bandwidth = 0;
  EXPECT_EQ(code_of([&] { mean_shift({{1.0}}, cfg); }), ErrorCode::kInvalidArgument);
}

TEST(AlphaFilter, DropsSmallClustersAndRenumbersBySize) {
  ClusterAssignment a;
  a.labels = {0, 1, 1, 2, 2, 2, 0, 3, kNoise, 2};
  a.sizes = {2, 2, 4, 1};
  a.modes = {{0.0}, {1.0}, {2.0}, {3.0}};
  const auto f = alpha_filter(a, 2);
  EXPECT_EQ(f.sizes, (std::vector<std::size_t>{4, 2, 2}));
  EXPECT_EQ(f.labels, (std::vector<int>{1, 2, 2, 0, 0, 0, 1, kNoise, kNoise, 0}));
  EXPECT_EQ(f.modes, (std::vector<FeatureVector>{{2.0}, {0.0}, {1.0}}));
  // recount oracle
  std::vector<std::size_t> counts(f.sizes.size(), 0);
  for (int l : f.labels)
    if (l != kNoise) ++counts[l];
  EXPECT_EQ(counts, f.sizes);

  EXPECT_EQ(alpha_filter(a, 5).cluster_count(), 0u);
  EXPECT_EQ(alpha_filter(a, 5).noise_count(), a.labels.size());
}

TEST(Hdbscan, DefaultsScaleWithSampleCount) {
  EXPECT_EQ(HdbscanConfig::defaults_for(10).min_cluster_size, 5u);
  EXPECT_EQ(HdbscanConfig::defaults_for(100).min_cluster_size, 10u);
  EXPECT_EQ(HdbscanConfig::defaults_for(101).min_cluster_size, 11u);
  EXPECT_EQ(HdbscanConfig::defaults_for(101).min_samples, 11u);
}

TEST(Hdbscan, TwoBlobsWithUniformOutliers) {
  std::mt19937_64 rng(4);
  std::vector<int> truth;
  auto pts = blobs(rng, {{0, 0}, {15, 15}}, 100, 1.0, &truth);
  std::uniform_real_distribution<double> box(-15, 30);
  std::size_t injected = 0;
  while (injected < 10) {
    FeatureVector p{box(rng), box(rng)};
    if (std::hypot(p[0], p[1]) < 5 || std::hypot(p[0] - 15, p[1] - 15) < 5) continue;
    pts.push_back(p);
    truth.push_back(kNoise);
    ++injected;
  }
  const auto a = hdbscan(pts, HdbscanConfig::defaults_for(pts.size()));
  EXPECT_EQ(a.cluster_count(), 2u);
  std::size_t flagged = 0, kept = 0;
  std::set<int> blob0, blob1;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (truth[i] == kNoise) {
      flagged += a.labels[i] == kNoise;
    } else {
      kept += a.labels[i] != kNoise;
      if (a.labels[i] != kNoise) (truth[i] == 0 ? blob0 : blob1).insert(a.labels[i]);
    }
  }
  EXPECT_GE(flagged, 9u);
  EXPECT_GE(kept, 190u);
  EXPECT_EQ(blob0.size(), 1u);
  EXPECT_EQ(blob1.size(), 1u);
  EXPECT_NE(*blob0.begin(), *blob1.begin());
}

TEST(Hdbscan, TightBlobIsOneClusterWithoutNoise) {
  std::vector<FeatureVector> pts;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) pts.push_back({x * 0.1, y * 0.1});
  const auto a = hdbscan(pts, HdbscanConfig::defaults_for(pts.size()));
  EXPECT_EQ(a.cluster_count(), 1u);
  EXPECT_EQ(a.noise_count(), 0u);
}

TEST(Hdbscan, MembershipInvariantUnderTranslationAndScaling) {
  std::mt19937_64 rng(6);
  auto pts = blobs(rng, {{0, 0}, {12, 3}, {4, 14}}, 40, 1.0);
  pts.push_back({30, 30});
  pts.push_back({-20, 5});
  const auto cfg = HdbscanConfig::defaults_for(pts.size());
  const auto base = hdbscan(pts, cfg);
  for (double s : {0.001, 7.5}) {
    auto moved = pts;
    for (auto& p : moved) {
      p[0] = s * p[0] + 100;
      p[1] = s * p[1] - 3;
    }
    EXPECT_TRUE(same_partition(base.labels, hdbscan(moved, cfg).labels)) << s;
  }
}

TEST(Hdbscan, RejectsTooFewPointsAndBadConfig) {
  EXPECT_EQ(code_of([] { hdbscan({{0.0}, {1.0}}, HdbscanConfig{}); }), ErrorCode::kTooFewPoints);
  HdbscanConfig bad;
  bad.min_samples = 1;
  EXPECT_EQ(code_of([&] { hdbscan(std::vector<FeatureVector>(10, {0.0}), bad); }), ErrorCode::kInvalidArgument);
}

TEST(LargestClusterFilter, ReturnsMembersOfBiggestCluster) {
  ClusterAssignment a;
  a.labels = {1, 0, 1, kNoise, 1, 0};
  a.sizes = {2, 3};
  EXPECT_EQ(largest_cluster_filter(a), (std::vector<std::size_t>{0, 2, 4}));
  ClusterAssignment empty;
  empty.labels = {kNoise, kNoise};
  EXPECT_EQ(code_of([&] { largest_cluster_filter(empty); }), ErrorCode::kAllNoise);
}

}  // namespace
}  // namespace csad
