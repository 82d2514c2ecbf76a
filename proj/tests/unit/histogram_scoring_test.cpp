#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "csad/histogram_scoring.hpp"
#include "error_helpers.hpp"
#include "oracles.hpp"

namespace csad {
namespace {

using testing_support::code_of;

LabelMap random_map(std::mt19937& rng, int w, int h, int n_cls) {
  LabelMap m(w, h);
  std::uniform_int_distribution<int> u(0, n_cls);
  for (auto& p : m.pixels) p = static_cast<std::uint16_t>(u(rng));
  return m;
}

TEST(HistogramScoring, ClassHistogramCountsNonBackgroundPixels) {
  LabelMap m(4, 2);
  m.pixels = {0, 1, 1, 2, 2, 2, 0, 3};
  EXPECT_EQ(class_histogram(m, 3), (HistogramVector{2 / 8.0, 3 / 8.0, 1 / 8.0}));
  EXPECT_EQ(class_histogram(m, 4).back(), 0.0);
  EXPECT_EQ(code_of([&] { class_histogram(m, 2); }), ErrorCode::kInvalidArgument);
}

TEST(HistogramScoring, ClassHistogramMatchesOracle) {
  std::mt19937 rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto m = random_map(rng, 17 + t, 9 + 2 * t, 1 + t % 6);
    const auto got = class_histogram(m, 1 + t % 6);
    const auto want = oracle::class_histogram(m.pixels, 1 + t % 6);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-15);
  }
}

TEST(HistogramScoring, GridRoundsCellCountAndLastCellAbsorbsRemainder) {
  const auto g = grid_layout(256, 256, 128);
  EXPECT_EQ(g.rows(), 2);
  EXPECT_EQ(g.col_edges, (std::vector<int>{0, 128, 256}));

  const auto r = grid_layout(100, 70, 30);  // 100/30 -> 3, 70/30 -> 2
  EXPECT_EQ(r.col_edges, (std::vector<int>{0, 30, 60, 100}));
  EXPECT_EQ(r.row_edges, (std::vector<int>{0, 30, 70}));

  const auto small = grid_layout(40, 10, 30);  // 10/30 rounds to 0 -> one row
  EXPECT_EQ(small.row_edges, (std::vector<int>{0, 10}));
  EXPECT_EQ(small.cols(), 1);

  EXPECT_EQ(code_of([] { grid_layout(64, 64, 65); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { grid_layout(64, 64, 0); }), ErrorCode::kInvalidArgument);
}

TEST(HistogramScoring, PatchHistogramMatchesPerCellOracle) {
  std::mt19937 rng(2);
  const int n_cls = 3;
  const auto m = random_map(rng, 50, 37, n_cls);
  const int s = 16;
  const auto g = grid_layout(m.width, m.height, s);
  const auto got = patch_histogram(m, s, n_cls);
  ASSERT_EQ(got.size(), static_cast<std::size_t>(g.cells() * n_cls));
  std::size_t k = 0;
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) {
      std::vector<std::uint16_t> cell;
      for (int y = g.row_edges[r]; y < g.row_edges[r + 1]; ++y)
        for (int x = g.col_edges[c]; x < g.col_edges[c + 1]; ++x) cell.push_back(m.at(x, y));
      for (double v : oracle::class_histogram(cell, n_cls)) EXPECT_NEAR(got[k++], v, 1e-15);
    }
  }
}

TEST(HistogramScoring, WholeImagePatchEqualsClassHistogram) {
  std::mt19937 rng(3);
  const auto m = random_map(rng, 64, 64, 4);
  const auto a = patch_histogram(m, 64, 4);
  const auto b = class_histogram(m, 4);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-15);
}

TEST(HistogramScoring, MatchDistanceMatchesOracle) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 1; t < 30; ++t) {
    HistogramVector a(t), b(t);
    for (int i = 0; i < t; ++i) a[i] = u(rng), b[i] = u(rng);
    EXPECT_NEAR(histogram_match_distance(a, b), oracle::mean_abs_difference(a, b), 1e-14);
    EXPECT_EQ(histogram_match_distance(a, a), 0.0);
  }
  EXPECT_EQ(code_of([] { histogram_match_distance({1.0}, {1.0, 2.0}); }), ErrorCode::kDimMismatch);
}

std::vector<HistogramVector> correlated_samples(std::mt19937& rng, int n, int d) {
  std::normal_distribution<double> g(0, 1);
  std::vector<HistogramVector> out;
  for (int i = 0; i < n; ++i) {
    HistogramVector h(d);
    const double shared = g(rng);
    for (int k = 0; k < d; ++k) h[k] = 0.3 + 0.05 * shared * (k + 1) + 0.01 * g(rng);
    out.push_back(h);
  }
  return out;
}

std::vector<std::vector<double>> to_rows(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> rows(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
  return rows;
}

TEST(HistogramScoring, FittedBankMatchesExplicitInverseOracle) {
  std::mt19937 rng(5);
  const int d = 6;
  const auto samples = correlated_samples(rng, 40, d);
  const auto bank = HistogramBank::fit(samples);

  // independent covariance: unbiased sample covariance plus the documented ridge
  std::vector<double> mean(d, 0.0);
  for (const auto& s : samples)
    for (int k = 0; k < d; ++k) mean[k] += s[k] / samples.size();
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (const auto& s : samples)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) cov[i][j] += (s[i] - mean[i]) * (s[j] - mean[j]) / (samples.size() - 1);
  double trace = 0;
  for (int i = 0; i < d; ++i) trace += cov[i][i];
  for (int i = 0; i < d; ++i) cov[i][i] += 1e-3 * (trace / d + 1e-9);

  const auto reg = to_rows(bank.regularized_covariance());
  for (int i = 0; i < d; ++i) {
    EXPECT_NEAR(bank.mean()(i), mean[i], 1e-14);
    for (int j = 0; j < d; ++j) EXPECT_NEAR(reg[i][j], cov[i][j], 1e-12);
  }
  for (const auto& h : correlated_samples(rng, 20, d)) {
    const double want = oracle::mahalanobis(mean, cov, h);
    EXPECT_NEAR(bank.score(h), want, 1e-6 * std::max(1.0, want));
  }
  EXPECT_NEAR(mahalanobis_score(bank, bank.mean_vector()), 0.0, 1e-12);
}

TEST(HistogramScoring, IdentityCovarianceGivesEuclideanDistance) {
  Eigen::VectorXd mu(3);
  mu << 1, 2, 3;
  const auto bank = HistogramBank::from_covariance(mu, Eigen::MatrixXd::Identity(3, 3));
  EXPECT_NEAR(bank.score({4, 6, 3}), 5.0, 1e-12);
  EXPECT_EQ(code_of([&] { bank.score({1.0}); }), ErrorCode::kDimMismatch);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
  bad(2, 2) = -1;
  EXPECT_EQ(code_of([&] { HistogramBank::from_covariance(mu, bad); }), ErrorCode::kInvalidArgument);
}

TEST(HistogramScoring, ConstantSamplesStayWellConditioned) {
  const std::vector<HistogramVector> same(5, {0.2, 0.0, 0.5});
  const auto bank = HistogramBank::fit(same);
  EXPECT_EQ(bank.score({0.2, 0.0, 0.5}), 0.0);
  EXPECT_TRUE(std::isfinite(bank.score({0.3, 0.1, 0.5})));
  EXPECT_GT(bank.score({0.3, 0.1, 0.5}), 0.0);
}

TEST(HistogramScoring, BankSerializationRoundTrip) {
  std::mt19937 rng(6);
  const auto samples = correlated_samples(rng, 12, 4);
  const auto bank = HistogramBank::fit(samples, {2e-3, 1e-8}, 64, 2);
  const auto back = HistogramBank::deserialize(bank.serialize());
  EXPECT_EQ(back.patch_size(), 64);
  EXPECT_EQ(back.n_cls(), 2);
  EXPECT_EQ(back.sample_count(), 12u);
  EXPECT_EQ(back.policy().eps, 2e-3);
  EXPECT_EQ(back.mean(), bank.mean());
  EXPECT_EQ(back.cholesky_factor(), bank.cholesky_factor());
  for (const auto& s : samples) EXPECT_EQ(back.score(s), bank.score(s));

  auto bytes = bank.serialize();
  bytes[1] = 'X';
  EXPECT_EQ(code_of([&] { HistogramBank::deserialize(bytes); }), ErrorCode::kBadMagic);
  bytes = bank.serialize();
  bytes.pop_back();
  EXPECT_EQ(code_of([&] { HistogramBank::deserialize(bytes); }), ErrorCode::kDimMismatch);
  bytes = bank.serialize();
  bytes.push_back(0);
  EXPECT_EQ(code_of([&] { HistogramBank::deserialize(bytes); }), ErrorCode::kDimMismatch);
}

TEST(HistogramScoring, FitNeedsTwoConsistentSamples) {
  EXPECT_EQ(code_of([] { HistogramBank::fit({{1.0, 2.0}}); }), ErrorCode::kTooFewSamples);
  EXPECT_EQ(code_of([] { HistogramBank::fit({{1.0, 2.0}, {1.0}}); }), ErrorCode::kDimMismatch);
}

}  // namespace
}  // namespace csad
