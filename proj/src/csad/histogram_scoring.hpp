#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "csad/image.hpp"

namespace csad {

using HistogramVector = std::vector<double>;

// Hist[k-1] = #{pixels == k} / (W*H) for k = 1..n_cls; background excluded.
HistogramVector class_histogram(const LabelMap& map, int n_cls);

// Grid of round(H/s) x round(W/s) cells (at least one each way). Cells are s
// pixels wide except the last row/column, which runs to the image border.
struct GridLayout {
  std::vector<int> row_edges;  // rows + 1 entries
  std::vector<int> col_edges;  // cols + 1 entries

  int rows() const { return static_cast<int>(row_edges.size()) - 1; }
  int cols() const { return static_cast<int>(col_edges.size()) - 1; }
  int cells() const { return rows() * cols(); }
};
GridLayout grid_layout(int width, int height, int patch_size);

// Row-major concatenation of per-cell class histograms, each normalized by its
// own cell's pixel count.
HistogramVector patch_histogram(const LabelMap& map, int patch_size, int n_cls);

// (1/N) * sum_k |a[k] - b[k]|
double histogram_match_distance(const HistogramVector& a, const HistogramVector& b);

// Ridge added to the sample covariance: eps * (trace/d + eps_abs) on the diagonal.
struct RegularizationPolicy {
  double eps = 1e-3;
  double eps_abs = 1e-9;
};

// Mean and Cholesky-factored regularized covariance of training histograms.
// Immutable after construction.
class HistogramBank {
 public:
  HistogramBank() = default;

  static HistogramBank fit(const std::vector<HistogramVector>& samples, const RegularizationPolicy& policy = {},
                           int patch_size = 0, int n_cls = 0);
  // Uses cov as-is (must be SPD); no regularization is added.
  static HistogramBank from_covariance(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int patch_size = 0,
                                       int n_cls = 0);

  // sqrt((h - mu)^T Sigma_reg^-1 (h - mu)) via a triangular solve.
  double score(const HistogramVector& h) const;

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  HistogramVector mean_vector() const { return {mean_.data(), mean_.data() + mean_.size()}; }
  const Eigen::MatrixXd& cholesky_factor() const { return lower_; }
  Eigen::MatrixXd regularized_covariance() const { return lower_ * lower_.transpose(); }
  const RegularizationPolicy& policy() const { return policy_; }
  int patch_size() const { return patch_size_; }
  int n_cls() const { return n_cls_; }
  std::size_t sample_count() const { return samples_; }

  // "CSHB" | u32 version | u32 dim | u32 patch | u32 n_cls | u32 samples |
  // f64 eps | f64 eps_abs | f64 mean[dim] | f64 L lower triangle, row-major; little-endian.
  std::vector<std::uint8_t> serialize() const;
  static HistogramBank deserialize(const std::vector<std::uint8_t>& bytes);

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd lower_;
  RegularizationPolicy policy_;
  int patch_size_ = 0;
  int n_cls_ = 0;
  std::size_t samples_ = 0;
};

inline double mahalanobis_score(const HistogramBank& bank, const HistogramVector& h) { return bank.score(h); }

}  // namespace csad
