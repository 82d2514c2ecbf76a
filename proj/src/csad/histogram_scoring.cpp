#include "csad/histogram_scoring.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace csad {

namespace {

void count_classes(const LabelMap& map, int n_cls, int x0, int x1, int y0, int y1, std::vector<std::size_t>& counts) {
  std::fill(counts.begin(), counts.end(), 0);
  for (int y = y0; y < y1; ++y) {
    const std::uint16_t* row = &map.pixels[static_cast<std::size_t>(y) * map.width];
    for (int x = x0; x < x1; ++x) {
      const int v = row[x];
      if (v > n_cls) fail(ErrorCode::kInvalidArgument, "label " + std::to_string(v) + " exceeds class count");
      ++counts[static_cast<std::size_t>(v)];
    }
  }
}

std::vector<int> edges_for(int extent, int patch) {
  const int cells = std::max(1, static_cast<int>(std::lround(static_cast<double>(extent) / patch)));
  std::vector<int> edges(static_cast<std::size_t>(cells) + 1);
  for (int i = 0; i < cells; ++i) edges[static_cast<std::size_t>(i)] = i * patch;
  edges[static_cast<std::size_t>(cells)] = extent;
  return edges;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto u = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

struct Reader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) fail(ErrorCode::kDimMismatch, "truncated histogram bank");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    pos += 8;
    return std::bit_cast<double>(v);
  }
};

constexpr std::uint32_t kBankVersion = 1;

}  // namespace

HistogramVector class_histogram(const LabelMap& map, int n_cls) {
  if (n_cls < 0) fail(ErrorCode::kInvalidArgument, "negative class count");
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_cls) + 1);
  count_classes(map, n_cls, 0, map.width, 0, map.height, counts);
  const double total = static_cast<double>(static_cast<std::size_t>(map.width) * map.height);
  HistogramVector h(static_cast<std::size_t>(n_cls));
  for (int k = 1; k <= n_cls; ++k) h[static_cast<std::size_t>(k - 1)] = static_cast<double>(counts[k]) / total;
  return h;
}

GridLayout grid_layout(int width, int height, int patch_size) {
  if (patch_size <= 0) fail(ErrorCode::kInvalidArgument, "patch size must be positive");
  if (patch_size > std::max(width, height)) {
    fail(ErrorCode::kInvalidArgument, "patch size " + std::to_string(patch_size) + " exceeds image size");
  }
  return {edges_for(height, patch_size), edges_for(width, patch_size)};
}

HistogramVector patch_histogram(const LabelMap& map, int patch_size, int n_cls) {
  const GridLayout grid = grid_layout(map.width, map.height, patch_size);
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_cls) + 1);
  HistogramVector out;
  out.reserve(static_cast<std::size_t>(grid.cells()) * n_cls);
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      const int x0 = grid.col_edges[c], x1 = grid.col_edges[c + 1];
      const int y0 = grid.row_edges[r], y1 = grid.row_edges[r + 1];
      count_classes(map, n_cls, x0, x1, y0, y1, counts);
      const double total = static_cast<double>(static_cast<std::size_t>(x1 - x0) * (y1 - y0));
      for (int k = 1; k <= n_cls; ++k) out.push_back(static_cast<double>(counts[k]) / total);
    }
  }
  return out;
}

double histogram_match_distance(const HistogramVector& a, const HistogramVector& b) {
  if (a.size() != b.size()) fail(ErrorCode::kDimMismatch, "histogram dimensions differ");
  if (a.empty()) return 0.0;
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s / static_cast<double>(a.size());
}

HistogramBank HistogramBank::fit(const std::vector<HistogramVector>& samples, const RegularizationPolicy& policy,
                                 int patch_size, int n_cls) {
  if (samples.size() < 2) fail(ErrorCode::kTooFewSamples, "histogram bank needs at least 2 samples");
  const auto d = static_cast<Eigen::Index>(samples.front().size());
  if (d == 0) fail(ErrorCode::kDimMismatch, "empty histogram");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), d);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (static_cast<Eigen::Index>(samples[i].size()) != d) fail(ErrorCode::kDimMismatch, "histogram dimensions differ");
    x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(samples[i].data(), d);
  }
  HistogramBank bank;
  bank.mean_ = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - bank.mean_.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(samples.size() - 1);
  const double ridge = policy.eps * (cov.trace() / static_cast<double>(d) + policy.eps_abs);
  cov.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) fail(ErrorCode::kInternal, "regularized covariance is not positive definite");
  bank.lower_ = llt.matrixL();
  bank.policy_ = policy;
  bank.patch_size_ = patch_size;
  bank.n_cls_ = n_cls;
  bank.samples_ = samples.size();
  return bank;
}

HistogramBank HistogramBank::from_covariance(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int patch_size,
                                             int n_cls) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) fail(ErrorCode::kDimMismatch, "covariance shape");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) fail(ErrorCode::kInvalidArgument, "covariance is not positive definite");
  HistogramBank bank;
  bank.mean_ = mean;
  bank.lower_ = llt.matrixL();
  bank.policy_ = {0.0, 0.0};
  bank.patch_size_ = patch_size;
  bank.n_cls_ = n_cls;
  return bank;
}

double HistogramBank::score(const HistogramVector& h) const {
  if (static_cast<Eigen::Index>(h.size()) != mean_.size()) {
    fail(ErrorCode::kDimMismatch, "histogram dimension " + std::to_string(h.size()) + " vs bank " +
                                      std::to_string(mean_.size()));
  }
  const Eigen::VectorXd diff = Eigen::Map<const Eigen::VectorXd>(h.data(), mean_.size()) - mean_;
  const Eigen::VectorXd y = lower_.triangularView<Eigen::Lower>().solve(diff);
  return y.norm();
}

std::vector<std::uint8_t> HistogramBank::serialize() const {
  std::vector<std::uint8_t> out{'C', 'S', 'H', 'B'};
  const auto d = static_cast<std::uint32_t>(mean_.size());
  put_u32(out, kBankVersion);
  put_u32(out, d);
  put_u32(out, static_cast<std::uint32_t>(patch_size_));
  put_u32(out, static_cast<std::uint32_t>(n_cls_));
  put_u32(out, static_cast<std::uint32_t>(samples_));
  put_f64(out, policy_.eps);
  put_f64(out, policy_.eps_abs);
  for (Eigen::Index i = 0; i < mean_.size(); ++i) put_f64(out, mean_[i]);
  for (Eigen::Index r = 0; r < mean_.size(); ++r) {
    for (Eigen::Index c = 0; c <= r; ++c) put_f64(out, lower_(r, c));
  }
  return out;
}

HistogramBank HistogramBank::deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "CSHB", 4) != 0) fail(ErrorCode::kBadMagic, "not a histogram bank");
  Reader rd{bytes, 4};
  if (rd.u32() != kBankVersion) fail(ErrorCode::kUnsupportedFormat, "unsupported histogram bank version");
  const std::uint32_t d = rd.u32();
  HistogramBank bank;
  bank.patch_size_ = static_cast<int>(rd.u32());
  bank.n_cls_ = static_cast<int>(rd.u32());
  bank.samples_ = rd.u32();
  bank.policy_.eps = rd.f64();
  bank.policy_.eps_abs = rd.f64();
  bank.mean_.resize(d);
  for (std::uint32_t i = 0; i < d; ++i) bank.mean_[i] = rd.f64();
  bank.lower_ = Eigen::MatrixXd::Zero(d, d);
  for (std::uint32_t r = 0; r < d; ++r) {
    for (std::uint32_t c = 0; c <= r; ++c) bank.lower_(r, c) = rd.f64();
  }
  if (rd.pos != bytes.size()) fail(ErrorCode::kDimMismatch, "trailing bytes in histogram bank");
  return bank;
}

}  // namespace csad
