#include "csad/localization.hpp"

#include <cmath>
#include <limits>

namespace csad {

namespace {

constexpr double kZeroTolerance = 1e-12;

void spread(AnomalyMap& out, const LabelMap& region_map, std::uint16_t cls, int x0, int x1, int y0, int y1,
            double magnitude) {
  std::size_t count = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) count += region_map.at(x, y) == cls ? 1 : 0;
  }
  if (count == 0) {
    const double v = magnitude / static_cast<double>(static_cast<std::size_t>(x1 - x0) * (y1 - y0));
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) out.at(x, y) += v;
    }
    return;
  }
  const double v = magnitude / static_cast<double>(count);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      if (region_map.at(x, y) == cls) out.at(x, y) += v;
    }
  }
}

}  // namespace

std::size_t nearest_training_map(const LabelMap& test, const std::vector<LabelMap>& train_maps, int n_cls) {
  if (train_maps.empty()) fail(ErrorCode::kNoTrainingMaps, "no training maps for nearest-normal search");
  const auto h = class_histogram(test, n_cls);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < train_maps.size(); ++i) {
    const auto t = class_histogram(train_maps[i], n_cls);
    double d = 0;
    for (std::size_t k = 0; k < h.size(); ++k) d += std::abs(h[k] - t[k]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

AnomalyMap histogram_anomaly_map(const LabelMap& test, const HistogramVector& mean, int patch_size, int n_cls,
                                 const std::vector<LabelMap>& train_maps) {
  if (train_maps.empty()) fail(ErrorCode::kNoTrainingMaps, "histogram anomaly map needs training maps");
  const HistogramVector h = patch_histogram(test, patch_size, n_cls);
  if (h.size() != mean.size()) fail(ErrorCode::kDimMismatch, "bank mean does not match patch histogram");
  const GridLayout grid = grid_layout(test.width, test.height, patch_size);
  AnomalyMap out(test.width, test.height);
  const LabelMap* nearest = nullptr;

  std::size_t idx = 0;
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      const int x0 = grid.col_edges[c], x1 = grid.col_edges[c + 1];
      const int y0 = grid.row_edges[r], y1 = grid.row_edges[r + 1];
      for (int k = 1; k <= n_cls; ++k, ++idx) {
        const double diff = h[idx] - mean[idx];
        if (std::abs(diff) <= kZeroTolerance) continue;
        const auto cls = static_cast<std::uint16_t>(k);
        if (diff > 0) {
          spread(out, test, cls, x0, x1, y0, y1, diff);
        } else {
          if (nearest == nullptr) nearest = &train_maps[nearest_training_map(test, train_maps, n_cls)];
          if (nearest->width != test.width || nearest->height != test.height) {
            fail(ErrorCode::kDimMismatch, "training map size differs from test map");
          }
          spread(out, *nearest, cls, x0, x1, y0, y1, -diff);
        }
      }
    }
  }
  return out;
}

AnomalyMap histogram_anomaly_map(const LabelMap& test, const std::vector<HistogramVector>& means,
                                 const std::vector<int>& patch_sizes, int n_cls,
                                 const std::vector<LabelMap>& train_maps) {
  if (means.size() != patch_sizes.size()) fail(ErrorCode::kDimMismatch, "one bank mean per patch size required");
  AnomalyMap total(test.width, test.height);
  for (std::size_t i = 0; i < patch_sizes.size(); ++i) {
    const auto m = histogram_anomaly_map(test, means[i], patch_sizes[i], n_cls, train_maps);
    for (std::size_t p = 0; p < total.values.size(); ++p) total.values[p] += m.values[p];
  }
  return total;
}

AnomalyMap merge_maps(const AnomalyMap& ph, const AnomalyMap& lgst, double sigma_ph, double sigma_lgst) {
  if (ph.width != lgst.width || ph.height != lgst.height) fail(ErrorCode::kDimMismatch, "merge_maps: size mismatch");
  if (!(sigma_ph > 0) || !(sigma_lgst > 0)) fail(ErrorCode::kInvalidArgument, "merge_maps: sigma must be positive");
  AnomalyMap out(ph.width, ph.height);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = ph.values[i] / sigma_ph + lgst.values[i] / sigma_lgst;
  }
  return out;
}

}  // namespace csad
