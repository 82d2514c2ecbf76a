#pragma once

#include <cstddef>
#include <vector>

#include "csad/histogram_scoring.hpp"
#include "csad/image.hpp"

namespace csad {

struct LocalizationResult {
  AnomalyMap patch_hist_map;
  AnomalyMap lgst_map;
  AnomalyMap merged;
};

// Index of the training map whose class histogram is closest in L1.
std::size_t nearest_training_map(const LabelMap& test, const std::vector<LabelMap>& train_maps, int n_cls);

// Histogram-difference anomaly map for one patch size. Per cell and class, an
// excess over the mean is spread uniformly over the test map's pixels of that
// class in the cell; a deficit is spread over the same class region of the
// nearest training map (the whole cell if that map has none there).
AnomalyMap histogram_anomaly_map(const LabelMap& test, const HistogramVector& mean, int patch_size, int n_cls,
                                 const std::vector<LabelMap>& train_maps);

// Sum of the per-size maps. means[i] is the bank mean for patch_sizes[i].
AnomalyMap histogram_anomaly_map(const LabelMap& test, const std::vector<HistogramVector>& means,
                                 const std::vector<int>& patch_sizes, int n_cls,
                                 const std::vector<LabelMap>& train_maps);

// ph / sigma_ph + lgst / sigma_lgst, pixelwise.
AnomalyMap merge_maps(const AnomalyMap& ph, const AnomalyMap& lgst, double sigma_ph, double sigma_lgst);

}  // namespace csad
