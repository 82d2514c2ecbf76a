#pragma once

#include <cstddef>
#include <vector>

#include "csad/component_features.hpp"

namespace csad {

inline constexpr int kNoise = -1;

struct MeanShiftConfig {
  double bandwidth = 1.0;
  int max_iter = 300;
  double convergence_tol = 0.0;    // <= 0 selects 1e-4 * bandwidth
  double mode_merge_radius = 0.0;  // <= 0 selects bandwidth

  double effective_tol() const { return convergence_tol > 0 ? convergence_tol : 1e-4 * bandwidth; }
  double effective_merge_radius() const { return mode_merge_radius > 0 ? mode_merge_radius : bandwidth; }
};

// Cluster ids are dense 0..k-1; noise points carry kNoise.
struct ClusterAssignment {
  std::vector<int> labels;
  std::vector<std::size_t> sizes;
  std::vector<FeatureVector> modes;  // mean-shift modes, or member centroids for hdbscan

  std::size_t cluster_count() const { return sizes.size(); }
  std::size_t noise_count() const;
};

// Flat-kernel mean shift seeded at every point. Converged modes are merged in
// seed order; each point takes the nearest surviving mode.
ClusterAssignment mean_shift(const std::vector<FeatureVector>& points, const MeanShiftConfig& cfg);

// Clusters with fewer than alpha members become noise; survivors are renumbered
// by size, largest first (ties keep the lower old id first).
ClusterAssignment alpha_filter(const ClusterAssignment& assignment, std::size_t alpha);

struct HdbscanConfig {
  std::size_t min_cluster_size = 5;
  std::size_t min_samples = 5;
  // A member whose exit distance from the condensed tree exceeds this multiple
  // of the upper quartile of its cluster's exit distances is relabeled noise.
  // <= 0 disables.
  double outlier_factor = 3.0;

  // min_cluster_size = max(5, ceil(0.1 n)), min_samples = min_cluster_size.
  static HdbscanConfig defaults_for(std::size_t n);
};

// HDBSCAN*: core distances (self counted as the first neighbour), mutual
// reachability MST, condensed tree, excess-of-mass selection. The root cluster
// may be selected when no split beats it.
ClusterAssignment hdbscan(const std::vector<FeatureVector>& points, const HdbscanConfig& cfg);

// Members of the largest cluster (ties: smallest id). Throws AllNoise.
std::vector<std::size_t> largest_cluster_filter(const ClusterAssignment& assignment);

double euclidean(const FeatureVector& a, const FeatureVector& b);

}  // namespace csad
