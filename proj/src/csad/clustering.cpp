#include "csad/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace csad {

namespace {

void check_points(const std::vector<FeatureVector>& points) {
  if (points.empty()) fail(ErrorCode::kEmptyInput, "clustering: no points");
  const std::size_t d = points.front().size();
  for (const auto& p : points) {
    if (p.size() != d) fail(ErrorCode::kDimMismatch, "clustering: points differ in dimension");
    for (double v : p) {
      if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "clustering: non-finite coordinate");
    }
  }
}

void recount(ClusterAssignment& a) {
  std::fill(a.sizes.begin(), a.sizes.end(), 0);
  for (int l : a.labels) {
    if (l != kNoise) ++a.sizes[static_cast<std::size_t>(l)];
  }
}

}  // namespace

double euclidean(const FeatureVector& a, const FeatureVector& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::size_t ClusterAssignment::noise_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
}

ClusterAssignment mean_shift(const std::vector<FeatureVector>& points, const MeanShiftConfig& cfg) {
  check_points(points);
  if (!(cfg.bandwidth > 0) || cfg.max_iter < 1) fail(ErrorCode::kInvalidArgument, "mean_shift: bad config");
  const std::size_t n = points.size();
  const std::size_t d = points.front().size();
  const double tol = cfg.effective_tol();

  std::vector<FeatureVector> converged(n);
  for (std::size_t seed = 0; seed < n; ++seed) {
    FeatureVector x = points[seed];
    FeatureVector mean(d);
    for (int it = 0; it < cfg.max_iter; ++it) {
      std::fill(mean.begin(), mean.end(), 0.0);
      std::size_t count = 0;
      for (const auto& p : points) {
        if (euclidean(p, x) <= cfg.bandwidth) {
          for (std::size_t k = 0; k < d; ++k) mean[k] += p[k];
          ++count;
        }
      }
      if (count == 0) break;
      for (auto& v : mean) v /= static_cast<double>(count);
      const double step = euclidean(mean, x);
      x.swap(mean);
      if (step < tol) break;
    }
    converged[seed] = std::move(x);
  }

  ClusterAssignment out;
  const double merge = cfg.effective_merge_radius();
  for (std::size_t seed = 0; seed < n; ++seed) {
    bool absorbed = false;
    for (const auto& m : out.modes) {
      if (euclidean(m, converged[seed]) <= merge) {
        absorbed = true;
        break;
      }
    }
    if (!absorbed) out.modes.push_back(converged[seed]);
  }

  out.labels.assign(n, kNoise);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < out.modes.size(); ++m) {
      const double dist = euclidean(points[i], out.modes[m]);
      if (dist < best) {
        best = dist;
        out.labels[i] = static_cast<int>(m);
      }
    }
  }

  // drop modes that attracted no point, keeping creation order
  std::vector<std::size_t> counts(out.modes.size(), 0);
  for (int l : out.labels) ++counts[static_cast<std::size_t>(l)];
  std::vector<int> remap(out.modes.size(), kNoise);
  std::vector<FeatureVector> kept;
  for (std::size_t m = 0; m < out.modes.size(); ++m) {
    if (counts[m] == 0) continue;
    remap[m] = static_cast<int>(kept.size());
    kept.push_back(std::move(out.modes[m]));
  }
  out.modes = std::move(kept);
  for (auto& l : out.labels) l = remap[static_cast<std::size_t>(l)];
  out.sizes.assign(out.modes.size(), 0);
  recount(out);
  return out;
}

ClusterAssignment alpha_filter(const ClusterAssignment& assignment, std::size_t alpha) {
  std::vector<std::size_t> survivors;
  for (std::size_t c = 0; c < assignment.sizes.size(); ++c) {
    if (assignment.sizes[c] >= alpha) survivors.push_back(c);
  }
  std::stable_sort(survivors.begin(), survivors.end(),
                   [&](std::size_t a, std::size_t b) { return assignment.sizes[a] > assignment.sizes[b]; });
  std::vector<int> remap(assignment.sizes.size(), kNoise);
  ClusterAssignment out;
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    remap[survivors[i]] = static_cast<int>(i);
    out.sizes.push_back(assignment.sizes[survivors[i]]);
    if (survivors[i] < assignment.modes.size()) out.modes.push_back(assignment.modes[survivors[i]]);
  }
  out.labels.reserve(assignment.labels.size());
  for (int l : assignment.labels) out.labels.push_back(l == kNoise ? kNoise : remap[static_cast<std::size_t>(l)]);
  return out;
}

HdbscanConfig HdbscanConfig::defaults_for(std::size_t n) {
  HdbscanConfig cfg;
  cfg.min_cluster_size = std::max<std::size_t>(5, (n + 9) / 10);
  cfg.min_samples = cfg.min_cluster_size;
  return cfg;
}

namespace {

// One row of the condensed tree: `child` is either a point (< n) or a cluster
// id (>= n) leaving `parent` at distance `dist`.
struct CondensedEdge {
  std::size_t parent;
  std::size_t child;
  double dist;
  std::size_t size;
};

double lambda_of(double dist) { return 1.0 / std::max(dist, 1e-300); }

}  // namespace

ClusterAssignment hdbscan(const std::vector<FeatureVector>& points, const HdbscanConfig& cfg) {
  check_points(points);
  if (cfg.min_cluster_size < 2 || cfg.min_samples < 2) {
    fail(ErrorCode::kInvalidArgument, "hdbscan: min_cluster_size and min_samples must be >= 2");
  }
  const std::size_t n = points.size();
  if (n < cfg.min_cluster_size) {
    fail(ErrorCode::kTooFewPoints, "hdbscan: " + std::to_string(n) + " points, min_cluster_size " +
                                       std::to_string(cfg.min_cluster_size));
  }

  std::vector<double> dist(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) dist[i * n + j] = dist[j * n + i] = (i == j) ? 0.0 : euclidean(points[i], points[j]);
  }
  const std::size_t k = std::min(cfg.min_samples, n);
  std::vector<double> core(n);
  {
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(dist.begin() + static_cast<std::ptrdiff_t>(i * n), dist.begin() + static_cast<std::ptrdiff_t>((i + 1) * n),
                row.begin());
      std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k - 1), row.end());
      core[i] = row[k - 1];
    }
  }
  auto mreach = [&](std::size_t a, std::size_t b) { return std::max({core[a], core[b], dist[a * n + b]}); };

  // Prim's MST over the dense mutual-reachability graph
  struct Edge {
    std::size_t a, b;
    double w;
  };
  std::vector<Edge> mst;
  mst.reserve(n - 1);
  {
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> from(n, 0);
    std::size_t cur = 0;
    in_tree[0] = true;
    for (std::size_t step = 1; step < n; ++step) {
      std::size_t next = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (in_tree[j]) continue;
        const double w = mreach(cur, j);
        if (w < best[j]) {
          best[j] = w;
          from[j] = cur;
        }
        if (next == n || best[j] < best[next]) next = j;
      }
      in_tree[next] = true;
      mst.push_back({from[next], next, best[next]});
      cur = next;
    }
  }
  std::stable_sort(mst.begin(), mst.end(), [](const Edge& x, const Edge& y) { return x.w < y.w; });

  // single-linkage dendrogram: leaves 0..n-1, merges n..2n-2
  const std::size_t nodes = 2 * n - 1;
  std::vector<std::size_t> left(nodes, 0), right(nodes, 0), node_size(nodes, 1);
  std::vector<double> height(nodes, 0.0);
  {
    std::vector<std::size_t> uf(nodes);
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&](std::size_t a) {
      while (uf[a] != a) {
        uf[a] = uf[uf[a]];
        a = uf[a];
      }
      return a;
    };
    std::size_t next = n;
    for (const auto& e : mst) {
      const std::size_t ra = find(e.a);
      const std::size_t rb = find(e.b);
      left[next] = ra;
      right[next] = rb;
      height[next] = e.w;
      node_size[next] = node_size[ra] + node_size[rb];
      uf[ra] = uf[rb] = next;
      ++next;
    }
  }
  const std::size_t root = n == 1 ? 0 : nodes - 1;

  auto collect_leaves = [&](std::size_t node, std::vector<std::size_t>& out) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      if (x < n) {
        out.push_back(x);
      } else {
        stack.push_back(right[x]);
        stack.push_back(left[x]);
      }
    }
  };

  // condensed tree; cluster ids start at n, root cluster == n
  std::vector<CondensedEdge> condensed;
  std::size_t next_cluster = n + 1;
  {
    struct Work {
      std::size_t node;
      std::size_t cluster;
    };
    std::vector<Work> stack{{root, n}};
    std::vector<std::size_t> leaves;
    while (!stack.empty()) {
      const Work w = stack.back();
      stack.pop_back();
      if (w.node < n) {
        condensed.push_back({w.cluster, w.node, 0.0, 1});
        continue;
      }
      const double d = height[w.node];
      const std::size_t l = left[w.node];
      const std::size_t r = right[w.node];
      const bool big_l = node_size[l] >= cfg.min_cluster_size;
      const bool big_r = node_size[r] >= cfg.min_cluster_size;
      if (big_l && big_r) {
        const std::size_t cl = next_cluster++;
        const std::size_t cr = next_cluster++;
        condensed.push_back({w.cluster, cl, d, node_size[l]});
        condensed.push_back({w.cluster, cr, d, node_size[r]});
        stack.push_back({r, cr});
        stack.push_back({l, cl});
      } else {
        for (std::size_t side : {l, r}) {
          if (node_size[side] >= cfg.min_cluster_size) {
            stack.push_back({side, w.cluster});
          } else {
            leaves.clear();
            collect_leaves(side, leaves);
            for (auto p : leaves) condensed.push_back({w.cluster, p, d, 1});
          }
        }
      }
    }
  }

  const std::size_t cluster_slots = next_cluster - n;
  std::vector<double> birth(cluster_slots, 0.0);  // lambda at which the cluster appears
  std::vector<std::size_t> parent_of(cluster_slots, 0);
  std::vector<std::vector<std::size_t>> children(cluster_slots);
  for (const auto& e : condensed) {
    if (e.child >= n) {
      birth[e.child - n] = lambda_of(e.dist);
      parent_of[e.child - n] = e.parent - n;
      children[e.parent - n].push_back(e.child - n);
    }
  }
  std::vector<double> stability(cluster_slots, 0.0);
  for (const auto& e : condensed) {
    const std::size_t c = e.parent - n;
    stability[c] += (lambda_of(e.dist) - birth[c]) * static_cast<double>(e.size);
  }

  // excess of mass: children were created after parents, so walk ids downward
  std::vector<bool> selected(cluster_slots, false);
  std::vector<double> subtree(cluster_slots, 0.0);
  for (std::size_t c = cluster_slots; c-- > 0;) {
    if (children[c].empty()) {
      selected[c] = true;
      subtree[c] = stability[c];
      continue;
    }
    double child_sum = 0;
    for (auto ch : children[c]) child_sum += subtree[ch];
    if (stability[c] >= child_sum) {
      selected[c] = true;
      subtree[c] = stability[c];
      std::vector<std::size_t> stack(children[c]);
      while (!stack.empty()) {
        const std::size_t x = stack.back();
        stack.pop_back();
        selected[x] = false;
        stack.insert(stack.end(), children[x].begin(), children[x].end());
      }
    } else {
      subtree[c] = child_sum;
    }
  }

  std::vector<int> cluster_label(cluster_slots, kNoise);
  ClusterAssignment out;
  for (std::size_t c = 0; c < cluster_slots; ++c) {
    if (selected[c]) cluster_label[c] = static_cast<int>(out.sizes.size()), out.sizes.push_back(0);
  }

  out.labels.assign(n, kNoise);
  std::vector<double> exit_dist(n, 0.0);
  for (const auto& e : condensed) {
    if (e.child >= n) continue;
    exit_dist[e.child] = e.dist;
    // nearest selected ancestor-or-self of the cluster the point fell out of
    std::size_t c = e.parent - n;
    while (true) {
      if (selected[c]) {
        out.labels[e.child] = cluster_label[c];
        break;
      }
      if (c == 0) break;
      c = parent_of[c];
    }
  }

  if (cfg.outlier_factor > 0) {
    std::vector<std::vector<double>> exits(out.sizes.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (out.labels[i] != kNoise) exits[static_cast<std::size_t>(out.labels[i])].push_back(exit_dist[i]);
    }
    // reference scale: upper quartile of the members' exit distances
    std::vector<double> reference(exits.size(), 0.0);
    for (std::size_t c = 0; c < exits.size(); ++c) {
      auto& v = exits[c];
      if (v.empty()) continue;
      std::sort(v.begin(), v.end());
      const double pos = 0.75 * static_cast<double>(v.size() - 1);
      const auto lo = static_cast<std::size_t>(pos);
      const std::size_t hi = std::min(lo + 1, v.size() - 1);
      reference[c] = v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (out.labels[i] == kNoise) continue;
      if (exit_dist[i] > cfg.outlier_factor * reference[static_cast<std::size_t>(out.labels[i])]) out.labels[i] = kNoise;
    }
  }

  // drop clusters emptied by the outlier pass and compute centroids
  recount(out);
  std::vector<int> remap(out.sizes.size(), kNoise);
  std::vector<std::size_t> sizes;
  for (std::size_t c = 0; c < out.sizes.size(); ++c) {
    if (out.sizes[c] == 0) continue;
    remap[c] = static_cast<int>(sizes.size());
    sizes.push_back(out.sizes[c]);
  }
  for (auto& l : out.labels) {
    if (l != kNoise) l = remap[static_cast<std::size_t>(l)];
  }
  out.sizes = sizes;
  const std::size_t dim = points.front().size();
  out.modes.assign(sizes.size(), FeatureVector(dim, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] == kNoise) continue;
    auto& m = out.modes[static_cast<std::size_t>(out.labels[i])];
    for (std::size_t k2 = 0; k2 < dim; ++k2) m[k2] += points[i][k2];
  }
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    for (auto& v : out.modes[c]) v /= static_cast<double>(sizes[c]);
  }
  return out;
}

std::vector<std::size_t> largest_cluster_filter(const ClusterAssignment& assignment) {
  if (assignment.sizes.empty()) fail(ErrorCode::kAllNoise, "no non-noise cluster");
  std::size_t best = 0;
  for (std::size_t c = 1; c < assignment.sizes.size(); ++c) {
    if (assignment.sizes[c] > assignment.sizes[best]) best = c;
  }
  if (assignment.sizes[best] == 0) fail(ErrorCode::kAllNoise, "no non-noise cluster");
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < assignment.labels.size(); ++i) {
    if (assignment.labels[i] == static_cast<int>(best)) members.push_back(i);
  }
  return members;
}

}  // namespace csad
