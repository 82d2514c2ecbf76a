#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace oracle {

namespace {

double count_nonzero(const Bitmap& m) {
  double n = 0;
  for (auto v : m) n += v != 0;
  return n;
}

double count_and(const Bitmap& a, const Bitmap& b) {
  double n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += (a[i] != 0 && b[i] != 0);
  return n;
}

// def intersect_ratio(mask1,mask2)
double intersect_ratio(const Bitmap& mask1, const Bitmap& mask2) {
  const double intersection = count_and(mask1, mask2);
  if (intersection == 0) return 0;
  double ratio = intersection / std::min(count_nonzero(mask1), count_nonzero(mask2));
  if (std::isnan(ratio)) ratio = 0;
  return ratio;
}

}  // namespace

std::vector<std::size_t> filter_by_grounding(const Bitmap& grounding, const std::vector<Bitmap>& masks) {
  std::vector<std::size_t> new_mask;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (count_and(grounding, masks[i]) / count_nonzero(masks[i]) > 0.9) new_mask.push_back(i);
  }
  return new_mask;
}

std::vector<std::size_t> filter_by_combine(const std::vector<Bitmap>& input) {
  // masks = sorted(masks, key=lambda x: np.sum(x))
  std::vector<std::size_t> masks(input.size());
  std::iota(masks.begin(), masks.end(), 0);
  std::stable_sort(masks.begin(), masks.end(),
                   [&](std::size_t a, std::size_t b) { return count_nonzero(input[a]) < count_nonzero(input[b]); });
  Bitmap combine_masks(input.front().size(), 0);
  std::vector<std::size_t> result_masks;
  std::vector<std::size_t> wait_masks;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const Bitmap& mask = input[masks[i]];
    if (intersect_ratio(combine_masks, mask) < 0.9 || i == 0) {
      for (std::size_t p = 0; p < mask.size(); ++p) combine_masks[p] = combine_masks[p] || mask[p];
      result_masks.push_back(masks[i]);
    } else {
      wait_masks.push_back(masks[i]);
    }
  }
  for (std::size_t w : wait_masks) {
    const Bitmap& mask = input[w];
    const double ratio = count_and(combine_masks, mask) / count_nonzero(mask);
    if (ratio < 0.9) {
      for (std::size_t p = 0; p < mask.size(); ++p) combine_masks[p] = combine_masks[p] || mask[p];
      result_masks.push_back(w);
    }
  }
  return result_masks;
}

std::vector<double> class_histogram(const std::vector<std::uint16_t>& pixels, int n_cls) {
  std::vector<double> h;
  for (int k = 1; k <= n_cls; ++k) {
    std::size_t count = 0;
    for (auto p : pixels) {
      if (p == k) ++count;
    }
    h.push_back(static_cast<double>(count) / static_cast<double>(pixels.size()));
  }
  return h;
}

double mean_abs_difference(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

std::vector<std::vector<double>> invert(std::vector<std::vector<double>> m) {
  const std::size_t n = m.size();
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
    }
    if (m[pivot][col] == 0.0) throw std::runtime_error("singular matrix");
    std::swap(m[col], m[pivot]);
    std::swap(inv[col], inv[pivot]);
    const double d = m[col][col];
    for (std::size_t c = 0; c < n; ++c) {
      m[col][c] /= d;
      inv[col][c] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m[r][col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        m[r][c] -= f * m[col][c];
        inv[r][c] -= f * inv[col][c];
      }
    }
  }
  return inv;
}

double mahalanobis(const std::vector<double>& mean, const std::vector<std::vector<double>>& cov,
                   const std::vector<double>& h) {
  const auto inv = invert(cov);
  const std::size_t n = mean.size();
  double q = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) q += (h[i] - mean[i]) * inv[i][j] * (h[j] - mean[j]);
  }
  return std::sqrt(std::max(q, 0.0));
}

std::vector<std::vector<std::size_t>> flood_fill(const std::vector<std::uint16_t>& pixels, int width, int height,
                                                 std::uint16_t cls) {
  std::vector<int> seen(pixels.size(), 0);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < pixels.size(); ++start) {
    if (pixels[start] != cls || seen[start]) continue;
    std::vector<std::size_t> comp;
    std::deque<std::size_t> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      comp.push_back(p);
      const int x = static_cast<int>(p % width), y = static_cast<int>(p / width);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
          const std::size_t q = static_cast<std::size_t>(ny) * width + nx;
          if (pixels[q] == cls && !seen[q]) {
            seen[q] = 1;
            queue.push_back(q);
          }
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

double auroc_pairs(const std::vector<double>& normal, const std::vector<double>& anomalous) {
  double wins = 0;
  for (double a : anomalous) {
    for (double n : normal) wins += a > n ? 1.0 : (a == n ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(normal.size()) * static_cast<double>(anomalous.size()));
}

double kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
  double concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double s = (a[i] - a[j]) * (b[i] - b[j]);
      if (s > 0) concordant += 1;
      if (s < 0) discordant += 1;
    }
  }
  const double pairs = static_cast<double>(a.size()) * static_cast<double>(a.size() - 1) / 2;
  return (concordant - discordant) / pairs;
}

Trimmed trimmed(std::vector<double> v, double low, double high) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  const auto lo = static_cast<std::size_t>(std::floor(low * n));
  const auto hi = static_cast<std::size_t>(std::ceil(high * n));
  std::vector<double> kept(v.begin() + static_cast<std::ptrdiff_t>(lo), v.begin() + static_cast<std::ptrdiff_t>(hi));
  double mean = 0;
  for (double x : kept) mean += x;
  mean /= static_cast<double>(kept.size());
  double var = 0;
  for (double x : kept) var += (x - mean) * (x - mean);
  var /= static_cast<double>(kept.size());
  return {mean, std::max(std::sqrt(var), 1e-12)};
}

}  // namespace oracle
