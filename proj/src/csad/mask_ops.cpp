#include "csad/mask_ops.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace csad {

namespace {

// 64 pixels per word; the filters below only need popcounts of and/or.
struct PackedMask {
  std::vector<std::uint64_t> words;
  std::size_t count = 0;

  explicit PackedMask(std::size_t pixels) : words((pixels + 63) / 64, 0) {}

  explicit PackedMask(const BinaryMask& m) : PackedMask(m.pixel_count()) {
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
      if (m.bits[i]) words[i >> 6] |= std::uint64_t{1} << (i & 63);
    }
    count = popcount_all();
  }

  std::size_t popcount_all() const {
    std::size_t n = 0;
    for (auto w : words) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  std::size_t intersection(const PackedMask& o) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < words.size(); ++i) n += static_cast<std::size_t>(std::popcount(words[i] & o.words[i]));
    return n;
  }

  void unite(const PackedMask& o) {
    for (std::size_t i = 0; i < words.size(); ++i) words[i] |= o.words[i];
    count = popcount_all();
  }
};

double packed_intersect_ratio(const PackedMask& a, const PackedMask& b) {
  const std::size_t inter = a.intersection(b);
  if (inter == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(std::min(a.count, b.count));
}

void require_same_shape(const MaskSet& masks, const BinaryMask& ref) {
  for (const auto& m : masks) {
    if (!m.same_shape(ref)) fail(ErrorCode::kDimMismatch, "mask dimensions disagree");
  }
}

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

double intersect_ratio(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) fail(ErrorCode::kDimMismatch, "intersect_ratio: mask dimensions disagree");
  return packed_intersect_ratio(PackedMask(a), PackedMask(b));
}

std::vector<std::size_t> filter_by_grounding_indices(const BinaryMask& grounding, const MaskSet& masks) {
  require_same_shape(masks, grounding);
  const PackedMask g(grounding);
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const PackedMask m(masks[i]);
    if (m.count == 0) continue;
    const double ratio = static_cast<double>(g.intersection(m)) / static_cast<double>(m.count);
    if (ratio > kMaskOverlapThreshold) kept.push_back(i);
  }
  return kept;
}

MaskSet filter_by_grounding(const BinaryMask& grounding, const MaskSet& masks) {
  MaskSet out;
  for (auto i : filter_by_grounding_indices(grounding, masks)) out.push_back(masks[i]);
  return out;
}

std::vector<std::size_t> filter_by_combine_indices(const MaskSet& masks) {
  if (masks.empty()) fail(ErrorCode::kEmptySet, "filter_by_combine: no masks");
  require_same_shape(masks, masks.front());

  std::vector<PackedMask> packed;
  std::vector<std::size_t> order;
  packed.reserve(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    packed.emplace_back(masks[i]);
    if (packed.back().count > 0) order.push_back(i);
  }
  if (order.empty()) fail(ErrorCode::kEmptySet, "filter_by_combine: all masks are empty");
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return packed[a].count < packed[b].count; });

  PackedMask combined(masks.front().pixel_count());
  std::vector<std::size_t> result;
  std::vector<std::size_t> deferred;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const auto& m = packed[order[pos]];
    if (packed_intersect_ratio(combined, m) < kMaskOverlapThreshold || pos == 0) {
      combined.unite(m);
      result.push_back(order[pos]);
    } else {
      deferred.push_back(order[pos]);
    }
  }
  // second chance: coverage by the union accumulated so far, which keeps growing
  for (auto idx : deferred) {
    const auto& m = packed[idx];
    const double ratio = static_cast<double>(combined.intersection(m)) / static_cast<double>(m.count);
    if (ratio < kMaskOverlapThreshold) {
      combined.unite(m);
      result.push_back(idx);
    }
  }
  return result;
}

MaskSet filter_by_combine(const MaskSet& masks) {
  MaskSet out;
  for (auto i : filter_by_combine_indices(masks)) out.push_back(masks[i]);
  return out;
}

MaskSet connected_components(const LabelMap& map, std::uint16_t cls) {
  const int w = map.width;
  const int h = map.height;
  std::vector<int> parent;
  std::vector<int> label(map.pixel_count(), -1);
  auto find = [&](int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  // first pass: provisional labels from the already-visited 8-neighbourhood
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (map.at(x, y) != cls) continue;
      int current = -1;
      const int nbrs[4][2] = {{-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
      for (const auto& d : nbrs) {
        const int nx = x + d[0];
        const int ny = y + d[1];
        if (nx < 0 || ny < 0 || nx >= w) continue;
        const int l = label[static_cast<std::size_t>(ny) * w + nx];
        if (l < 0) continue;
        if (current < 0) {
          current = l;
        } else {
          unite(current, l);
        }
      }
      if (current < 0) {
        current = static_cast<int>(parent.size());
        parent.push_back(current);
      }
      label[static_cast<std::size_t>(y) * w + x] = current;
    }
  }
  if (parent.empty()) fail(ErrorCode::kClassAbsent, "class " + std::to_string(cls) + " absent from label map");

  std::vector<int> slot(parent.size(), -1);
  MaskSet comps;
  std::vector<std::size_t> first_pixel;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] < 0) continue;
    const int root = find(label[i]);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(comps.size());
      comps.emplace_back(w, h);
      first_pixel.push_back(i);
    }
    comps[slot[root]].bits[i] = 1;
  }

  std::vector<std::size_t> areas(comps.size());
  for (std::size_t i = 0; i < comps.size(); ++i) areas[i] = comps[i].area();
  std::vector<std::size_t> idx(comps.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (areas[a] != areas[b]) return areas[a] > areas[b];
    return first_pixel[a] < first_pixel[b];
  });
  MaskSet out;
  out.reserve(comps.size());
  for (auto i : idx) out.push_back(std::move(comps[i]));
  return out;
}

std::vector<LabeledComponent> all_components(const LabelMap& map) {
  std::vector<bool> present(65536, false);
  for (auto v : map.pixels) present[v] = true;
  std::vector<LabeledComponent> out;
  for (std::size_t c = 1; c < present.size(); ++c) {
    if (!present[c]) continue;
    for (auto& m : connected_components(map, static_cast<std::uint16_t>(c))) {
      out.push_back({static_cast<std::uint16_t>(c), std::move(m)});
    }
  }
  return out;
}

BinaryMask fill_holes(const BinaryMask& mask) {
  const int w = mask.width;
  const int h = mask.height;
  std::vector<std::uint8_t> outside(mask.pixel_count(), 0);
  std::vector<std::size_t> stack;
  auto seed = [&](int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    if (!mask.bits[i] && !outside[i]) {
      outside[i] = 1;
      stack.push_back(i);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(i % w);
    const int y = static_cast<int>(i / w);
    if (x > 0) seed(x - 1, y);
    if (x + 1 < w) seed(x + 1, y);
    if (y > 0) seed(x, y - 1);
    if (y + 1 < h) seed(x, y + 1);
  }
  BinaryMask out(w, h);
  for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] = outside[i] ? 0 : 1;
  return out;
}

std::vector<Point2> mask_hull(const BinaryMask& mask) {
  // only the extreme pixels of each row can contribute hull vertices
  std::vector<Point2> pts;
  for (int y = 0; y < mask.height; ++y) {
    int lo = -1;
    int hi = -1;
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y)) {
        if (lo < 0) lo = x;
        hi = x;
      }
    }
    if (lo < 0) continue;
    pts.push_back({static_cast<double>(lo), static_cast<double>(y)});
    pts.push_back({static_cast<double>(lo), static_cast<double>(y + 1)});
    pts.push_back({static_cast<double>(hi + 1), static_cast<double>(y)});
    pts.push_back({static_cast<double>(hi + 1), static_cast<double>(y + 1)});
  }
  if (pts.empty()) fail(ErrorCode::kEmptyMask, "mask_hull: empty mask");

  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
              return a.x == b.x && a.y == b.y;
            }),
            pts.end());
  if (pts.size() < 3) return pts;

  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

double RotatedRect::diagonal() const { return std::hypot(width, height); }

RotatedRect min_area_rect(const std::vector<Point2>& hull) {
  const std::size_t n = hull.size();
  if (n == 0) fail(ErrorCode::kEmptyMask, "min_area_rect: no points");
  if (n < 3) {
    // degenerate: a point or a segment
    const Point2& a = hull.front();
    const Point2& b = hull.back();
    RotatedRect r;
    r.cx = (a.x + b.x) / 2;
    r.cy = (a.y + b.y) / 2;
    r.width = std::hypot(b.x - a.x, b.y - a.y);
    double ang = std::atan2(b.y - a.y, b.x - a.x) * 180.0 / std::numbers::pi;
    ang = std::fmod(ang + 360.0, 90.0);
    r.angle_deg = ang;
    return r;
  }

  auto dot = [](const Point2& p, double ux, double uy) { return p.x * ux + p.y * uy; };
  auto next = [n](std::size_t i) { return (i + 1) % n; };

  // Andrew's chain gives counter-clockwise order in a y-up frame; with edge
  // direction u the interior lies on the side of normal v = (-uy, ux).
  std::size_t far_u = 0, far_v = 0, near_u = 0;
  double best_area = std::numeric_limits<double>::infinity();
  RotatedRect best;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = hull[i];
    const Point2& q = hull[next(i)];
    const double len = std::hypot(q.x - p.x, q.y - p.y);
    if (len == 0) continue;
    const double ux = (q.x - p.x) / len;
    const double uy = (q.y - p.y) / len;
    const double vx = -uy;
    const double vy = ux;
    if (i == 0) {
      for (std::size_t j = 0; j < n; ++j) {
        if (dot(hull[j], ux, uy) > dot(hull[far_u], ux, uy)) far_u = j;
        if (dot(hull[j], vx, vy) > dot(hull[far_v], vx, vy)) far_v = j;
        if (dot(hull[j], ux, uy) < dot(hull[near_u], ux, uy)) near_u = j;
      }
    } else {
      // each extreme only moves forward as the edge direction turns
      auto advance = [&](std::size_t& ptr, double ax, double ay, double sign) {
        for (std::size_t guard = 0; guard < n; ++guard) {
          if (sign * dot(hull[next(ptr)], ax, ay) < sign * dot(hull[ptr], ax, ay)) break;
          ptr = next(ptr);
        }
      };
      advance(far_u, ux, uy, 1.0);
      advance(far_v, vx, vy, 1.0);
      advance(near_u, ux, uy, -1.0);
    }
    const double base_v = dot(p, vx, vy);
    const double min_u = dot(hull[near_u], ux, uy);
    const double max_u = dot(hull[far_u], ux, uy);
    const double max_v = dot(hull[far_v], vx, vy);
    const double width = max_u - min_u;
    const double height = std::abs(max_v - base_v);
    const double area = width * height;
    if (area < best_area - 1e-9) {
      best_area = area;
      const double mid_u = (min_u + max_u) / 2;
      const double mid_v = (base_v + max_v) / 2;
      best.cx = mid_u * ux + mid_v * vx;
      best.cy = mid_u * uy + mid_v * vy;
      best.width = width;
      best.height = height;
      best.angle_deg = std::atan2(uy, ux) * 180.0 / std::numbers::pi;
    }
  }
  // fold orientation into [0, 90), swapping sides on odd quarter turns
  double ang = best.angle_deg;
  const double quarters = std::floor(ang / 90.0);
  ang -= quarters * 90.0;
  if (ang >= 90.0 - 1e-12) ang = 0.0;
  if (static_cast<long long>(quarters) % 2 != 0) std::swap(best.width, best.height);
  best.angle_deg = ang;
  return best;
}

RotatedRect min_area_rect(const BinaryMask& mask) { return min_area_rect(mask_hull(mask)); }

std::size_t ComponentCrop::component_pixels() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

ComponentCrop normalize_crop(const Image& image, const BinaryMask& mask, double angle_deg, std::size_t source_mask_id) {
  if (image.width != mask.width || image.height != mask.height) {
    fail(ErrorCode::kDimMismatch, "normalize_crop: image and mask dimensions disagree");
  }
  const auto hull = mask_hull(mask);
  ComponentCrop crop;
  crop.rect = min_area_rect(hull);
  crop.source_mask_id = source_mask_id;
  crop.angle_deg = angle_deg;
  constexpr int S = ComponentCrop::kSize;
  crop.rgb.assign(static_cast<std::size_t>(S) * S * 3, 0.0f);
  crop.mask.assign(static_cast<std::size_t>(S) * S, 0);

  const double diag = std::max(crop.rect.diagonal(), 1e-9);
  const double inv_scale = diag / (S * std::numbers::sqrt2);
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);

  auto in_mask = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < mask.width && y < mask.height && mask.at(x, y) != 0;
  };

  for (int v = 0; v < S; ++v) {
    for (int u = 0; u < S; ++u) {
      const double du = (u + 0.5 - S / 2.0) * inv_scale;
      const double dv = (v + 0.5 - S / 2.0) * inv_scale;
      // inverse rotation maps patch offsets back into the source frame
      const double sx = crop.rect.cx + c * du + s * dv;
      const double sy = crop.rect.cy - s * du + c * dv;
      const int nx = static_cast<int>(std::floor(sx));
      const int ny = static_cast<int>(std::floor(sy));
      if (!in_mask(nx, ny)) continue;
      const std::size_t o = static_cast<std::size_t>(v) * S + u;
      crop.mask[o] = 1;

      const double fx = sx - 0.5;
      const double fy = sy - 0.5;
      const int x0 = static_cast<int>(std::floor(fx));
      const int y0 = static_cast<int>(std::floor(fy));
      const double ax = fx - x0;
      const double ay = fy - y0;
      double acc[3] = {0, 0, 0};
      double wsum = 0;
      const int xs[2] = {x0, x0 + 1};
      const int ys[2] = {y0, y0 + 1};
      const double wx[2] = {1 - ax, ax};
      const double wy[2] = {1 - ay, ay};
      for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
          if (!in_mask(xs[i], ys[j])) continue;
          const double wgt = wx[i] * wy[j];
          const std::uint8_t* px = image.at(xs[i], ys[j]);
          for (int ch = 0; ch < 3; ++ch) acc[ch] += wgt * px[ch];
          wsum += wgt;
        }
      }
      if (wsum <= 0) {
        const std::uint8_t* px = image.at(nx, ny);
        for (int ch = 0; ch < 3; ++ch) acc[ch] = px[ch];
        wsum = 1;
      }
      for (int ch = 0; ch < 3; ++ch) crop.rgb[o * 3 + ch] = static_cast<float>(acc[ch] / wsum / 255.0);
    }
  }
  return crop;
}

}  // namespace csad
