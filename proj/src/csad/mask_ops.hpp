#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "csad/image.hpp"

namespace csad {

inline constexpr double kMaskOverlapThreshold = 0.9;

// |a & b| / min(|a|, |b|), or 0 when the intersection is empty.
double intersect_ratio(const BinaryMask& a, const BinaryMask& b);

// Indices of masks kept by filter-by-grounding: |m & grounding| / |m| > 0.9.
// Empty masks are never kept. Output follows input order.
std::vector<std::size_t> filter_by_grounding_indices(const BinaryMask& grounding, const MaskSet& masks);
MaskSet filter_by_grounding(const BinaryMask& grounding, const MaskSet& masks);

// Indices of masks kept by filter-by-combine, in output order: the area-ascending
// greedy pass (stable on ties) followed by the second-chance pass over deferred masks.
// Empty masks are dropped first. Throws EmptySet if nothing nonempty remains.
std::vector<std::size_t> filter_by_combine_indices(const MaskSet& masks);
MaskSet filter_by_combine(const MaskSet& masks);

// 8-connected components of {pixel == cls}, area-descending (ties: raster order of
// the first pixel). Throws ClassAbsent if the class does not occur.
MaskSet connected_components(const LabelMap& map, std::uint16_t cls);

struct LabeledComponent {
  std::uint16_t cls = 0;
  BinaryMask mask;
};
// Components of every nonbackground class, ordered by class then area.
std::vector<LabeledComponent> all_components(const LabelMap& map);

// Fills background regions of the mask not 4-connected to the image border.
BinaryMask fill_holes(const BinaryMask& mask);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Convex hull (counter-clockwise in x-right/y-down coordinates as returned by
// Andrew's monotone chain) of the mask's pixel squares, using pixel corners.
std::vector<Point2> mask_hull(const BinaryMask& mask);

struct RotatedRect {
  double cx = 0.0;
  double cy = 0.0;
  double width = 0.0;   // extent along the angle direction
  double height = 0.0;  // extent perpendicular to it
  double angle_deg = 0.0;  // in [0, 90)

  double area() const { return width * height; }
  double diagonal() const;
};

// Minimum-area enclosing rectangle of the hull points via rotating calipers.
RotatedRect min_area_rect(const std::vector<Point2>& hull);
RotatedRect min_area_rect(const BinaryMask& mask);

struct ComponentCrop {
  static constexpr int kSize = 64;
  std::vector<float> rgb;         // kSize*kSize*3, values in [0,1], zero outside component
  std::vector<std::uint8_t> mask; // kSize*kSize, 1 inside component
  std::size_t source_mask_id = 0;
  double angle_deg = 0.0;
  RotatedRect rect;

  std::size_t component_pixels() const;
};

// Crops the component around its minimum-area rectangle, scaled so the rectangle
// diagonal spans the patch diagonal and rotated by angle_deg about the rectangle
// center. Image samples are bilinear over component pixels only; the mask is
// resampled nearest-neighbor. Throws EmptyMask.
ComponentCrop normalize_crop(const Image& image, const BinaryMask& mask, double angle_deg,
                             std::size_t source_mask_id = 0);

}  // namespace csad
