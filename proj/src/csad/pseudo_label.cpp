#include "csad/pseudo_label.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

#include "csad/histogram_scoring.hpp"
#include "csad/mask_ops.hpp"
#include "csad/parallel.hpp"

namespace csad {

MaskSet refine_masks(const MaskSet& raw, const BinaryMask* grounding, const LabelGenConfig& cfg) {
  MaskSet masks;
  for (const auto& m : raw) {
    if (m.area() > 0) masks.push_back(m);
  }
  if (cfg.mode == LabelMode::kCoarseGrained || masks.empty()) return masks;
  if (grounding != nullptr && cfg.use_grounding) {
    masks = filter_by_grounding(*grounding, masks);
    if (masks.empty()) return masks;
  }
  return filter_by_combine(masks);
}

LabelGenResult generate_labels(const std::vector<Image>& images, const std::vector<MaskSet>& refined_masks,
                               const LabelGenConfig& cfg, const FeatureFunction& feature,
                               const ExternalDescriptors* external, const std::vector<std::string>* image_ids) {
  if (images.size() != refined_masks.size()) fail(ErrorCode::kDimMismatch, "one mask set per image required");
  if (images.empty()) fail(ErrorCode::kEmptyInput, "generate_labels: no images");
  if (external != nullptr && (image_ids == nullptr || image_ids->size() != images.size())) {
    fail(ErrorCode::kInvalidArgument, "external descriptors need image ids");
  }

  LabelGenResult result;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (refined_masks[i].empty()) fail(ErrorCode::kEmptySet, "image " + std::to_string(i) + " has no masks");
    for (std::size_t m = 0; m < refined_masks[i].size(); ++m) result.component_source.emplace_back(i, m);
  }

  result.descriptors.resize(result.component_source.size());
  parallel_for(result.component_source.size(), cfg.jobs, [&](std::size_t c) {
    const auto [img, m] = result.component_source[c];
    if (external != nullptr) {
      auto it = external->find({(*image_ids)[img], m});
      if (it == external->end()) {
        fail(ErrorCode::kMissingInput, "no external descriptor for " + (*image_ids)[img] + " mask " + std::to_string(m));
      }
      result.descriptors[c] = it->second;
    } else {
      result.descriptors[c] = rotation_invariant_descriptor(images[img], refined_masks[img][m], feature, cfg.rotations);
    }
  });
  for (const auto& d : result.descriptors) {
    if (d.size() != result.descriptors.front().size()) fail(ErrorCode::kFeatureDimMismatch, "descriptor dims differ");
  }

  const std::size_t alpha = cfg.alpha > 0 ? cfg.alpha : (images.size() + 1) / 2;
  result.clusters = alpha_filter(mean_shift(result.descriptors, cfg.meanshift), alpha);
  if (result.clusters.cluster_count() == 0) {
    fail(ErrorCode::kNoSurvivingClusters, "no cluster has at least " + std::to_string(alpha) + " members");
  }
  if (result.clusters.cluster_count() > 255) fail(ErrorCode::kTooManyClasses, "more than 255 component classes");
  result.n_cls = static_cast<int>(result.clusters.cluster_count());

  result.maps.resize(images.size());
  std::size_t c = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    LabelMap map(images[i].width, images[i].height);
    struct Paint {
      std::size_t area;
      std::size_t mask;
      int label;
    };
    std::vector<Paint> paints;
    for (std::size_t m = 0; m < refined_masks[i].size(); ++m, ++c) {
      const int label = result.clusters.labels[c];
      if (label == kNoise) continue;
      paints.push_back({refined_masks[i][m].area(), m, label});
    }
    // larger first so smaller components end up on top
    std::stable_sort(paints.begin(), paints.end(), [](const Paint& a, const Paint& b) { return a.area > b.area; });
    for (const auto& p : paints) {
      const BinaryMask& src = refined_masks[i][p.mask];
      const BinaryMask filled = cfg.fill_holes ? fill_holes(src) : src;
      for (std::size_t px = 0; px < filled.bits.size(); ++px) {
        if (filled.bits[px]) map.pixels[px] = static_cast<std::uint16_t>(p.label + 1);
      }
    }
    result.maps[i] = std::move(map);
  }
  return result;
}

DatasetSplit filter_label_maps(const std::vector<LabelMap>& maps, int n_cls, const std::optional<HdbscanConfig>& cfg) {
  DatasetSplit split;
  split.n_cls = n_cls;
  std::vector<FeatureVector> hists;
  hists.reserve(maps.size());
  for (const auto& m : maps) hists.push_back(class_histogram(m, n_cls));

  auto all_labeled = [&](const std::string& why) {
    std::cerr << "warning: label-map filtering fell back to all-labeled: " << why << "\n";
    split.labeled.resize(maps.size());
    std::iota(split.labeled.begin(), split.labeled.end(), 0);
    split.unlabeled.clear();
    split.fallback = true;
  };

  const HdbscanConfig hc = cfg.value_or(HdbscanConfig::defaults_for(maps.size()));
  if (maps.size() < hc.min_cluster_size) {
    all_labeled(std::to_string(maps.size()) + " maps < min_cluster_size " + std::to_string(hc.min_cluster_size));
    return split;
  }
  const auto assignment = hdbscan(hists, hc);
  if (assignment.cluster_count() == 0) {
    all_labeled("every histogram was labeled noise");
    return split;
  }
  split.labeled = largest_cluster_filter(assignment);
  std::vector<bool> is_labeled(maps.size(), false);
  for (auto i : split.labeled) is_labeled[i] = true;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (!is_labeled[i]) split.unlabeled.push_back(i);
  }
  return split;
}

LsaResult lsa_augment(const Image& image, const LabelMap& map, const Image& source_image, const LabelMap& source_map,
                      const LsaConfig& cfg, std::uint64_t seed) {
  if (image.width != map.width || image.height != map.height || source_image.width != source_map.width ||
      source_image.height != source_map.height) {
    fail(ErrorCode::kDimMismatch, "lsa_augment: image and label map sizes differ");
  }
  if (!(cfg.min_displacement > 0 && cfg.min_displacement < 1)) {
    fail(ErrorCode::kInvalidArgument, "min_displacement must be in (0, 1)");
  }
  const auto comps = all_components(source_map);
  if (comps.empty()) fail(ErrorCode::kNoComponent, "source label map has no components");

  std::mt19937_64 rng(seed);
  LsaResult out{image, map, BinaryMask(map.width, map.height), {}, {}};
  const double min_disp = cfg.min_displacement * std::max(map.width, map.height);

  for (int n = 0; n < cfg.components_per_image; ++n) {
    const auto& comp = comps[std::uniform_int_distribution<std::size_t>(0, comps.size() - 1)(rng)];
    int bx0 = comp.mask.width, by0 = comp.mask.height, bx1 = -1, by1 = -1;
    for (int y = 0; y < comp.mask.height; ++y) {
      for (int x = 0; x < comp.mask.width; ++x) {
        if (!comp.mask.at(x, y)) continue;
        bx0 = std::min(bx0, x);
        bx1 = std::max(bx1, x);
        by0 = std::min(by0, y);
        by1 = std::max(by1, y);
      }
    }
    // translations that keep the component inside the target image
    const int dx_lo = -bx0, dx_hi = map.width - 1 - bx1;
    const int dy_lo = -by0, dy_hi = map.height - 1 - by1;
    if (dx_lo > dx_hi || dy_lo > dy_hi) fail(ErrorCode::kNoValidPlacement, "component larger than target image");
    std::uniform_int_distribution<int> pick_dx(dx_lo, dx_hi);
    std::uniform_int_distribution<int> pick_dy(dy_lo, dy_hi);
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
      const int dx = pick_dx(rng);
      const int dy = pick_dy(rng);
      const double disp = std::hypot(dx, dy);
      if (disp < min_disp) continue;
      for (int y = by0; y <= by1; ++y) {
        for (int x = bx0; x <= bx1; ++x) {
          if (!comp.mask.at(x, y)) continue;
          const int tx = x + dx;
          const int ty = y + dy;
          std::copy_n(source_image.at(x, y), 3, out.image.at(tx, ty));
          out.map.at(tx, ty) = comp.cls;
          out.pasted.at(tx, ty) = 1;
        }
      }
      out.classes.push_back(comp.cls);
      out.displacement.push_back(disp);
      placed = true;
    }
    if (!placed) {
      fail(ErrorCode::kNoValidPlacement, "no placement at least " + std::to_string(min_disp) + " px away after " +
                                             std::to_string(cfg.max_attempts) + " attempts");
    }
  }
  return out;
}

}  // namespace csad
