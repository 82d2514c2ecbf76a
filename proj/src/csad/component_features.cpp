#include "csad/component_features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "csad/tensor_io.hpp"

namespace csad {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::array<double, 7> hu_moments(const std::vector<std::uint8_t>& bits, int width, int height) {
  double m00 = 0, m10 = 0, m01 = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!bits[static_cast<std::size_t>(y) * width + x]) continue;
      m00 += 1;
      m10 += x + 0.5;
      m01 += y + 0.5;
    }
  }
  std::array<double, 7> hu{};
  if (m00 == 0) return hu;
  const double xc = m10 / m00;
  const double yc = m01 / m00;
  double mu20 = 0, mu02 = 0, mu11 = 0, mu30 = 0, mu03 = 0, mu21 = 0, mu12 = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!bits[static_cast<std::size_t>(y) * width + x]) continue;
      const double dx = x + 0.5 - xc;
      const double dy = y + 0.5 - yc;
      mu20 += dx * dx;
      mu02 += dy * dy;
      mu11 += dx * dy;
      mu30 += dx * dx * dx;
      mu03 += dy * dy * dy;
      mu21 += dx * dx * dy;
      mu12 += dx * dy * dy;
    }
  }
  // eta_pq = mu_pq / m00^(1 + (p+q)/2)
  const double n2 = m00 * m00;
  const double n3 = std::pow(m00, 2.5);
  const double e20 = mu20 / n2, e02 = mu02 / n2, e11 = mu11 / n2;
  const double e30 = mu30 / n3, e03 = mu03 / n3, e21 = mu21 / n3, e12 = mu12 / n3;

  const double a = e30 + e12;
  const double b = e21 + e03;
  hu[0] = e20 + e02;
  hu[1] = (e20 - e02) * (e20 - e02) + 4 * e11 * e11;
  hu[2] = (e30 - 3 * e12) * (e30 - 3 * e12) + (3 * e21 - e03) * (3 * e21 - e03);
  hu[3] = a * a + b * b;
  hu[4] = (e30 - 3 * e12) * a * (a * a - 3 * b * b) + (3 * e21 - e03) * b * (3 * a * a - b * b);
  hu[5] = (e20 - e02) * (a * a - b * b) + 4 * e11 * a * b;
  hu[6] = (3 * e21 - e03) * a * (a * a - 3 * b * b) - (e30 - 3 * e12) * b * (3 * a * a - b * b);
  return hu;
}

FeatureVector builtin_descriptor(const ComponentCrop& crop) {
  constexpr int S = ComponentCrop::kSize;
  FeatureVector out(kBuiltinDescriptorDim, 0.0);
  const std::size_t n = crop.component_pixels();
  if (n > 0) {
    for (std::size_t i = 0; i < crop.mask.size(); ++i) {
      if (!crop.mask[i]) continue;
      for (int ch = 0; ch < 3; ++ch) {
        const double v = std::clamp(static_cast<double>(crop.rgb[i * 3 + ch]), 0.0, 1.0);
        const int bin = std::min(kColorBins - 1, static_cast<int>(v * kColorBins));
        out[static_cast<std::size_t>(ch * kColorBins + bin)] += 1.0;
      }
    }
    for (int i = 0; i < 3 * kColorBins; ++i) out[static_cast<std::size_t>(i)] /= static_cast<double>(n);
  }
  out[3 * kColorBins] = static_cast<double>(n) / (S * S);
  const auto hu = hu_moments(crop.mask, S, S);
  std::copy(hu.begin(), hu.end(), out.begin() + 3 * kColorBins + 1);
  return out;
}

FeatureVector rotation_invariant_descriptor(const Image& image, const BinaryMask& mask, const FeatureFunction& f,
                                            int rotations) {
  if (rotations < 1) fail(ErrorCode::kInvalidArgument, "rotation count must be >= 1");
  if (mask.area() == 0) fail(ErrorCode::kEmptyMask, "rotation_invariant_descriptor: empty mask");
  FeatureVector mean;
  for (int r = 0; r < rotations; ++r) {
    const double angle = 360.0 * r / rotations;
    const FeatureVector v = f(normalize_crop(image, mask, angle));
    if (r == 0) {
      mean.assign(v.size(), 0.0);
    } else if (v.size() != mean.size()) {
      fail(ErrorCode::kFeatureDimMismatch, "feature function changed output dimension");
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) fail(ErrorCode::kNonFinite, "feature function returned non-finite value");
      mean[i] += v[i];
    }
  }
  for (auto& x : mean) x /= rotations;
  return mean;
}

void export_crops(const std::vector<CropRequest>& requests, int rotations, const fs::path& dir) {
  if (rotations < 1) fail(ErrorCode::kInvalidArgument, "rotation count must be >= 1");
  fs::create_directories(dir);
  constexpr int S = ComponentCrop::kSize;
  json manifest{{"size", S}, {"rotations", rotations}, {"crops", json::array()}};
  for (const auto& req : requests) {
    for (int r = 0; r < rotations; ++r) {
      const double angle = 360.0 * r / rotations;
      const auto crop = normalize_crop(*req.image, *req.mask, angle, req.component);
      Image out(S, S);
      for (std::size_t i = 0; i < out.rgb.size(); ++i) {
        out.rgb[i] = static_cast<std::uint8_t>(std::lround(std::clamp(crop.rgb[i], 0.0f, 1.0f) * 255.0f));
      }
      char name[256];
      std::snprintf(name, sizeof(name), "%s_%03zu_%02d.ppm", req.image_id.c_str(), req.component, r);
      write_image(out, dir / name);
      manifest["crops"].push_back(
          {{"image", req.image_id}, {"component", req.component}, {"rotation", r}, {"angle", angle}, {"file", name}});
    }
  }
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

ExternalDescriptors load_external_descriptors(const fs::path& manifest_path) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(manifest_path));
  } catch (const json::exception& e) {
    fail(ErrorCode::kUnsupportedFormat, "bad feature manifest: " + std::string(e.what()));
  }
  const fs::path base = manifest_path.parent_path();
  std::map<std::pair<std::string, std::size_t>, std::pair<FeatureVector, int>> sums;
  std::size_t dim = 0;
  for (const auto& entry : manifest.at("features")) {
    const Tensor t = read_tensor(base / entry.at("file").get<std::string>());
    if (dim == 0) dim = t.data.size();
    if (t.data.size() != dim) fail(ErrorCode::kFeatureDimMismatch, "external features have inconsistent dimensions");
    auto key = std::make_pair(entry.at("image").get<std::string>(), entry.at("component").get<std::size_t>());
    auto& [sum, count] = sums[key];
    if (sum.empty()) sum.assign(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) sum[i] += t.data[i];
    ++count;
  }
  ExternalDescriptors out;
  for (auto& [key, acc] : sums) {
    for (auto& v : acc.first) v /= acc.second;
    out.emplace(key, std::move(acc.first));
  }
  return out;
}

}  // namespace csad
