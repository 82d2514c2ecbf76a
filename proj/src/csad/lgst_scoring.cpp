#include "csad/lgst_scoring.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <json.hpp>

namespace csad {

namespace fs = std::filesystem;
using json = nlohmann::json;

AnomalyMap difference_map(const Tensor& a, const Tensor& b) {
  if (!a.is_chw() || a.shape != b.shape) fail(ErrorCode::kDimMismatch, "difference_map: tensor shapes differ");
  const std::uint32_t c = a.channels();
  const std::uint32_t h = a.height();
  const std::uint32_t w = a.width();
  AnomalyMap out(static_cast<int>(w), static_cast<int>(h));
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::uint32_t ch = 0; ch < c; ++ch) {
    const float* pa = a.data.data() + ch * plane;
    const float* pb = b.data.data() + ch * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      const double d = static_cast<double>(pa[i]) - pb[i];
      out.values[i] += d * d;
    }
  }
  for (auto& v : out.values) v /= c;
  return out;
}

LgstMaps lgst_maps(const LgstInputs& in) {
  const auto& s = in.teacher.shape;
  if (in.local_head_local.shape != s || in.local_head_global.shape != s || in.global_student.shape != s) {
    fail(ErrorCode::kDimMismatch, "LGST tensors do not share dimensions");
  }
  LgstMaps maps;
  maps.local = difference_map(in.teacher, in.local_head_local);
  maps.global = difference_map(in.global_student, in.local_head_global);
  maps.combined = AnomalyMap(maps.local.width, maps.local.height);
  for (std::size_t i = 0; i < maps.combined.values.size(); ++i) {
    maps.combined.values[i] = (maps.local.values[i] + maps.global.values[i]) / 2;
  }
  return maps;
}

double map_to_score(const AnomalyMap& map, const MapReduction& reduction) {
  if (map.values.empty()) fail(ErrorCode::kEmptyInput, "map_to_score: empty map");
  if (reduction.kind == MapReduction::Kind::kMax) return map.max();
  const std::size_t n = map.values.size();
  const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(reduction.top_fraction * n)), 1, n);
  std::vector<double> v(map.values);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end(), std::greater<>());
  double s = 0;
  for (std::size_t i = 0; i < k; ++i) s += v[i];
  return s / static_cast<double>(k);
}

LgstManifest LgstManifest::load(const fs::path& path) {
  LgstManifest m;
  m.base_ = path.parent_path();
  try {
    const auto doc = json::parse(read_text_file(path));
    for (const auto& [id, files] : doc.at("images").items()) {
      auto& e = m.entries_[id];
      for (const char* key : {"teacher", "local_head_local", "local_head_global", "global_student"}) {
        e[key] = files.at(key).get<std::string>();
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kUnsupportedFormat, "bad tensor manifest " + path.string() + ": " + e.what());
  }
  return m;
}

LgstInputs LgstManifest::read(const std::string& image_id) const {
  auto it = entries_.find(image_id);
  if (it == entries_.end()) fail(ErrorCode::kMissingInput, "no LGST tensors for image " + image_id);
  const auto& f = it->second;
  return {read_tensor(base_ / f.at("teacher")), read_tensor(base_ / f.at("local_head_local")),
          read_tensor(base_ / f.at("local_head_global")), read_tensor(base_ / f.at("global_student"))};
}

void LgstManifest::write(const fs::path& path, const std::map<std::string, std::map<std::string, std::string>>& entries) {
  json doc{{"images", json::object()}};
  for (const auto& [id, files] : entries) doc["images"][id] = files;
  write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace csad
