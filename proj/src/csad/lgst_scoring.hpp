#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "csad/image.hpp"
#include "csad/tensor_io.hpp"

namespace csad {

// Feature tensors for one image. local_head_local is compared with the teacher,
// local_head_global with the global student.
struct LgstInputs {
  Tensor teacher;
  Tensor local_head_local;
  Tensor local_head_global;
  Tensor global_student;
};

struct LgstMaps {
  AnomalyMap local;
  AnomalyMap global;
  AnomalyMap combined;
};

// D(h, w) = (1/C) * sum_c (a - b)^2
AnomalyMap difference_map(const Tensor& a, const Tensor& b);

LgstMaps lgst_maps(const LgstInputs& inputs);

struct MapReduction {
  enum class Kind { kMax, kTopKMean } kind = Kind::kMax;
  double top_fraction = 0.001;  // used by kTopKMean; at least one value is kept
};

double map_to_score(const AnomalyMap& map, const MapReduction& reduction = {});

// Tensor manifest: {"images": {"<id>": {"teacher": f, "local_head_local": f,
// "local_head_global": f, "global_student": f}}}; paths relative to the manifest.
class LgstManifest {
 public:
  static LgstManifest load(const std::filesystem::path& path);
  bool contains(const std::string& image_id) const { return entries_.count(image_id) != 0; }
  LgstInputs read(const std::string& image_id) const;
  std::size_t size() const { return entries_.size(); }

  static void write(const std::filesystem::path& path,
                    const std::map<std::string, std::map<std::string, std::string>>& entries);

 private:
  std::filesystem::path base_;
  std::map<std::string, std::map<std::string, std::string>> entries_;
};

}  // namespace csad
