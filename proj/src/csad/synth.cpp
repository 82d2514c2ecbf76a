#include "csad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>

#include "csad/mask_ops.hpp"
#include "csad/parallel.hpp"
#include "csad/tensor_io.hpp"

namespace csad {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

const char* shape_name(Shape s) {
  switch (s) {
    case Shape::kDisk: return "disk";
    case Shape::kSquare: return "square";
    case Shape::kBar: return "bar";
    case Shape::kTriangle: return "triangle";
  }
  return "disk";
}

Shape shape_from_name(const std::string& s) {
  if (s == "disk") return Shape::kDisk;
  if (s == "square") return Shape::kSquare;
  if (s == "bar") return Shape::kBar;
  if (s == "triangle") return Shape::kTriangle;
  fail(ErrorCode::kConfig, "unknown shape '" + s + "'");
}

bool inside_shape(Shape shape, double size, double u, double v) {
  const double half = size / 2;
  switch (shape) {
    case Shape::kDisk: return u * u + v * v <= half * half;
    case Shape::kSquare: return std::abs(u) <= half && std::abs(v) <= half;
    case Shape::kBar: return std::abs(u) <= half && std::abs(v) <= 0.15 * size;
    case Shape::kTriangle: {
      const double inradius = size / (2 * std::numbers::sqrt3);
      for (double deg : {90.0, 210.0, 330.0}) {
        const double a = deg * std::numbers::pi / 180;
        if (u * std::cos(a) + v * std::sin(a) > inradius) return false;
      }
      return true;
    }
  }
  return false;
}

BinaryMask rasterize(const Instance& inst, const Archetype& arch, int w, int h) {
  BinaryMask m(w, h);
  const double a = inst.rotation_deg * std::numbers::pi / 180;
  const double c = std::cos(a), s = std::sin(a);
  const double reach = inst.size;  // generous bound on the shape radius
  const int x0 = std::max(0, static_cast<int>(std::floor(inst.cx - reach)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(inst.cx + reach)));
  const int y0 = std::max(0, static_cast<int>(std::floor(inst.cy - reach)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(inst.cy + reach)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - inst.cx;
      const double dy = y + 0.5 - inst.cy;
      const double u = c * dx + s * dy;
      const double v = -s * dx + c * dy;
      if (inside_shape(arch.shape, inst.size, u, v)) m.at(x, y) = 1;
    }
  }
  return m;
}

struct CellGeometry {
  double x0, y0, w, h;
};

CellGeometry cell_geometry(const SceneSpec& spec, int cell) {
  const double cw = static_cast<double>(spec.width) / spec.home_grid;
  const double ch = static_cast<double>(spec.height) / spec.home_grid;
  return {(cell % spec.home_grid) * cw, (cell / spec.home_grid) * ch, cw, ch};
}

void validate(const SceneSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0 || spec.home_grid < 1) fail(ErrorCode::kSpecInfeasible, "bad canvas");
  if (spec.archetypes.empty()) fail(ErrorCode::kSpecInfeasible, "scene has no archetypes");
  const int cells = spec.home_grid * spec.home_grid;
  for (std::size_t i = 0; i < spec.archetypes.size(); ++i) {
    const auto& a = spec.archetypes[i];
    if (a.count < 1) fail(ErrorCode::kSpecInfeasible, "archetype count must be >= 1");
    if (a.home_cell < 0 || a.home_cell >= cells) fail(ErrorCode::kSpecInfeasible, "home cell out of range");
    const auto g = cell_geometry(spec, a.home_cell);
    if (a.size <= 2 || a.size * 0.75 * 2 > std::min(g.w, g.h)) {
      fail(ErrorCode::kSpecInfeasible, "archetype '" + a.name + "' does not fit its home cell");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (spec.archetypes[j].color == a.color) fail(ErrorCode::kSpecInfeasible, "archetype colors must be distinct");
    }
    if (a.color == spec.background) fail(ErrorCode::kSpecInfeasible, "archetype color equals background");
  }
  if (spec.tensor_channels < 1 || spec.tensor_size < 1) fail(ErrorCode::kSpecInfeasible, "bad tensor shape");
}

}  // namespace

SceneSpec SceneSpec::toy_loco() {
  SceneSpec s;
  s.archetypes = {
      {"disk", Shape::kDisk, {220, 40, 40}, 1, 0, 44.0, 360.0},
      {"square", Shape::kSquare, {40, 200, 60}, 1, 1, 40.0, 30.0},
      {"bar", Shape::kBar, {50, 80, 230}, 1, 2, 56.0, 30.0},
      {"triangle", Shape::kTriangle, {230, 210, 40}, 1, 3, 50.0, 30.0},
  };
  return s;
}

SceneSpec SceneSpec::two_archetypes() {
  SceneSpec s;
  s.archetypes = {
      {"red_disk", Shape::kDisk, {220, 30, 30}, 1, 0, 44.0},
      {"blue_square", Shape::kSquare, {30, 60, 220}, 1, 3, 40.0},
  };
  s.size_jitter = 0.05;
  return s;
}

json SceneSpec::to_json() const {
  json arch = json::array();
  for (const auto& a : archetypes) {
    arch.push_back({{"name", a.name},
                    {"shape", shape_name(a.shape)},
                    {"color", a.color},
                    {"count", a.count},
                    {"home_cell", a.home_cell},
                    {"size", a.size},
                    {"rotation_range", a.rotation_range}});
  }
  return {{"width", width},
          {"height", height},
          {"home_grid", home_grid},
          {"background", background},
          {"archetypes", arch},
          {"jitter", jitter},
          {"size_jitter", size_jitter},
          {"color_noise", color_noise},
          {"seed", seed},
          {"tensor_channels", tensor_channels},
          {"tensor_size", tensor_size}};
}

SceneSpec SceneSpec::from_json(const json& j) {
  SceneSpec s = toy_loco();
  try {
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.home_grid = j.value("home_grid", s.home_grid);
    if (j.contains("background")) s.background = j.at("background").get<Rgb>();
    if (j.contains("archetypes")) {
      s.archetypes.clear();
      for (const auto& a : j.at("archetypes")) {
        Archetype arch;
        arch.name = a.value("name", std::string("component"));
        arch.shape = shape_from_name(a.value("shape", std::string("disk")));
        arch.color = a.at("color").get<Rgb>();
        arch.count = a.value("count", 1);
        arch.home_cell = a.value("home_cell", 0);
        arch.size = a.value("size", 40.0);
        arch.rotation_range = a.value("rotation_range", 360.0);
        s.archetypes.push_back(arch);
      }
    }
    s.jitter = j.value("jitter", s.jitter);
    s.size_jitter = j.value("size_jitter", s.size_jitter);
    s.color_noise = j.value("color_noise", s.color_noise);
    s.seed = j.value("seed", s.seed);
    s.tensor_channels = j.value("tensor_channels", s.tensor_channels);
    s.tensor_size = j.value("tensor_size", s.tensor_size);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("bad scene spec: ") + e.what());
  }
  return s;
}

const char* anomaly_kind_name(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::kNone: return "normal";
    case AnomalyKind::kMissingComponent: return "missing_component";
    case AnomalyKind::kExtraComponent: return "extra_component";
    case AnomalyKind::kSwappedPositions: return "swapped_positions";
    case AnomalyKind::kStructuralDefect: return "structural_defect";
  }
  return "normal";
}

AnomalyKind anomaly_kind_from_name(const std::string& name) {
  for (auto k : {AnomalyKind::kNone, AnomalyKind::kMissingComponent, AnomalyKind::kExtraComponent,
                 AnomalyKind::kSwappedPositions, AnomalyKind::kStructuralDefect}) {
    if (name == anomaly_kind_name(k)) return k;
  }
  fail(ErrorCode::kConfig, "unknown anomaly kind '" + name + "'");
}

Scene generate_scene(const SceneSpec& spec, AnomalyKind kind, std::uint64_t scene_seed) {
  validate(spec);
  // layout draws and anomaly draws use separate streams so that a scene and
  // its anomalous counterpart under the same seed share every instance draw
  std::mt19937_64 rng(scene_seed);
  std::mt19937_64 arng(splitmix64(scene_seed ^ 0x616e6f6d616c7900ull));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n_arch = static_cast<int>(spec.archetypes.size());

  Scene scene;
  scene.kind = kind;
  std::vector<int> home(static_cast<std::size_t>(n_arch));
  for (int a = 0; a < n_arch; ++a) home[a] = spec.archetypes[a].home_cell;

  std::vector<int> swapped;
  if (kind == AnomalyKind::kSwappedPositions) {
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < n_arch; ++a) {
      for (int b = a + 1; b < n_arch; ++b) {
        if (home[a] != home[b]) pairs.emplace_back(a, b);
      }
    }
    if (pairs.empty()) fail(ErrorCode::kSpecInfeasible, "no two archetypes with distinct home cells to swap");
    const auto [a, b] = pairs[static_cast<std::size_t>(unit(arng) * pairs.size()) % pairs.size()];
    std::swap(home[a], home[b]);
    swapped = {a, b};
  }

  for (int a = 0; a < n_arch; ++a) {
    const auto& arch = spec.archetypes[a];
    const auto g = cell_geometry(spec, home[a]);
    for (int i = 0; i < arch.count; ++i) {
      Instance inst;
      inst.archetype = a;
      double ox = 0, oy = 0;
      if (arch.count > 1) {
        const double r = std::min(g.w, g.h) / 5;
        const double t = 2 * std::numbers::pi * i / arch.count;
        ox = r * std::cos(t);
        oy = r * std::sin(t);
      }
      inst.cx = g.x0 + g.w / 2 + ox + spec.jitter * gauss(rng);
      inst.cy = g.y0 + g.h / 2 + oy + spec.jitter * gauss(rng);
      inst.size = arch.size * std::max(0.5, 1.0 + spec.size_jitter * gauss(rng));
      inst.rotation_deg = arch.shape == Shape::kDisk ? 0.0 : arch.rotation_range * (unit(rng) - 0.5);
      scene.instances.push_back(inst);
    }
  }

  const int w = spec.width, h = spec.height;
  for (const auto& inst : scene.instances) {
    scene.instance_masks.push_back(rasterize(inst, spec.archetypes[inst.archetype], w, h));
  }
  scene.anomaly_mask = BinaryMask(w, h);

  switch (kind) {
    case AnomalyKind::kNone: break;
    case AnomalyKind::kMissingComponent: {
      const auto victim = static_cast<std::size_t>(unit(arng) * scene.instances.size()) % scene.instances.size();
      scene.anomaly_mask = scene.instance_masks[victim];
      scene.implicated_archetype = scene.instances[victim].archetype;
      scene.instances.erase(scene.instances.begin() + static_cast<std::ptrdiff_t>(victim));
      scene.instance_masks.erase(scene.instance_masks.begin() + static_cast<std::ptrdiff_t>(victim));
      break;
    }
    case AnomalyKind::kExtraComponent: {
      const int a = static_cast<int>(unit(arng) * n_arch) % n_arch;
      const auto& arch = spec.archetypes[a];
      // occupancy grown by a small margin so the extra never touches a component
      BinaryMask occupied(w, h);
      constexpr int kMargin = 3;
      for (const auto& m : scene.instance_masks) {
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            if (!m.at(x, y)) continue;
            for (int yy = std::max(0, y - kMargin); yy <= std::min(h - 1, y + kMargin); ++yy) {
              for (int xx = std::max(0, x - kMargin); xx <= std::min(w - 1, x + kMargin); ++xx) occupied.at(xx, yy) = 1;
            }
          }
        }
      }
      const int cells = spec.home_grid * spec.home_grid;
      bool placed = false;
      for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        Instance inst;
        inst.archetype = a;
        inst.size = arch.size * std::max(0.5, 1.0 + spec.size_jitter * gauss(arng));
        const double margin = 0.75 * inst.size;
        if (2 * margin >= std::min(w, h)) break;
        inst.cx = margin + unit(arng) * (w - 2 * margin);
        inst.cy = margin + unit(arng) * (h - 2 * margin);
        inst.rotation_deg = arch.shape == Shape::kDisk ? 0.0 : arch.rotation_range * (unit(arng) - 0.5);
        const int col = std::min(spec.home_grid - 1, static_cast<int>(inst.cx * spec.home_grid / w));
        const int row = std::min(spec.home_grid - 1, static_cast<int>(inst.cy * spec.home_grid / h));
        if (cells > 1 && row * spec.home_grid + col == arch.home_cell) continue;
        BinaryMask m = rasterize(inst, arch, w, h);
        bool clash = false;
        for (std::size_t p = 0; p < m.bits.size() && !clash; ++p) clash = m.bits[p] && occupied.bits[p];
        if (clash || m.area() == 0) continue;
        scene.anomaly_mask = m;
        scene.instances.push_back(inst);
        scene.instance_masks.push_back(std::move(m));
        scene.implicated_archetype = a;
        placed = true;
      }
      if (!placed) fail(ErrorCode::kSpecInfeasible, "no free location for an extra component");
      break;
    }
    case AnomalyKind::kSwappedPositions: {
      for (std::size_t i = 0; i < scene.instances.size(); ++i) {
        const int a = scene.instances[i].archetype;
        if (a != swapped[0] && a != swapped[1]) continue;
        for (std::size_t p = 0; p < scene.anomaly_mask.bits.size(); ++p) {
          if (scene.instance_masks[i].bits[p]) scene.anomaly_mask.bits[p] = 1;
        }
      }
      scene.implicated_archetype = swapped[0];
      break;
    }
    case AnomalyKind::kStructuralDefect: {
      const auto victim = static_cast<std::size_t>(unit(arng) * scene.instances.size()) % scene.instances.size();
      const auto& inst = scene.instances[victim];
      const double width = 75.0 * std::numbers::pi / 180;
      auto& m = scene.instance_masks[victim];
      // wedge centered on a random mask pixel outside the kept core
      std::vector<double> rim_angles;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double dx = x + 0.5 - inst.cx;
          const double dy = y + 0.5 - inst.cy;
          if (m.at(x, y) && std::hypot(dx, dy) >= 0.25 * inst.size) rim_angles.push_back(std::atan2(dy, dx));
        }
      }
      if (rim_angles.empty()) fail(ErrorCode::kSpecInfeasible, "component too small for a structural defect");
      const double center = rim_angles[static_cast<std::size_t>(unit(arng) * rim_angles.size()) % rim_angles.size()];
      const double start = center - width / 2;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!m.at(x, y)) continue;
          const double dx = x + 0.5 - inst.cx;
          const double dy = y + 0.5 - inst.cy;
          if (std::hypot(dx, dy) < 0.25 * inst.size) continue;
          double ang = std::atan2(dy, dx) - start;
          ang = std::fmod(ang + 4 * std::numbers::pi, 2 * std::numbers::pi);
          if (ang < width) {
            m.at(x, y) = 0;
            scene.anomaly_mask.at(x, y) = 1;
          }
        }
      }
      scene.implicated_archetype = inst.archetype;
      break;
    }
  }

  scene.image = Image(w, h);
  scene.labels = LabelMap(w, h);
  for (std::size_t p = 0; p < scene.image.pixel_count(); ++p) {
    std::copy(spec.background.begin(), spec.background.end(), scene.image.rgb.begin() + static_cast<std::ptrdiff_t>(3 * p));
  }
  for (std::size_t i = 0; i < scene.instances.size(); ++i) {
    const auto& arch = spec.archetypes[scene.instances[i].archetype];
    const auto& m = scene.instance_masks[i];
    for (std::size_t p = 0; p < m.bits.size(); ++p) {
      if (!m.bits[p]) continue;
      std::copy(arch.color.begin(), arch.color.end(), scene.image.rgb.begin() + static_cast<std::ptrdiff_t>(3 * p));
      scene.labels.pixels[p] = static_cast<std::uint16_t>(scene.instances[i].archetype + 1);
    }
  }
  if (spec.color_noise > 0) {
    for (auto& v : scene.image.rgb) {
      v = static_cast<std::uint8_t>(std::clamp(std::lround(v + spec.color_noise * gauss(rng)), 0L, 255L));
    }
  }
  return scene;
}

LabelMap oracle_segment(const Image& image, const SceneSpec& spec) {
  LabelMap out(image.width, image.height);
  std::vector<Rgb> palette{spec.background};
  for (const auto& a : spec.archetypes) palette.push_back(a.color);
  for (std::size_t p = 0; p < image.pixel_count(); ++p) {
    const std::uint8_t* px = &image.rgb[3 * p];
    int best = 0;
    int best_d = 1 << 30;
    for (std::size_t c = 0; c < palette.size(); ++c) {
      int d = 0;
      for (int ch = 0; ch < 3; ++ch) {
        const int diff = static_cast<int>(px[ch]) - palette[c][ch];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    out.pixels[p] = static_cast<std::uint16_t>(best);
  }
  return out;
}

LgstInputs synth_lgst_tensors(const Scene& scene, const SceneSpec& spec, std::uint64_t scene_seed) {
  const int C = spec.tensor_channels;
  const int T = spec.tensor_size;
  const int w = scene.image.width, h = scene.image.height;

  // projection shared by every image of the dataset
  std::mt19937_64 proj_rng(splitmix64(spec.seed ^ 0x7465616368657200ull));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> weights(static_cast<std::size_t>(C) * 4);
  for (auto& v : weights) v = gauss(proj_rng);

  std::mt19937_64 rng(splitmix64(scene_seed ^ 0x73747564656e7400ull));
  std::vector<double> pattern(static_cast<std::size_t>(C));
  for (auto& v : pattern) v = gauss(rng) > 0 ? 1.0 : -1.0;

  LgstInputs out{Tensor::zeros(C, T, T), Tensor::zeros(C, T, T), Tensor::zeros(C, T, T), Tensor::zeros(C, T, T)};
  constexpr double kNoise = 0.02;
  constexpr double kPerturbation = 0.5;
  const bool structural = scene.kind == AnomalyKind::kStructuralDefect;
  for (int ty = 0; ty < T; ++ty) {
    const int y0 = ty * h / T, y1 = std::max(y0 + 1, (ty + 1) * h / T);
    for (int tx = 0; tx < T; ++tx) {
      const int x0 = tx * w / T, x1 = std::max(x0 + 1, (tx + 1) * w / T);
      double rgb[3] = {0, 0, 0};
      double anomalous = 0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          for (int ch = 0; ch < 3; ++ch) rgb[ch] += scene.image.at(x, y)[ch] / 255.0;
          anomalous += scene.anomaly_mask.at(x, y);
        }
      }
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      anomalous /= n;
      for (int c = 0; c < C; ++c) {
        const double* wc = &weights[static_cast<std::size_t>(c) * 4];
        const double t = std::tanh(wc[0] * rgb[0] / n + wc[1] * rgb[1] / n + wc[2] * rgb[2] / n + wc[3]);
        const double bump = kPerturbation * anomalous * pattern[static_cast<std::size_t>(c)];
        const auto uc = static_cast<std::uint32_t>(c), uy = static_cast<std::uint32_t>(ty), ux = static_cast<std::uint32_t>(tx);
        out.teacher.at(uc, uy, ux) = static_cast<float>(t);
        const double gs = t + kNoise * gauss(rng);
        out.global_student.at(uc, uy, ux) = static_cast<float>(gs);
        out.local_head_local.at(uc, uy, ux) = static_cast<float>(t + kNoise * gauss(rng) + (structural ? bump : 0.0));
        out.local_head_global.at(uc, uy, ux) =
            static_cast<float>(gs + kNoise * gauss(rng) + (structural || scene.kind == AnomalyKind::kNone ? 0.0 : bump));
      }
    }
  }
  return out;
}

Dataset generate_dataset(const SceneSpec& spec, const DatasetCounts& counts, const fs::path& dir, int jobs) {
  validate(spec);
  if (counts.n_train < 0 || counts.n_test_normal < 0 || counts.n_test_anomalous < 0) {
    fail(ErrorCode::kConfig, "dataset counts must be nonnegative");
  }
  struct Job {
    DatasetEntry entry;
    std::uint64_t seed;
  };
  std::vector<Job> plan;
  auto add = [&](const std::string& split, AnomalyKind kind, int n, const std::string& prefix) {
    for (int i = 0; i < n; ++i) {
      char id[96];
      std::snprintf(id, sizeof(id), "%s_%04d", prefix.c_str(), i);
      DatasetEntry e;
      e.id = id;
      e.split = split;
      e.kind = kind;
      plan.push_back({e, splitmix64(spec.seed * 0x100000001B3ull + plan.size() + 1)});
    }
  };
  add("train", AnomalyKind::kNone, counts.n_train, "train");
  add("test", AnomalyKind::kNone, counts.n_test_normal, "test_normal");
  for (auto kind : counts.kinds) {
    if (kind == AnomalyKind::kNone) continue;
    add("test", kind, counts.n_test_anomalous, std::string("test_") + anomaly_kind_name(kind));
  }

  fs::create_directories(dir);
  std::map<std::string, std::map<std::string, std::string>> tensor_entries;
  std::vector<std::map<std::string, std::string>> tensor_rows(plan.size());

  parallel_for(plan.size(), jobs, [&](std::size_t i) {
    auto& e = plan[i].entry;
    const Scene scene = generate_scene(spec, e.kind, plan[i].seed);
    e.image = "images/" + e.id + ".ppm";
    e.label = "labels/" + e.id + ".pgm";
    write_image(scene.image, dir / e.image);
    write_label_map(scene.labels, dir / e.label);
    if (e.split == "test") {
      e.mask = "masks/" + e.id + ".pgm";
      write_mask(scene.anomaly_mask, dir / e.mask);
    }
    if (counts.write_proposals && e.split == "train") {
      // per-component proposals plus one whole-foreground mask, as a proposal
      // generator would emit for the full object
      MaskSet proposals;
      BinaryMask foreground(scene.labels.width, scene.labels.height);
      for (std::size_t p = 0; p < foreground.bits.size(); ++p) foreground.bits[p] = scene.labels.pixels[p] != 0;
      for (auto& c : all_components(scene.labels)) proposals.push_back(std::move(c.mask));
      if (proposals.size() > 1) proposals.push_back(foreground);
      e.proposals = "proposals/" + e.id;
      e.grounding = "grounding/" + e.id + ".pgm";
      write_mask_set(proposals, dir / e.proposals);
      write_mask(foreground, dir / e.grounding);
    }
    if (counts.write_tensors) {
      const auto t = synth_lgst_tensors(scene, spec, plan[i].seed);
      auto& row = tensor_rows[i];
      const std::pair<const char*, const Tensor*> parts[] = {{"teacher", &t.teacher},
                                                             {"local_head_local", &t.local_head_local},
                                                             {"local_head_global", &t.local_head_global},
                                                             {"global_student", &t.global_student}};
      for (const auto& [name, tensor] : parts) {
        const std::string file = e.id + "." + name + ".cstf";
        write_tensor(*tensor, dir / "tensors" / file);
        row[name] = file;
      }
    }
  });

  Dataset ds;
  ds.root = dir;
  ds.spec = spec;
  json images = json::array();
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& e = plan[i].entry;
    json row{{"id", e.id}, {"split", e.split}, {"kind", anomaly_kind_name(e.kind)}, {"image", e.image}, {"label", e.label}};
    if (!e.mask.empty()) row["mask"] = e.mask;
    if (!e.proposals.empty()) {
      row["proposals"] = e.proposals;
      row["grounding"] = e.grounding;
    }
    images.push_back(row);
    if (counts.write_tensors) tensor_entries[e.id] = tensor_rows[i];
    ds.entries.push_back(e);
  }
  if (counts.write_tensors) LgstManifest::write(dir / "tensors" / "manifest.json", tensor_entries);
  json manifest{{"version", 1}, {"spec", spec.to_json()}, {"images", images}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return ds;
}

Dataset Dataset::load(const fs::path& root) {
  Dataset ds;
  ds.root = root;
  json manifest;
  try {
    manifest = json::parse(read_text_file(root / "manifest.json"));
    ds.spec = SceneSpec::from_json(manifest.at("spec"));
    for (const auto& row : manifest.at("images")) {
      DatasetEntry e;
      e.id = row.at("id").get<std::string>();
      e.split = row.at("split").get<std::string>();
      e.kind = anomaly_kind_from_name(row.value("kind", std::string("normal")));
      e.image = row.at("image").get<std::string>();
      e.label = row.value("label", std::string());
      e.mask = row.value("mask", std::string());
      e.proposals = row.value("proposals", std::string());
      e.grounding = row.value("grounding", std::string());
      ds.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, "bad dataset manifest in " + root.string() + ": " + e.what());
  }
  return ds;
}

std::vector<const DatasetEntry*> Dataset::select(const std::string& split) const {
  std::vector<const DatasetEntry*> out;
  for (const auto& e : entries) {
    if (e.split == split) out.push_back(&e);
  }
  return out;
}

std::optional<fs::path> Dataset::tensor_manifest() const {
  const auto p = root / "tensors" / "manifest.json";
  if (fs::exists(p)) return p;
  return std::nullopt;
}

double auroc(const std::vector<double>& normal_scores, const std::vector<double>& anomalous_scores) {
  if (normal_scores.empty() || anomalous_scores.empty()) fail(ErrorCode::kEmptyInput, "auroc: empty score list");
  struct Item {
    double score;
    bool anomalous;
  };
  std::vector<Item> items;
  items.reserve(normal_scores.size() + anomalous_scores.size());
  for (double s : normal_scores) items.push_back({s, false});
  for (double s : anomalous_scores) items.push_back({s, true});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
  // average ranks over tie groups (1-based)
  double rank_sum = 0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    std::size_t anomalous_in_group = 0;
    while (j < items.size() && items[j].score == items[i].score) anomalous_in_group += items[j++].anomalous ? 1 : 0;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2;
    rank_sum += avg_rank * static_cast<double>(anomalous_in_group);
    i = j;
  }
  const double m = static_cast<double>(anomalous_scores.size());
  const double n = static_cast<double>(normal_scores.size());
  return (rank_sum - m * (m + 1) / 2) / (m * n);
}

}  // namespace csad
