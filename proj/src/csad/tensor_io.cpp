#include "csad/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace csad {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[off + i]) << (8 * i);
  return v;
}

struct PnmHeader {
  char kind = 0;  // '5' or '6'
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

PnmHeader parse_pnm_header(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    fail(ErrorCode::kUnsupportedFormat, "not a binary PGM/PPM: " + path.string());
  }
  PnmHeader h;
  h.kind = static_cast<char>(bytes[1]);
  std::size_t pos = 2;
  int fields[3] = {0, 0, 0};
  for (int& field : fields) {
    // whitespace and comments
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      fail(ErrorCode::kUnsupportedFormat, "malformed PNM header: " + path.string());
    }
    long long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (1 << 24)) fail(ErrorCode::kUnsupportedFormat, "PNM header value too large: " + path.string());
      ++pos;
    }
    field = static_cast<int>(v);
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    fail(ErrorCode::kUnsupportedFormat, "malformed PNM header: " + path.string());
  }
  h.width = fields[0];
  h.height = fields[1];
  h.maxval = fields[2];
  h.data_offset = pos + 1;
  if (h.width <= 0 || h.height <= 0) fail(ErrorCode::kUnsupportedFormat, "PNM with zero dimension: " + path.string());
  if (h.maxval <= 0 || h.maxval > 65535) fail(ErrorCode::kUnsupportedFormat, "bad PNM maxval: " + path.string());
  return h;
}

std::vector<std::uint8_t> pnm_header(char kind, int w, int h, int maxval) {
  std::string s = std::string("P") + kind + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n" +
                  std::to_string(maxval) + "\n";
  return {s.begin(), s.end()};
}

const std::uint8_t* gray8_payload(const std::vector<std::uint8_t>& bytes, const PnmHeader& h, const fs::path& path) {
  if (h.kind != '5' || h.maxval > 255) fail(ErrorCode::kUnsupportedFormat, "expected 8-bit PGM: " + path.string());
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() != h.data_offset + n) fail(ErrorCode::kDimMismatch, "PGM payload size mismatch: " + path.string());
  return bytes.data() + h.data_offset;
}

}  // namespace

Tensor::Tensor(std::vector<std::uint32_t> dims, std::vector<float> values)
    : shape(std::move(dims)), data(std::move(values)) {
  if (shape.empty()) fail(ErrorCode::kDimMismatch, "tensor needs at least one dimension");
  if (element_count() != data.size()) fail(ErrorCode::kDimMismatch, "tensor payload does not match dims");
}

Tensor Tensor::zeros(std::uint32_t channels, std::uint32_t height, std::uint32_t width) {
  return Tensor({channels, height, width}, std::vector<float>(static_cast<std::size_t>(channels) * height * width));
}

std::size_t Tensor::element_count() const {
  std::size_t n = shape.empty() ? 0 : 1;
  for (auto d : shape) n *= d;
  return n;
}

std::uint32_t Tensor::channels() const {
  if (!is_chw()) fail(ErrorCode::kDimMismatch, "expected C x H x W tensor");
  return shape[0];
}
std::uint32_t Tensor::height() const {
  if (!is_chw()) fail(ErrorCode::kDimMismatch, "expected C x H x W tensor");
  return shape[1];
}
std::uint32_t Tensor::width() const {
  if (!is_chw()) fail(ErrorCode::kDimMismatch, "expected C x H x W tensor");
  return shape[2];
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.shape.empty() || t.element_count() != t.data.size()) {
    fail(ErrorCode::kDimMismatch, "tensor payload does not match dims");
  }
  for (float v : t.data) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "tensor contains non-finite values");
  }
  std::vector<std::uint8_t> out;
  out.reserve(12 + 4 * t.shape.size() + 4 * t.data.size());
  for (char c : {'C', 'S', 'T', 'F'}) out.push_back(static_cast<std::uint8_t>(c));
  put_u32(out, kTensorVersion);
  put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
  for (auto d : t.shape) put_u32(out, d);
  for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_tensor(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "CSTF", 4) != 0) {
    fail(ErrorCode::kBadMagic, "tensor file does not start with CSTF");
  }
  if (bytes.size() < 12) fail(ErrorCode::kDimMismatch, "truncated tensor header");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kTensorVersion) {
    fail(ErrorCode::kUnsupportedFormat, "unsupported tensor version " + std::to_string(version));
  }
  const std::uint32_t ndim = get_u32(bytes, 8);
  if (ndim == 0 || ndim > 16) fail(ErrorCode::kDimMismatch, "bad tensor rank " + std::to_string(ndim));
  const std::size_t header = 12 + 4 * static_cast<std::size_t>(ndim);
  if (bytes.size() < header) fail(ErrorCode::kDimMismatch, "truncated tensor header");
  std::vector<std::uint32_t> dims(ndim);
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    dims[i] = get_u32(bytes, 12 + 4 * i);
    count *= dims[i];
    if (count > (std::numeric_limits<std::uint64_t>::max() >> 3)) fail(ErrorCode::kDimMismatch, "tensor too large");
  }
  if (bytes.size() - header != count * 4) {
    fail(ErrorCode::kDimMismatch, "tensor payload length " + std::to_string(bytes.size() - header) +
                                      " bytes, dims require " + std::to_string(count * 4));
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, header + 4 * i));
    if (!std::isfinite(data[i])) fail(ErrorCode::kNonFinite, "tensor contains non-finite values");
  }
  return Tensor(std::move(dims), std::move(data));
}

Tensor read_tensor(const fs::path& path) { return decode_tensor(read_file_bytes(path)); }

void write_tensor(const Tensor& t, const fs::path& path) { write_file_bytes(path, encode_tensor(t)); }

LabelMap read_label_map(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  const auto h = parse_pnm_header(bytes, path);
  const std::uint8_t* p = gray8_payload(bytes, h, path);
  LabelMap m(h.width, h.height);
  std::copy(p, p + m.pixel_count(), m.pixels.begin());
  return m;
}

void write_label_map(const LabelMap& map, const fs::path& path) {
  if (map.width <= 0 || map.height <= 0 || map.pixels.size() != static_cast<std::size_t>(map.width) * map.height) {
    fail(ErrorCode::kDimMismatch, "invalid label map dimensions");
  }
  if (map.max_class() > 255) {
    fail(ErrorCode::kTooManyClasses, "label map class " + std::to_string(map.max_class()) + " exceeds 255");
  }
  auto out = pnm_header('5', map.width, map.height, 255);
  for (auto v : map.pixels) out.push_back(static_cast<std::uint8_t>(v));
  write_file_bytes(path, out);
}

BinaryMask read_mask(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  const auto h = parse_pnm_header(bytes, path);
  const std::uint8_t* p = gray8_payload(bytes, h, path);
  BinaryMask m(h.width, h.height);
  for (std::size_t i = 0; i < m.pixel_count(); ++i) m.bits[i] = p[i] != 0 ? 1 : 0;
  return m;
}

void write_mask(const BinaryMask& mask, const fs::path& path) {
  if (mask.width <= 0 || mask.height <= 0) fail(ErrorCode::kDimMismatch, "invalid mask dimensions");
  auto out = pnm_header('5', mask.width, mask.height, 255);
  for (auto b : mask.bits) out.push_back(b ? 255 : 0);
  write_file_bytes(path, out);
}

void write_mask_set(const MaskSet& masks, const fs::path& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["width"] = masks.empty() ? 0 : masks.front().width;
  manifest["height"] = masks.empty() ? 0 : masks.front().height;
  manifest["masks"] = json::array();
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (!masks[i].same_shape(masks.front())) fail(ErrorCode::kDimMismatch, "mask set with mixed dimensions");
    char name[32];
    std::snprintf(name, sizeof(name), "mask_%03zu.pgm", i);
    write_mask(masks[i], dir / name);
    manifest["masks"].push_back(name);
  }
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

MaskSet read_mask_set(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    fail(ErrorCode::kUnsupportedFormat, "bad mask manifest in " + dir.string() + ": " + e.what());
  }
  MaskSet masks;
  const int w = manifest.value("width", 0);
  const int h = manifest.value("height", 0);
  for (const auto& name : manifest.at("masks")) {
    auto m = read_mask(dir / name.get<std::string>());
    if (m.width != w || m.height != h) fail(ErrorCode::kDimMismatch, "mask dims disagree with manifest");
    masks.push_back(std::move(m));
  }
  return masks;
}

Image read_image(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  const auto h = parse_pnm_header(bytes, path);
  if (h.maxval > 255) fail(ErrorCode::kUnsupportedFormat, "expected 8-bit image: " + path.string());
  Image img(h.width, h.height);
  const std::size_t n = img.pixel_count();
  if (h.kind == '6') {
    if (bytes.size() != h.data_offset + 3 * n) fail(ErrorCode::kDimMismatch, "PPM payload size mismatch");
    std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset), bytes.end(), img.rgb.begin());
  } else {
    const std::uint8_t* p = gray8_payload(bytes, h, path);
    for (std::size_t i = 0; i < n; ++i) img.rgb[3 * i] = img.rgb[3 * i + 1] = img.rgb[3 * i + 2] = p[i];
  }
  return img;
}

void write_image(const Image& image, const fs::path& path) {
  if (image.width <= 0 || image.height <= 0) fail(ErrorCode::kDimMismatch, "invalid image dimensions");
  auto out = pnm_header('6', image.width, image.height, 255);
  out.insert(out.end(), image.rgb.begin(), image.rgb.end());
  write_file_bytes(path, out);
}

MapRange write_anomaly_map(const AnomalyMap& map, const fs::path& pgm_path, const fs::path& json_path) {
  if (map.width <= 0 || map.height <= 0) fail(ErrorCode::kDimMismatch, "invalid anomaly map dimensions");
  MapRange r;
  r.min = *std::min_element(map.values.begin(), map.values.end());
  r.max = *std::max_element(map.values.begin(), map.values.end());
  const double span = r.max - r.min;
  auto out = pnm_header('5', map.width, map.height, 65535);
  for (double v : map.values) {
    const double q = span > 0 ? std::round((v - r.min) / span * 65535.0) : 0.0;
    const auto s = static_cast<std::uint16_t>(std::clamp(q, 0.0, 65535.0));
    out.push_back(static_cast<std::uint8_t>(s >> 8));
    out.push_back(static_cast<std::uint8_t>(s & 0xFF));
  }
  write_file_bytes(pgm_path, out);
  json meta{{"min", r.min}, {"max", r.max}, {"width", map.width}, {"height", map.height}};
  write_text_file(json_path, meta.dump(2) + "\n");
  return r;
}

AnomalyMap read_anomaly_map(const fs::path& pgm_path, const fs::path& json_path) {
  const auto bytes = read_file_bytes(pgm_path);
  const auto h = parse_pnm_header(bytes, pgm_path);
  if (h.kind != '5' || h.maxval != 65535) fail(ErrorCode::kUnsupportedFormat, "expected 16-bit PGM");
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() != h.data_offset + 2 * n) fail(ErrorCode::kDimMismatch, "16-bit PGM payload size mismatch");
  const auto meta = json::parse(read_text_file(json_path));
  const double lo = meta.at("min").get<double>();
  const double hi = meta.at("max").get<double>();
  AnomalyMap m(h.width, h.height);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned s = (static_cast<unsigned>(bytes[h.data_offset + 2 * i]) << 8) | bytes[h.data_offset + 2 * i + 1];
    m.values[i] = lo + (hi - lo) * (s / 65535.0);
  }
  return m;
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kMissingInput, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kMissingInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace csad
