#include "empathd/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>

#include "empathd/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace empathd {

namespace {

struct PngRaw {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 or 3
  int bitDepth = 0;  // 8 or 16
  std::vector<std::uint8_t> rows;  // tightly packed, 16-bit samples big-endian
};

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err) *err = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

struct WriteSink {
  std::vector<std::uint8_t>* out;
};

void png_write_fn(png_structp png, png_bytep data, png_size_t len) {
  auto* sink = static_cast<WriteSink*>(png_get_io_ptr(png));
  sink->out->insert(sink->out->end(), data, data + len);
}

void png_flush_fn(png_structp) {}

struct ReadSource {
  const std::vector<std::uint8_t>* in;
  std::size_t pos = 0;
};

void png_read_fn(png_structp png, png_bytep data, png_size_t len) {
  auto* src = static_cast<ReadSource*>(png_get_io_ptr(png));
  if (src->pos + len > src->in->size()) png_error(png, "unexpected end of PNG data");
  std::memcpy(data, src->in->data() + src->pos, len);
  src->pos += len;
}

std::vector<std::uint8_t> encode_raw(const PngRaw& raw) {
  std::vector<std::uint8_t> out;
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  WriteSink sink{&out};
  std::vector<png_bytep> rowPtrs(raw.height);
  const std::size_t stride = static_cast<std::size_t>(raw.width) * raw.channels * (raw.bitDepth / 8);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode failed: " + err);
  }
  png_set_write_fn(png, &sink, png_write_fn, png_flush_fn);
  png_set_IHDR(png, info, raw.width, raw.height, raw.bitDepth,
               raw.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 3);
  png_write_info(png, info);
  for (int y = 0; y < raw.height; ++y) {
    rowPtrs[y] = const_cast<png_bytep>(raw.rows.data() + y * stride);
  }
  png_write_image(png, rowPtrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

PngRaw decode_raw(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw FormatError("not a PNG stream");
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  ReadSource src{&bytes};
  PngRaw raw;
  std::vector<png_bytep> rowPtrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("PNG decode failed: " + err);
  }
  png_set_read_fn(png, &src, png_read_fn);
  png_read_info(png, info);
  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  const int colorType = png_get_color_type(png, info);
  raw.bitDepth = png_get_bit_depth(png, info);
  if (colorType == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (colorType == PNG_COLOR_TYPE_GRAY && raw.bitDepth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (colorType & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  raw.channels = png_get_channels(png, info);
  raw.bitDepth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  raw.rows.resize(stride * raw.height);
  rowPtrs.resize(raw.height);
  for (int y = 0; y < raw.height; ++y) rowPtrs[y] = raw.rows.data() + y * stride;
  png_read_image(png, rowPtrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return raw;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
  PngRaw raw;
  raw.width = img.width;
  raw.height = img.height;
  raw.channels = 3;
  raw.bitDepth = 8;
  raw.rows.resize(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const float v = std::clamp(img.data[i], 0.f, 1.f);
    raw.rows[i] = static_cast<std::uint8_t>(std::lround(v * 255.f));
  }
  return encode_raw(raw);
}

Image decode_png_rgb(const std::vector<std::uint8_t>& bytes) {
  PngRaw raw = decode_raw(bytes);
  if (raw.bitDepth != 8) throw FormatError("expected an 8-bit colour PNG");
  Image img(raw.width, raw.height);
  const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      const std::uint8_t v = raw.channels == 3 ? raw.rows[i * 3 + c] : raw.rows[i];
      img.data[i * 3 + c] = v / 255.f;
    }
  }
  return img;
}

void write_png(const Image& img, const std::string& path) { write_file_bytes(path, encode_png(img)); }

Image read_png_rgb(const std::string& path) {
  try {
    return decode_png_rgb(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_depth_png(const Plane& depth, const std::string& path) {
  PngRaw raw;
  raw.width = depth.width;
  raw.height = depth.height;
  raw.channels = 1;
  raw.bitDepth = 16;
  raw.rows.resize(depth.data.size() * 2);
  for (std::size_t i = 0; i < depth.data.size(); ++i) {
    const float m = depth.data[i];
    const long mm = (m > 0.f && std::isfinite(m)) ? std::lround(m * 1000.f) : 0;
    const auto v = static_cast<std::uint16_t>(std::clamp(mm, 0L, 65535L));
    raw.rows[i * 2] = static_cast<std::uint8_t>(v >> 8);
    raw.rows[i * 2 + 1] = static_cast<std::uint8_t>(v & 0xff);
  }
  write_file_bytes(path, encode_raw(raw));
}

Plane read_depth_png(const std::string& path) {
  PngRaw raw;
  try {
    raw = decode_raw(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (raw.channels != 1 || raw.bitDepth != 16) throw FormatError(path + ": expected a 16-bit grayscale PNG");
  Plane p(raw.width, raw.height);
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    const unsigned mm = (static_cast<unsigned>(raw.rows[i * 2]) << 8) | raw.rows[i * 2 + 1];
    p.data[i] = static_cast<float>(mm) / 1000.f;
  }
  return p;
}

void write_mask_png(const SegmentMask& mask, const std::string& path) {
  Image img(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.get(x, y)) img.set(x, y, {1.f, 1.f, 1.f});
    }
  }
  write_png(img, path);
}

json intrinsics_to_json(const CameraIntrinsics& k) {
  return json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics intrinsics_from_json(const json& j) {
  CameraIntrinsics k;
  try {
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("intrinsics: ") + e.what());
  }
  k.validate();
  return k;
}

json pose_to_json(const Pose& p) {
  json r = json::array();
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) r.push_back(p.rotation(i, k));
  }
  return json{{"T", {p.translation.x(), p.translation.y(), p.translation.z()}}, {"R", r}};
}

Pose pose_from_json(const json& j) {
  Pose p;
  try {
    const auto& t = j.at("T");
    const auto& r = j.at("R");
    if (t.size() != 3 || r.size() != 9) throw ConfigError("pose needs T[3] and R[9]");
    for (int i = 0; i < 3; ++i) p.translation[i] = t[i].get<double>();
    for (int i = 0; i < 9; ++i) p.rotation(i / 3, i % 3) = r[i].get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pose: ") + e.what());
  }
  return p;
}

json geometry_to_json(const PhoneGeometry& g) {
  json markers = json::array();
  for (const auto& m : g.markers) {
    json corners = json::array();
    for (const auto& c : m.corners) corners.push_back({c.x(), c.y()});
    std::string bits;
    for (auto b : m.bits) bits.push_back(b ? '1' : '0');
    markers.push_back({{"id", m.id}, {"corners", corners}, {"bits", bits}});
  }
  return json{{"screenWidth", g.screenWidth}, {"screenHeight", g.screenHeight}, {"markers", markers}};
}

PhoneGeometry geometry_from_json(const json& j) {
  PhoneGeometry g;
  try {
    g.screenWidth = j.at("screenWidth").get<double>();
    g.screenHeight = j.at("screenHeight").get<double>();
    if (!j.contains("markers")) {
      const int cols = j.value("markerCols", 2);
      const int rows = j.value("markerRows", 4);
      return PhoneGeometry::grid(g.screenWidth, g.screenHeight, cols, rows, j.value("markerFill", 0.74));
    }
    for (const auto& mj : j.at("markers")) {
      MarkerSpec m;
      m.id = mj.at("id").get<int>();
      const auto& cs = mj.at("corners");
      if (cs.size() != 4) throw ConfigError("marker needs 4 corners");
      for (int i = 0; i < 4; ++i) m.corners[i] = Vec3(cs[i][0].get<double>(), cs[i][1].get<double>(), 0.0);
      const auto bits = mj.at("bits").get<std::string>();
      if (bits.size() != m.bits.size()) throw ConfigError("marker bits must have 16 characters");
      for (std::size_t i = 0; i < bits.size(); ++i) m.bits[i] = bits[i] == '1';
      g.markers.push_back(m);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("phone geometry: ") + e.what());
  }
  g.validate();
  return g;
}

std::string frame_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", index);
  return buf;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_intrinsics(const CameraIntrinsics& k, const std::string& directory) {
  std::ofstream out(fs::path(directory) / "intrinsics.json");
  if (!out) throw IoError("cannot write intrinsics.json in " + directory);
  out << intrinsics_to_json(k).dump(2) << '\n';
}

void write_rgbd_frame(const RgbdFrame& frame, const std::string& directory, int index) {
  const fs::path dir(directory);
  write_png(frame.color, (dir / (frame_stem(index) + ".color.png")).string());
  write_depth_png(frame.depth, (dir / (frame_stem(index) + ".depth.png")).string());
}

std::vector<RgbdFrame> load_rgbd_sequence(const std::string& directory) {
  const fs::path dir(directory);
  if (!fs::is_directory(dir)) throw ConfigError("frame directory not found: " + directory);

  static const std::regex kPattern(R"((\d{6})\.(color|depth)\.png)");
  std::map<int, std::pair<fs::path, fs::path>> pairs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, kPattern)) continue;
    auto& slot = pairs[std::stoi(m[1].str())];
    (m[2] == "color" ? slot.first : slot.second) = entry.path();
  }
  if (pairs.empty()) return {};

  const fs::path intrPath = dir / "intrinsics.json";
  if (!fs::exists(intrPath)) throw ConfigError("intrinsics.json missing in " + directory);
  const CameraIntrinsics k = intrinsics_from_json(read_json_file(intrPath.string()));

  std::vector<RgbdFrame> frames;
  frames.reserve(pairs.size());
  for (const auto& [index, paths] : pairs) {
    if (paths.first.empty()) throw FormatError("missing colour image for frame " + frame_stem(index) + ".depth.png");
    if (paths.second.empty()) throw FormatError("missing depth image for frame " + frame_stem(index) + ".color.png");
    RgbdFrame f;
    f.intrinsics = k;
    f.color = read_png_rgb(paths.first.string());
    f.depth = read_depth_png(paths.second.string());
    if (f.color.width != k.width || f.color.height != k.height) {
      throw FormatError(paths.first.filename().string() + ": size does not match intrinsics");
    }
    if (f.depth.width != k.width || f.depth.height != k.height) {
      throw FormatError(paths.second.filename().string() + ": size does not match intrinsics");
    }
    f.timestampUs = static_cast<std::int64_t>(index) * 33333;
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace empathd
