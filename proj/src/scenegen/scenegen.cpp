#include "empathd/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "empathd/errors.hpp"
#include "empathd/homography.hpp"
#include "empathd/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace empathd {

HandSpec HandSpec::finger(double cx, double cy, double width, double length, double hover) {
  HandSpec h;
  h.hoverHeight = hover;
  const double r = width / 2;
  const double half = std::max(0.0, length / 2 - r);
  constexpr int kCap = 16;
  // Top cap, then bottom cap, counter-clockwise.
  for (int i = 0; i <= kCap; ++i) {
    const double a = M_PI * i / kCap;
    h.outline.emplace_back(cx + r * std::cos(a), cy + half + r * std::sin(a));
  }
  for (int i = 0; i <= kCap; ++i) {
    const double a = M_PI + M_PI * i / kCap;
    h.outline.emplace_back(cx + r * std::cos(a), cy - half + r * std::sin(a));
  }
  return h;
}

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = cross2(q2 - q1, p1 - q1);
  const double d2 = cross2(q2 - q1, p2 - q1);
  const double d3 = cross2(p2 - p1, q1 - p1);
  const double d4 = cross2(p2 - p1, q2 - p1);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

struct MarkerRaster {
  Eigen::Matrix3d phoneToUnit;  // inverse homography
  double minX, maxX, minY, maxY;
  const MarkerSpec* spec;
};

// Cell under a screen point as markerIndex * cells + cellIndex, or -1 off every marker.
int marker_cell(const std::vector<MarkerRaster>& markers, const Vec2& q) {
  for (std::size_t i = 0; i < markers.size(); ++i) {
    const MarkerRaster& m = markers[i];
    if (q.x() < m.minX || q.x() > m.maxX || q.y() < m.minY || q.y() > m.maxY) continue;
    const Eigen::Vector3d s = m.phoneToUnit * Eigen::Vector3d(q.x(), q.y(), 1.0);
    const double a = s.x() / s.z(), b = s.y() / s.z();
    if (a < 0.0 || a > 1.0 || b < 0.0 || b > 1.0) continue;
    const int col = std::min(kMarkerCells - 1, static_cast<int>(a * kMarkerCells));
    const int row = std::min(kMarkerCells - 1, static_cast<int>(b * kMarkerCells));
    return static_cast<int>(i) * kMarkerCells * kMarkerCells + row * kMarkerCells + col;
  }
  return -1;
}

bool cell_is_ink(const std::vector<MarkerRaster>& markers, int key) {
  if (key < 0) return false;
  constexpr int kCellsPerMarker = kMarkerCells * kMarkerCells;
  const int row = (key % kCellsPerMarker) / kMarkerCells, col = key % kMarkerCells;
  if (row == 0 || col == 0 || row == kMarkerCells - 1 || col == kMarkerCells - 1) return true;
  return markers[key / kCellsPerMarker].spec->bits[(row - 1) * kMarkerDataBits + (col - 1)] != 0;
}

}  // namespace

bool polygon_is_simple(const std::vector<Vec2>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // adjacent edges share a vertex
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

bool point_in_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

RenderResult render(const SceneSpec& spec) {
  const CameraIntrinsics& K = spec.intrinsics;
  K.validate();
  spec.phonePose.validate();
  const PhoneGeometry& geo = spec.phoneGeometry;
  geo.validate();

  const auto screen = geo.screen_corners();
  std::array<Vec2, 4> screenPx;
  for (int i = 0; i < 4; ++i) {
    const Vec3 c = spec.phonePose.apply(screen[i]);
    if (!(c.z() > 0.0)) throw GeometryError("phone screen is behind the camera");
    screenPx[i] = K.project(c);
  }
  double area = 0.0;
  for (int i = 0; i < 4; ++i) area += cross2(screenPx[i], screenPx[(i + 1) % 4]);
  if (std::abs(area) / 2.0 < 1.0) throw GeometryError("phone screen projects to zero area");

  if (spec.handSpec) {
    if (spec.handSpec->hoverHeight < 0.0) throw GeometryError("hand hover height must be >= 0");
    if (!polygon_is_simple(spec.handSpec->outline)) throw GeometryError("hand outline is not a simple polygon");
  }

  std::vector<MarkerRaster> markers;
  for (const auto& m : geo.markers) {
    std::array<Vec2, 4> quad;
    MarkerRaster r{};
    r.minX = r.minY = 1e9;
    r.maxX = r.maxY = -1e9;
    for (int i = 0; i < 4; ++i) {
      quad[i] = m.corners[i].head<2>();
      r.minX = std::min(r.minX, quad[i].x());
      r.maxX = std::max(r.maxX, quad[i].x());
      r.minY = std::min(r.minY, quad[i].y());
      r.maxY = std::max(r.maxY, quad[i].y());
    }
    r.phoneToUnit = unit_square_to_quad(quad).inverse();
    r.spec = &m;
    markers.push_back(r);
  }

  double handMinX = 0, handMaxX = 0, handMinY = 0, handMaxY = 0;
  if (spec.handSpec) {
    handMinX = handMinY = 1e9;
    handMaxX = handMaxY = -1e9;
    for (const auto& p : spec.handSpec->outline) {
      handMinX = std::min(handMinX, p.x());
      handMaxX = std::max(handMaxX, p.x());
      handMinY = std::min(handMinY, p.y());
      handMaxY = std::max(handMaxY, p.y());
    }
  }

  const Mat3 Rt = spec.phonePose.rotation.transpose();
  const Vec3 origin = -(Rt * spec.phonePose.translation);  // camera centre in phone frame
  const float bgDepth = static_cast<float>(spec.backgroundDepth);
  const double halfW = geo.screenWidth / 2, halfH = geo.screenHeight / 2;

  RenderResult out;
  RgbdFrame& frame = out.frame;
  frame.intrinsics = K;
  frame.timestampUs = spec.timestampUs;
  frame.color = Image(K.width, K.height);
  frame.depth = Plane(K.width, K.height);
  out.truth.pose = spec.phonePose;
  out.truth.handMask = SegmentMask(K.width, K.height);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.depthNoiseSigma > 0 ? spec.depthNoiseSigma : 1.0);

  const Rgb cyan{0.f, 1.f, 1.f}, blue{0.f, 0.f, 1.f};
  // Marker ink is area-averaged over the pixel footprint so edges carry sub-pixel position.
  auto screen_hit = [&](double u, double v, Vec2& q) {
    const Vec3 d = Rt * K.ray(u, v);
    if (std::abs(d.z()) <= 1e-12) return false;
    const double t = -origin.z() / d.z();
    if (t <= 0.0) return false;
    q = (origin + t * d).head<2>();
    return true;
  };
  auto cell_at = [&](double u, double v) {
    Vec2 q;
    return screen_hit(u, v, q) ? marker_cell(markers, q) : -1;
  };
  auto ink_coverage = [&](int u, int v) {
    const int k = cell_at(u - 0.5, v - 0.5);
    if (k == cell_at(u + 0.5, v - 0.5) && k == cell_at(u - 0.5, v + 0.5) && k == cell_at(u + 0.5, v + 0.5)) {
      return cell_is_ink(markers, k) ? 1.0 : 0.0;
    }
    constexpr int kSub = 16;
    int hits = 0;
    for (int j = 0; j < kSub; ++j) {
      for (int i = 0; i < kSub; ++i) {
        hits += cell_is_ink(markers, cell_at(u - 0.5 + (i + 0.5) / kSub, v - 0.5 + (j + 0.5) / kSub));
      }
    }
    return static_cast<double>(hits) / (kSub * kSub);
  };
  for (int v = 0; v < K.height; ++v) {
    for (int u = 0; u < K.width; ++u) {
      const Vec3 dp = Rt * K.ray(u, v);
      Rgb color = spec.backgroundColor;
      double depth = bgDepth;
      bool onScreen = false;
      bool onHand = false;
      if (std::abs(dp.z()) > 1e-12) {
        const double t = -origin.z() / dp.z();
        if (t > 0.0) {
          const Vec3 q = origin + t * dp;
          if (std::abs(q.x()) <= halfW && std::abs(q.y()) <= halfH) {
            onScreen = true;
            depth = t;
            const double ink = ink_coverage(u, v);
            for (int c = 0; c < 3; ++c) color[c] = static_cast<float>(cyan[c] + ink * (blue[c] - cyan[c]));
          }
        }
        if (spec.handSpec) {
          const HandSpec& hand = *spec.handSpec;
          const double th = (hand.hoverHeight - origin.z()) / dp.z();
          if (th > 0.0 && (!onScreen || th <= depth)) {
            const Vec3 q = origin + th * dp;
            if (q.x() >= handMinX && q.x() <= handMaxX && q.y() >= handMinY && q.y() <= handMaxY &&
                point_in_polygon(hand.outline, q.head<2>())) {
              onHand = true;
              onScreen = false;
              depth = th;
              const double shade = 1.0 + hand.textureAmplitude * std::sin(2 * M_PI * q.x() / 0.011) *
                                             std::sin(2 * M_PI * q.y() / 0.017);
              for (int c = 0; c < 3; ++c) color[c] = static_cast<float>(hand.skinColor[c] * shade);
            }
          }
        }
      }
      if (spec.depthNoiseSigma > 0.0 && depth > 0.0) depth += noise(rng);
      if (onScreen && spec.glossyScreen) depth = 0.0;
      for (auto& c : color) c = quantize_channel(c);
      frame.color.set(u, v, color);
      frame.depth.at(u, v) = quantize_depth(static_cast<float>(depth));
      if (onHand) out.truth.handMask.set(u, v, true);
    }
  }

  for (const auto& m : geo.markers) {
    std::array<Vec2, 4> px;
    for (int i = 0; i < 4; ++i) px[i] = K.project(spec.phonePose.apply(m.corners[i]));
    out.truth.markerCornersPx[m.id] = px;
  }
  return out;
}

json truth_to_json(const GroundTruth& t, int frameIndex) {
  json j = pose_to_json(t.pose);
  j["frame"] = frameIndex;
  j["maskRle"] = mask_to_rle(t.handMask);
  json markers = json::object();
  for (const auto& [id, corners] : t.markerCornersPx) {
    json cs = json::array();
    for (const auto& c : corners) cs.push_back({c.x(), c.y()});
    markers[std::to_string(id)] = cs;
  }
  j["markers"] = markers;
  return j;
}

GroundTruth truth_from_json(const json& j, int width, int height) {
  GroundTruth t;
  t.pose = pose_from_json(j);
  t.handMask = mask_from_rle(j.at("maskRle").get<std::vector<std::uint32_t>>(), width, height);
  for (const auto& [key, cs] : j.at("markers").items()) {
    std::array<Vec2, 4> corners;
    for (int i = 0; i < 4; ++i) corners[i] = Vec2(cs[i][0].get<double>(), cs[i][1].get<double>());
    t.markerCornersPx[std::stoi(key)] = corners;
  }
  return t;
}

std::vector<GroundTruth> load_truth(const std::string& directory, int width, int height) {
  const auto path = (fs::path(directory) / "truth.jsonl").string();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<GroundTruth> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(truth_from_json(json::parse(line), width, height));
    } catch (const json::exception& e) {
      throw FormatError(path + ": " + e.what());
    }
  }
  return out;
}

void render_sequence(const std::vector<SceneSpec>& specs, const std::string& outDir) {
  if (specs.empty()) throw ConfigError("render_sequence needs at least one scene spec");
  std::error_code ec;
  fs::create_directories(outDir, ec);
  if (ec) throw IoError("cannot create " + outDir + ": " + ec.message());
  for (const auto& s : specs) {
    if (!(s.intrinsics == specs.front().intrinsics)) throw ConfigError("all frames of a sequence must share intrinsics");
  }
  write_intrinsics(specs.front().intrinsics, outDir);
  const auto truthPath = (fs::path(outDir) / "truth.jsonl").string();
  std::ofstream truth(truthPath);
  if (!truth) throw IoError("cannot write " + truthPath);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const RenderResult r = render(specs[i]);
    write_rgbd_frame(r.frame, outDir, static_cast<int>(i));
    truth << truth_to_json(r.truth, static_cast<int>(i)).dump() << '\n';
  }
}

std::vector<SceneSpec> orbit_sequence(const SceneSpec& base, int count, double yawMinDeg, double yawMaxDeg,
                                      double distMin, double distMax) {
  std::vector<SceneSpec> out;
  for (int i = 0; i < count; ++i) {
    const double f = count > 1 ? static_cast<double>(i) / (count - 1) : 0.0;
    SceneSpec s = base;
    const double yaw = (yawMinDeg + f * (yawMaxDeg - yawMinDeg)) * M_PI / 180.0;
    const double dist = distMin + f * (distMax - distMin);
    s.phonePose = Pose::from_yaw_pitch_roll(Vec3(0, 0, dist), yaw, 0.0, 0.0);
    s.timestampUs = static_cast<std::int64_t>(i) * 33333;
    s.seed = base.seed + static_cast<std::uint64_t>(i);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace empathd
