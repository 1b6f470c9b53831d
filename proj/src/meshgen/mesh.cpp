#include <algorithm>
#include <cmath>
#include <limits>

#include "empathd/errors.hpp"
#include "empathd/meshgen.hpp"

namespace empathd {

std::vector<Vec3> lift_to_3d(const std::vector<PixelPoint>& points, const Plane& depth, const CameraIntrinsics& K,
                             double eyeOffset, const std::optional<InpaintContext>& inpaint) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  double fallbackDepth = 0.0;
  bool needFallback = false;
  for (const auto& p : points) {
    const float d = depth.at(p.x, p.y);
    needFallback = needFallback || !(d > 0.f);
  }
  if (needFallback && !inpaint) {
    std::vector<float> valid;
    for (const auto& p : points) {
      if (depth.at(p.x, p.y) > 0.f) valid.push_back(depth.at(p.x, p.y));
    }
    if (valid.empty()) throw GeometryError("no valid depth to lift the mesh");
    std::nth_element(valid.begin(), valid.begin() + valid.size() / 2, valid.end());
    fallbackDepth = valid[valid.size() / 2];
  }

  Vec3 planePoint = Vec3::Zero(), planeNormal = Vec3::UnitZ();
  if (inpaint) {
    planePoint = inpaint->pose.apply(Vec3(0, 0, inpaint->planeOffset));
    planeNormal = inpaint->pose.rotation.col(2);
  }

  for (const auto& p : points) {
    const double d = depth.at(p.x, p.y);
    Vec3 v;
    if (d > 0.0) {
      v = K.backproject(p.x, p.y, d);
    } else if (inpaint) {
      const Vec3 ray = K.ray(p.x, p.y);
      const double denom = planeNormal.dot(ray);
      const double t = std::abs(denom) > 1e-12 ? planeNormal.dot(planePoint) / denom : planePoint.z();
      v = ray * (t > 0 ? t : planePoint.z());
    } else {
      v = K.backproject(p.x, p.y, fallbackDepth);
    }
    v.z() += eyeOffset;
    out.push_back(v);
  }
  return out;
}

HandMesh build_mesh(const SegmentMask& mask, const RgbdFrame& frame, const MeshOptions& options) {
  HandMesh mesh;
  mesh.sourceFrameId = frame.timestampUs;
  const auto contours = trace_boundary(mask);
  const auto points = subsample_interior(mask, options.stride, contours);
  if (points.size() < 3) return mesh;
  mesh.triangles = triangulate(points, &mask);
  if (mesh.triangles.empty()) return mesh;
  mesh.vertices = lift_to_3d(points, frame.depth, frame.intrinsics, options.eyeOffset, options.inpaint);
  mesh.uv.reserve(points.size());
  for (const auto& p : points) mesh.uv.emplace_back(p.x, p.y);
  return mesh;
}

namespace {

double edge_fn(const Vec2& a, const Vec2& b, double px, double py) {
  return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

}  // namespace

Raster rasterize(const HandMesh& mesh, const Image& sourceColor, const CameraIntrinsics* K) {
  const int w = K ? K->width : sourceColor.width;
  const int h = K ? K->height : sourceColor.height;
  Raster r;
  r.color = Image(w, h);
  r.coverage = SegmentMask(w, h);
  r.depth = Plane(w, h, 0.f);
  if (mesh.empty() || sourceColor.empty()) return r;

  std::vector<Vec2> screen(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    screen[i] = K ? K->project(mesh.vertices[i]) : mesh.uv[i];
  }
  constexpr double kSlack = 1e-9;
  for (const auto& tri : mesh.triangles) {
    const Vec2 &a = screen[tri[0]], &b = screen[tri[1]], &c = screen[tri[2]];
    const double area = edge_fn(a, b, c.x(), c.y());
    if (std::abs(area) < 1e-12) continue;
    const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({a.x(), b.x(), c.x()}) - kSlack)));
    const int x1 = std::min(w - 1, static_cast<int>(std::floor(std::max({a.x(), b.x(), c.x()}) + kSlack)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({a.y(), b.y(), c.y()}) - kSlack)));
    const int y1 = std::min(h - 1, static_cast<int>(std::floor(std::max({a.y(), b.y(), c.y()}) + kSlack)));
    const Vec2 &ua = mesh.uv[tri[0]], &ub = mesh.uv[tri[1]], &uc = mesh.uv[tri[2]];
    const double za = mesh.vertices[tri[0]].z(), zb = mesh.vertices[tri[1]].z(), zc = mesh.vertices[tri[2]].z();
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double wa = edge_fn(b, c, x, y) / area;
        const double wb = edge_fn(c, a, x, y) / area;
        const double wc = 1.0 - wa - wb;
        if (wa < -kSlack || wb < -kSlack || wc < -kSlack) continue;
        const double z = wa * za + wb * zb + wc * zc;
        const std::size_t idx = static_cast<std::size_t>(y) * w + x;
        if (r.coverage.bits[idx] && r.depth.data[idx] <= z) continue;
        const Vec2 uv = wa * ua + wb * ub + wc * uc;
        const int sx = std::clamp(static_cast<int>(std::lround(uv.x())), 0, sourceColor.width - 1);
        const int sy = std::clamp(static_cast<int>(std::lround(uv.y())), 0, sourceColor.height - 1);
        r.coverage.bits[idx] = 1;
        r.depth.data[idx] = static_cast<float>(z);
        std::copy_n(sourceColor.at(sx, sy), 3, r.color.at(x, y));
      }
    }
  }
  return r;
}

nlohmann::json mesh_to_json(const HandMesh& mesh) {
  nlohmann::json j;
  j["sourceFrameId"] = mesh.sourceFrameId;
  auto& v = j["vertices"] = nlohmann::json::array();
  for (const auto& p : mesh.vertices) v.push_back({p.x(), p.y(), p.z()});
  auto& t = j["triangles"] = nlohmann::json::array();
  for (const auto& tri : mesh.triangles) t.push_back({tri[0], tri[1], tri[2]});
  auto& uv = j["uv"] = nlohmann::json::array();
  for (const auto& p : mesh.uv) uv.push_back({p.x(), p.y()});
  return j;
}

HandMesh mesh_from_json(const nlohmann::json& j) {
  try {
    HandMesh m;
    m.sourceFrameId = j.value("sourceFrameId", std::int64_t{0});
    for (const auto& p : j.at("vertices")) m.vertices.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    for (const auto& t : j.at("triangles")) {
      Triangle tri{t.at(0).get<std::uint32_t>(), t.at(1).get<std::uint32_t>(), t.at(2).get<std::uint32_t>()};
      for (auto i : tri) {
        if (i >= m.vertices.size()) throw FormatError("mesh triangle index out of range");
      }
      m.triangles.push_back(tri);
    }
    for (const auto& p : j.at("uv")) m.uv.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    if (m.uv.size() != m.vertices.size()) throw FormatError("mesh uv count differs from vertex count");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed mesh json: ") + e.what());
  }
}

}  // namespace empathd
