#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "empathd/geometry.hpp"
#include "empathd/image.hpp"

namespace empathd {

struct PixelPoint {
  int x = 0;
  int y = 0;
  bool operator==(const PixelPoint&) const = default;
  auto operator<=>(const PixelPoint&) const = default;
};

using Contour = std::vector<PixelPoint>;
using Triangle = std::array<std::uint32_t, 3>;

struct HandMesh {
  std::vector<Vec3> vertices;  // camera metres, eye offset applied
  std::vector<Triangle> triangles;
  std::vector<Vec2> uv;  // pixel coordinates into the source colour image
  std::int64_t sourceFrameId = 0;

  bool empty() const { return triangles.empty(); }
};

// Foreground pixels with at least one 4-neighbour in the background (pixels
// outside the image count as background).
SegmentMask boundary_mask(const SegmentMask& mask);

// Closed boundary loops; every boundary pixel belongs to exactly one contour.
std::vector<Contour> trace_boundary(const SegmentMask& mask);

// Contour pixels plus interior pixels on the (row % stride == 0, col % stride == 0) grid.
std::vector<PixelPoint> subsample_interior(const SegmentMask& mask, int stride, const std::vector<Contour>& contours);

// Delaunay triangulation (Bowyer-Watson). Points are 2-D pixel coordinates.
std::vector<Triangle> delaunay(const std::vector<Vec2>& points);

// Delaunay over pixel points, dropping triangles whose centroid is background
// when a mask is given.
std::vector<Triangle> triangulate(const std::vector<PixelPoint>& points, const SegmentMask* mask);

struct InpaintContext {
  Pose pose;
  double planeOffset = 0.01;  // metres above the screen (ROI midpoint)
};

inline constexpr double kDefaultEyeOffset = 0.07;

// Back-projects each point and pushes it eyeOffset further along z. Points
// with invalid depth take the phone-plane depth along their ray at the
// inpaint offset; without a context they fall back to the median valid depth.
std::vector<Vec3> lift_to_3d(const std::vector<PixelPoint>& points, const Plane& depth, const CameraIntrinsics& K,
                             double eyeOffset = kDefaultEyeOffset, const std::optional<InpaintContext>& inpaint = {});

struct MeshOptions {
  int stride = 32;
  double eyeOffset = kDefaultEyeOffset;
  std::optional<InpaintContext> inpaint;
};

HandMesh build_mesh(const SegmentMask& mask, const RgbdFrame& frame, const MeshOptions& options);

struct Raster {
  Image color;
  SegmentMask coverage;
  Plane depth;  // z of the covering surface, 0 where uncovered
};

// Fills triangles with nearest-neighbour texture samples of the
// barycentric-interpolated uv. With K the vertices are projected through it
// (output K.width x K.height); without K they are placed at their uv, which
// reproduces the source view at the source size. Nearer depth wins.
Raster rasterize(const HandMesh& mesh, const Image& sourceColor, const CameraIntrinsics* K = nullptr);

// Mean SSIM over all full windows (uniform window, K1=0.01, K2=0.03, L=1),
// averaged over colour channels. Throws FormatError on a dimension mismatch.
double ssim(const Image& a, const Image& b, int window = 7);
double ssim_plane(const Plane& a, const Plane& b, int window = 7);

nlohmann::json mesh_to_json(const HandMesh& mesh);
HandMesh mesh_from_json(const nlohmann::json& j);

// Bounding box (x0, y0, w, h) of the foreground, or nullopt for an empty mask.
std::optional<std::array<int, 4>> mask_bbox(const SegmentMask& mask);

}  // namespace empathd
