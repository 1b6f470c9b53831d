#pragma once

#include <array>
#include <vector>

#include "empathd/geometry.hpp"

namespace empathd {

// Exact homography from four point pairs (dst ~ H * src).
Mat3 homography_from_4(const std::array<Vec2, 4>& src, const std::array<Vec2, 4>& dst);

// Unit square corners (0,0),(1,0),(1,1),(0,1) -> quad.
Mat3 unit_square_to_quad(const std::array<Vec2, 4>& quad);

// Least-squares homography from >= 4 pairs via the Hartley-normalised DLT.
Mat3 homography_dlt(const std::vector<Vec2>& src, const std::vector<Vec2>& dst);

inline Vec2 apply_homography(const Mat3& H, const Vec2& p) {
  const Vec3 q = H * Vec3(p.x(), p.y(), 1.0);
  return {q.x() / q.z(), q.y() / q.z()};
}

}  // namespace empathd
