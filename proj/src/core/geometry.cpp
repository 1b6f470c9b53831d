#include "empathd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include <Eigen/SVD>

#include "empathd/errors.hpp"

namespace empathd {

bool CameraIntrinsics::valid() const {
  return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 && cx < width && cy >= 0.0 &&
         cy < height && std::isfinite(fx) && std::isfinite(fy);
}

void CameraIntrinsics::validate() const {
  if (!valid()) {
    throw ConfigError("invalid camera intrinsics: need fx>0, fy>0, 0<=cx<width, 0<=cy<height");
  }
}

Pose Pose::frontal(const Vec3& t) {
  Pose p;
  p.translation = t;
  p.rotation = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
  return p;
}

Pose Pose::from_yaw_pitch_roll(const Vec3& t, double yawRad, double pitchRad, double rollRad) {
  Pose p = frontal(t);
  const Mat3 yaw = Eigen::AngleAxisd(yawRad, Vec3::UnitY()).toRotationMatrix();
  const Mat3 pitch = Eigen::AngleAxisd(pitchRad, Vec3::UnitX()).toRotationMatrix();
  const Mat3 roll = Eigen::AngleAxisd(rollRad, Vec3::UnitZ()).toRotationMatrix();
  p.rotation = yaw * pitch * roll * p.rotation;
  return p;
}

bool Pose::valid(double tol) const {
  if (!translation.allFinite() || !rotation.allFinite()) return false;
  const Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
  if (err.cwiseAbs().maxCoeff() >= tol) return false;
  return std::abs(rotation.determinant() - 1.0) < tol;
}

void Pose::validate() const {
  if (!valid()) throw GeometryError("pose rotation is not orthonormal with determinant +1");
}

Pose Pose::inverse() const {
  Pose p;
  p.rotation = rotation.transpose();
  p.translation = -(p.rotation * translation);
  return p;
}

Pose Pose::compose(const Pose& inner) const {
  Pose p;
  p.rotation = rotation * inner.rotation;
  p.translation = rotation * inner.translation + translation;
  return p;
}

Pose Pose::orthonormalized() const {
  Eigen::JacobiSVD<Mat3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  Pose p = *this;
  p.rotation = r;
  return p;
}

Vec3 to_phone_coords(const Vec3& point, const Pose& pose) {
  return pose.rotation.transpose() * (point - pose.translation);
}

Vec3 from_phone_coords(const Vec3& point, const Pose& pose) { return pose.apply(point); }

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Mat3 d = a.transpose() * b;
  const double c = std::clamp((d.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

MarkerBits rotate_bits_cw(const MarkerBits& bits) {
  constexpr int n = kMarkerDataBits;
  MarkerBits out{};
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      // Cell (r, c) moves to (c, n-1-r) under a clockwise quarter turn.
      out[c * n + (n - 1 - r)] = bits[r * n + c];
    }
  }
  return out;
}

int hamming(const MarkerBits& a, const MarkerBits& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

std::vector<MarkerBits> marker_dictionary(int count) {
  constexpr int kMinDistance = 4;
  std::mt19937_64 rng(0x5EED'0D1C'7A3Bull);
  std::vector<MarkerBits> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > 200000) throw ConfigError("cannot build marker dictionary of size " + std::to_string(count));
    MarkerBits cand{};
    const std::uint64_t word = rng();
    int ink = 0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      cand[i] = (word >> i) & 1u;
      ink += cand[i];
    }
    if (ink < 5 || ink > 11) continue;

    bool ok = true;
    MarkerBits rot = cand;
    for (int k = 1; k < 4 && ok; ++k) {
      rot = rotate_bits_cw(rot);
      ok = hamming(rot, cand) >= kMinDistance;
    }
    for (const auto& existing : out) {
      MarkerBits r = cand;
      for (int k = 0; k < 4 && ok; ++k) {
        ok = hamming(r, existing) >= kMinDistance;
        r = rotate_bits_cw(r);
      }
      if (!ok) break;
    }
    if (ok) out.push_back(cand);
  }
  return out;
}

PhoneGeometry PhoneGeometry::grid(double screenWidth, double screenHeight, int cols, int rows,
                                  double fillFraction) {
  if (cols < 1 || rows < 1) throw ConfigError("marker grid needs at least one row and column");
  PhoneGeometry g;
  g.screenWidth = screenWidth;
  g.screenHeight = screenHeight;
  const auto patterns = marker_dictionary(cols * rows);
  const double cw = screenWidth / cols;
  const double ch = screenHeight / rows;
  const double side = fillFraction * std::min(cw, ch);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double mx = -screenWidth / 2 + (c + 0.5) * cw;
      const double my = screenHeight / 2 - (r + 0.5) * ch;
      const double h = side / 2;
      MarkerSpec m;
      m.id = r * cols + c;
      m.corners = {Vec3(mx - h, my + h, 0), Vec3(mx + h, my + h, 0), Vec3(mx + h, my - h, 0),
                   Vec3(mx - h, my - h, 0)};
      m.bits = patterns[m.id];
      g.markers.push_back(m);
    }
  }
  return g;
}

const MarkerSpec* PhoneGeometry::find(int id) const {
  for (const auto& m : markers) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

std::array<Vec3, 4> PhoneGeometry::screen_corners() const {
  const double w = screenWidth / 2, h = screenHeight / 2;
  return {Vec3(-w, h, 0), Vec3(w, h, 0), Vec3(w, -h, 0), Vec3(-w, -h, 0)};
}

namespace {

bool convex_quad(const std::array<Vec3, 4>& q) {
  int sign = 0;
  for (int i = 0; i < 4; ++i) {
    const Vec3& a = q[i];
    const Vec3& b = q[(i + 1) % 4];
    const Vec3& c = q[(i + 2) % 4];
    const double cross = (b.x() - a.x()) * (c.y() - b.y()) - (b.y() - a.y()) * (c.x() - b.x());
    if (std::abs(cross) < 1e-15) return false;
    const int s = cross > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign) return false;
  }
  return true;
}

}  // namespace

void PhoneGeometry::validate() const {
  if (!(screenWidth > 0.0 && screenHeight > 0.0)) throw ConfigError("screen dimensions must be positive");
  if (markers.empty()) throw ConfigError("phone geometry needs at least one marker");
  std::set<int> ids;
  for (const auto& m : markers) {
    if (!ids.insert(m.id).second) throw ConfigError("duplicate marker id " + std::to_string(m.id));
    for (const auto& c : m.corners) {
      if (c.z() != 0.0) throw ConfigError("marker " + std::to_string(m.id) + " corner not on the screen plane");
    }
    if (!convex_quad(m.corners)) throw ConfigError("marker " + std::to_string(m.id) + " corners are not a convex quad");
  }
}

bool VirtualDisplayConfig::valid() const {
  if (streamWidth <= 0 || streamHeight <= 0 || !(magnification >= 1.0)) return false;
  const double ratio = static_cast<double>(streamWidth) / streamHeight;
  return std::abs(ratio / (9.0 / 16.0) - 1.0) <= 0.01;
}

}  // namespace empathd
