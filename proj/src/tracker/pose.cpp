#include <cmath>

#include <Eigen/Dense>

#include "empathd/errors.hpp"
#include "empathd/homography.hpp"
#include "empathd/tracker.hpp"

namespace empathd {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

Mat3 exp_so3(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-15) return Mat3::Identity() + skew(w);
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

double squared_error(const Pose& pose, const std::vector<Vec3>& obj, const std::vector<Vec2>& img,
                     const CameraIntrinsics& K) {
  double sum = 0.0;
  for (std::size_t i = 0; i < obj.size(); ++i) {
    const Vec3 pc = pose.apply(obj[i]);
    if (pc.z() <= 0.0) return std::numeric_limits<double>::infinity();
    sum += (K.project(pc) - img[i]).squaredNorm();
  }
  return sum;
}

// Gauss-Newton on pixel re-projection error with a left-multiplied rotation update.
int refine(Pose& pose, const std::vector<Vec3>& obj, const std::vector<Vec2>& img, const CameraIntrinsics& K) {
  constexpr int kMaxIterations = 20;
  double cost = squared_error(pose, obj, img, K);
  int it = 0;
  for (; it < kMaxIterations; ++it) {
    Eigen::Matrix<double, 6, 6> JtJ = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> Jtr = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t i = 0; i < obj.size(); ++i) {
      const Vec3 rp = pose.rotation * obj[i];
      const Vec3 pc = rp + pose.translation;
      const double iz = 1.0 / pc.z();
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << K.fx * iz, 0, -K.fx * pc.x() * iz * iz, 0, K.fy * iz, -K.fy * pc.y() * iz * iz;
      Eigen::Matrix<double, 3, 6> dp;
      dp.leftCols<3>() = -skew(rp);
      dp.rightCols<3>() = Mat3::Identity();
      const Eigen::Matrix<double, 2, 6> J = dproj * dp;
      const Vec2 r = K.project(pc) - img[i];
      JtJ += J.transpose() * J;
      Jtr += J.transpose() * r;
    }
    const Eigen::Matrix<double, 6, 1> delta = -JtJ.ldlt().solve(Jtr);
    if (!delta.allFinite()) break;
    Pose next = pose;
    next.rotation = exp_so3(delta.head<3>()) * pose.rotation;
    next.translation = pose.translation + delta.tail<3>();
    const double nextCost = squared_error(next, obj, img, K);
    if (!(nextCost <= cost)) break;
    pose = next.orthonormalized();
    cost = nextCost;
    if (delta.norm() < 1e-9) {
      ++it;
      break;
    }
  }
  return it;
}

}  // namespace

double rms_reprojection_error(const Pose& pose, const std::vector<Vec3>& objectPoints,
                              const std::vector<Vec2>& imagePoints, const CameraIntrinsics& K) {
  if (objectPoints.empty()) return 0.0;
  return std::sqrt(squared_error(pose, objectPoints, imagePoints, K) / static_cast<double>(objectPoints.size()));
}

PoseEstimate estimate_pose_from_points(const std::vector<Vec3>& obj, const std::vector<Vec2>& img,
                                       const CameraIntrinsics& K) {
  if (obj.size() != img.size()) throw EstimationError("object/image point count mismatch");
  if (obj.size() < 4) throw EstimationError("pose estimation needs at least 4 corners, got " + std::to_string(obj.size()));

  std::vector<Vec2> plane, normalized;
  Vec2 mean = Vec2::Zero();
  for (const auto& p : obj) mean += p.head<2>();
  mean /= static_cast<double>(obj.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < obj.size(); ++i) {
    if (std::abs(obj[i].z()) > 1e-12) throw EstimationError("object points must lie on the screen plane");
    plane.push_back(obj[i].head<2>());
    normalized.emplace_back((img[i].x() - K.cx) / K.fx, (img[i].y() - K.cy) / K.fy);
    cov += (plane.back() - mean) * (plane.back() - mean).transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  if (es.eigenvalues()(0) <= 1e-12 * std::max(1e-30, es.eigenvalues()(1))) {
    throw EstimationError("degenerate corner configuration (collinear)");
  }

  const Mat3 H = homography_dlt(plane, normalized);
  Vec3 h1 = H.col(0), h2 = H.col(1), h3 = H.col(2);
  const double scale = 2.0 / (h1.norm() + h2.norm());
  h1 *= scale;
  h2 *= scale;
  h3 *= scale;
  // Keep the screen in front of the camera.
  if (h3.z() < 0) {
    h1 = -h1;
    h2 = -h2;
    h3 = -h3;
  }
  Pose pose;
  pose.rotation.col(0) = h1;
  pose.rotation.col(1) = h2;
  pose.rotation.col(2) = h1.cross(h2);
  pose.translation = h3;
  pose = pose.orthonormalized();
  if (!pose.translation.allFinite() || !pose.rotation.allFinite()) throw EstimationError("homography decomposition failed");

  PoseEstimate est;
  est.iterations = refine(pose, obj, img, K);
  est.pose = pose;
  est.correspondences = static_cast<int>(obj.size());
  est.rmsResidualPx = rms_reprojection_error(pose, obj, img, K);
  return est;
}

PoseEstimate estimate_pose(const std::vector<MarkerDetection>& detections, const PhoneGeometry& geometry,
                           const CameraIntrinsics& K) {
  std::vector<Vec3> obj;
  std::vector<Vec2> img;
  for (const auto& d : detections) {
    const MarkerSpec* m = geometry.find(d.markerId);
    if (!m) continue;
    for (int i = 0; i < 4; ++i) {
      obj.push_back(m->corners[i]);
      img.push_back(d.corners[i]);
    }
  }
  return estimate_pose_from_points(obj, img, K);
}

namespace {

std::vector<Vec2> clip_against(const std::vector<Vec2>& poly, int axis, double bound, bool keepGreater) {
  std::vector<Vec2> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const bool ina = keepGreater ? a[axis] >= bound : a[axis] <= bound;
    const bool inb = keepGreater ? b[axis] >= bound : b[axis] <= bound;
    if (ina) out.push_back(a);
    if (ina != inb) {
      const double t = (bound - a[axis]) / (b[axis] - a[axis]);
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

}  // namespace

std::vector<Vec2> project_screen_border(const Pose& pose, const PhoneGeometry& geometry, const CameraIntrinsics& K) {
  std::vector<Vec2> poly;
  for (const auto& c : geometry.screen_corners()) {
    const Vec3 pc = pose.apply(c);
    if (!(pc.z() > 0.0)) throw GeometryError("screen corner behind the camera");
    poly.push_back(K.project(pc));
  }
  // Pixel extents: centres are integers, so the image spans [-0.5, size-0.5].
  poly = clip_against(poly, 0, -0.5, true);
  if (!poly.empty()) poly = clip_against(poly, 0, K.width - 0.5, false);
  if (!poly.empty()) poly = clip_against(poly, 1, -0.5, true);
  if (!poly.empty()) poly = clip_against(poly, 1, K.height - 0.5, false);
  return poly;
}

}  // namespace empathd
