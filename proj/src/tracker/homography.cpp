#include "empathd/homography.hpp"

#include <Eigen/Dense>

#include "empathd/errors.hpp"

namespace empathd {

Mat3 homography_from_4(const std::array<Vec2, 4>& src, const std::array<Vec2, 4>& dst) {
  Eigen::Matrix<double, 8, 8> A;
  Eigen::Matrix<double, 8, 1> rhs;
  for (int i = 0; i < 4; ++i) {
    const double x = src[i].x(), y = src[i].y(), u = dst[i].x(), v = dst[i].y();
    A.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    A.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    rhs(2 * i) = u;
    rhs(2 * i + 1) = v;
  }
  const Eigen::Matrix<double, 8, 1> h = A.fullPivLu().solve(rhs);
  Mat3 H;
  H << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
  return H;
}

Mat3 unit_square_to_quad(const std::array<Vec2, 4>& quad) {
  return homography_from_4({Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)}, quad);
}

namespace {

// Similarity transform taking points to zero mean and mean distance sqrt(2).
Mat3 normalizer(const std::vector<Vec2>& pts) {
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double dist = 0.0;
  for (const auto& p : pts) dist += (p - mean).norm();
  dist /= static_cast<double>(pts.size());
  const double s = dist > 0 ? std::sqrt(2.0) / dist : 1.0;
  Mat3 T;
  T << s, 0, -s * mean.x(), 0, s, -s * mean.y(), 0, 0, 1;
  return T;
}

}  // namespace

Mat3 homography_dlt(const std::vector<Vec2>& src, const std::vector<Vec2>& dst) {
  if (src.size() != dst.size() || src.size() < 4) throw EstimationError("homography needs >= 4 point pairs");
  const Mat3 Ts = normalizer(src), Td = normalizer(dst);
  const auto n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd A(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2 s = apply_homography(Ts, src[i]);
    const Vec2 d = apply_homography(Td, dst[i]);
    const double x = s.x(), y = s.y(), u = d.x(), v = d.y();
    A.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    A.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 Hn;
  Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Mat3 H = Td.inverse() * Hn * Ts;
  return H / H(2, 2);
}

}  // namespace empathd
