#include "propslam/simd/kernels.hpp"

#include <array>

namespace propslam::simd::scalar {

void squared_distances(const Vec3& q, PointsView pts, std::span<double> out) {
  const double qx = q.x();
  const double qy = q.y();
  const double qz = q.z();
  for (std::size_t i = 0; i < pts.n; ++i) {
    const double dx = pts.x[i] - qx;
    const double dy = pts.y[i] - qy;
    const double dz = pts.z[i] - qz;
    out[i] = (dx * dx + dy * dy) + dz * dz;
  }
}

void transform_points(const Mat3& r, const Vec3& t, PointsView in, PointsSoA& out) {
  out.resize(in.n);
  for (std::size_t i = 0; i < in.n; ++i) {
    const double x = in.x[i];
    const double y = in.y[i];
    const double z = in.z[i];
    out.x[i] = ((r(0, 0) * x + r(0, 1) * y) + r(0, 2) * z) + t.x();
    out.y[i] = ((r(1, 0) * x + r(1, 1) * y) + r(1, 2) * z) + t.y();
    out.z[i] = ((r(2, 0) * x + r(2, 1) * y) + r(2, 2) * z) + t.z();
  }
}

double sum_squared_differences(PointsView a, PointsView b) {
  // Lane-striped to match the 4-wide vector reduction.
  std::array<double, 4> acc{0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= a.n; i += 4) {
    for (std::size_t lane = 0; lane < 4; ++lane) {
      const double dx = a.x[i + lane] - b.x[i + lane];
      const double dy = a.y[i + lane] - b.y[i + lane];
      const double dz = a.z[i + lane] - b.z[i + lane];
      acc[lane] = acc[lane] + ((dx * dx + dy * dy) + dz * dz);
    }
  }
  double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (; i < a.n; ++i) {
    const double dx = a.x[i] - b.x[i];
    const double dy = a.y[i] - b.y[i];
    const double dz = a.z[i] - b.z[i];
    total += (dx * dx + dy * dy) + dz * dz;
  }
  return total;
}

}  // namespace propslam::simd::scalar
