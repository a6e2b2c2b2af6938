#include <immintrin.h>

#include "propslam/simd/kernels.hpp"

namespace propslam::simd::avx2 {

void squared_distances(const Vec3& q, PointsView pts, std::span<double> out) {
  const __m256d qx = _mm256_set1_pd(q.x());
  const __m256d qy = _mm256_set1_pd(q.y());
  const __m256d qz = _mm256_set1_pd(q.z());
  std::size_t i = 0;
  for (; i + 4 <= pts.n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(pts.x + i), qx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(pts.y + i), qy);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(pts.z + i), qz);
    __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    d2 = _mm256_add_pd(d2, _mm256_mul_pd(dz, dz));
    _mm256_storeu_pd(out.data() + i, d2);
  }
  for (; i < pts.n; ++i) {
    const double dx = pts.x[i] - q.x();
    const double dy = pts.y[i] - q.y();
    const double dz = pts.z[i] - q.z();
    out[i] = (dx * dx + dy * dy) + dz * dz;
  }
}

namespace {

inline __m256d row(const Mat3& r, int k, __m256d x, __m256d y, __m256d z, double t) {
  __m256d acc = _mm256_add_pd(_mm256_mul_pd(_mm256_set1_pd(r(k, 0)), x),
                              _mm256_mul_pd(_mm256_set1_pd(r(k, 1)), y));
  acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(r(k, 2)), z));
  return _mm256_add_pd(acc, _mm256_set1_pd(t));
}

}  // namespace

void transform_points(const Mat3& r, const Vec3& t, PointsView in, PointsSoA& out) {
  out.resize(in.n);
  std::size_t i = 0;
  for (; i + 4 <= in.n; i += 4) {
    const __m256d x = _mm256_loadu_pd(in.x + i);
    const __m256d y = _mm256_loadu_pd(in.y + i);
    const __m256d z = _mm256_loadu_pd(in.z + i);
    _mm256_storeu_pd(out.x.data() + i, row(r, 0, x, y, z, t.x()));
    _mm256_storeu_pd(out.y.data() + i, row(r, 1, x, y, z, t.y()));
    _mm256_storeu_pd(out.z.data() + i, row(r, 2, x, y, z, t.z()));
  }
  for (; i < in.n; ++i) {
    const double x = in.x[i];
    const double y = in.y[i];
    const double z = in.z[i];
    out.x[i] = ((r(0, 0) * x + r(0, 1) * y) + r(0, 2) * z) + t.x();
    out.y[i] = ((r(1, 0) * x + r(1, 1) * y) + r(1, 2) * z) + t.y();
    out.z[i] = ((r(2, 0) * x + r(2, 1) * y) + r(2, 2) * z) + t.z();
  }
}

double sum_squared_differences(PointsView a, PointsView b) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= a.n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(a.x + i), _mm256_loadu_pd(b.x + i));
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(a.y + i), _mm256_loadu_pd(b.y + i));
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(a.z + i), _mm256_loadu_pd(b.z + i));
    __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    d2 = _mm256_add_pd(d2, _mm256_mul_pd(dz, dz));
    acc = _mm256_add_pd(acc, d2);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < a.n; ++i) {
    const double dx = a.x[i] - b.x[i];
    const double dy = a.y[i] - b.y[i];
    const double dz = a.z[i] - b.z[i];
    total += (dx * dx + dy * dy) + dz * dz;
  }
  return total;
}

}  // namespace propslam::simd::avx2
