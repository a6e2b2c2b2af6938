#pragma once

// Data-parallel inner loops used by association, ICP and the map metric.
//
// Every kernel has a scalar reference in `simd::scalar` and, on x86-64, an AVX2
// variant in `simd::avx2`. The public entry points dispatch at runtime to the
// best level the CPU supports. All variants evaluate the same expression tree
// in the same order (no FMA contraction, lane-striped reductions), so results
// are bit-identical regardless of the selected level.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "propslam/geometry.hpp"

namespace propslam::simd {

enum class SimdLevel { kScalar, kAvx2 };

std::string_view to_string(SimdLevel level);

/// Highest level supported by this CPU and build.
SimdLevel detected_level();
/// Level used by the dispatching entry points. Defaults to detected_level(),
/// unless the PROPSLAM_SIMD environment variable is set to "scalar".
SimdLevel active_level();
/// Overrides the active level; requesting an unsupported level falls back to scalar.
void set_active_level(SimdLevel level);

/// Structure-of-arrays coordinate block.
struct PointsSoA {
  std::vector<double> x, y, z;

  PointsSoA() = default;
  explicit PointsSoA(std::size_t n) : x(n), y(n), z(n) {}

  std::size_t size() const { return x.size(); }
  void resize(std::size_t n) { x.resize(n); y.resize(n); z.resize(n); }
  void set(std::size_t i, const Vec3& p) { x[i] = p.x(); y[i] = p.y(); z[i] = p.z(); }
  Vec3 get(std::size_t i) const { return {x[i], y[i], z[i]}; }
};

/// Read-only view over `n` SoA points.
struct PointsView {
  const double* x;
  const double* y;
  const double* z;
  std::size_t n;

  PointsView(const PointsSoA& p) : x(p.x.data()), y(p.y.data()), z(p.z.data()), n(p.size()) {}  // NOLINT
  PointsView(const double* x_, const double* y_, const double* z_, std::size_t n_)
      : x(x_), y(y_), z(z_), n(n_) {}
  PointsView subview(std::size_t begin, std::size_t count) const {
    return {x + begin, y + begin, z + begin, count};
  }
};

/// out[i] = (px-q.x)² + (py-q.y)² + (pz-q.z)², summed in that order.
void squared_distances(const Vec3& q, PointsView pts, std::span<double> out);

/// out[i] = R·in[i] + t, each row evaluated as ((r0·x + r1·y) + r2·z) + t.
void transform_points(const Mat3& r, const Vec3& t, PointsView in, PointsSoA& out);

/// Σ‖a[i] − b[i]‖², accumulated in four interleaved partial sums.
double sum_squared_differences(PointsView a, PointsView b);

namespace scalar {
void squared_distances(const Vec3& q, PointsView pts, std::span<double> out);
void transform_points(const Mat3& r, const Vec3& t, PointsView in, PointsSoA& out);
double sum_squared_differences(PointsView a, PointsView b);
}  // namespace scalar

#if defined(PROPSLAM_HAVE_AVX2)
namespace avx2 {
void squared_distances(const Vec3& q, PointsView pts, std::span<double> out);
void transform_points(const Mat3& r, const Vec3& t, PointsView in, PointsSoA& out);
double sum_squared_differences(PointsView a, PointsView b);
}  // namespace avx2
#endif

}  // namespace propslam::simd
