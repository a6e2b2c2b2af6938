#include <atomic>
#include <cstdlib>
#include <string>

#include "propslam/simd/kernels.hpp"

namespace propslam::simd {
namespace {

SimdLevel initial_level() {
  if (const char* env = std::getenv("PROPSLAM_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return SimdLevel::kScalar;
  }
  return detected_level();
}

std::atomic<SimdLevel>& level_slot() {
  static std::atomic<SimdLevel> level{initial_level()};
  return level;
}

}  // namespace

std::string_view to_string(SimdLevel level) {
  switch (level) {
    case SimdLevel::kScalar: return "scalar";
    case SimdLevel::kAvx2: return "avx2";
  }
  return "unknown";
}

SimdLevel detected_level() {
#if defined(PROPSLAM_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return SimdLevel::kAvx2;
#endif
  return SimdLevel::kScalar;
}

SimdLevel active_level() { return level_slot().load(std::memory_order_relaxed); }

void set_active_level(SimdLevel level) {
  if (level == SimdLevel::kAvx2 && detected_level() != SimdLevel::kAvx2) level = SimdLevel::kScalar;
  level_slot().store(level, std::memory_order_relaxed);
}

void squared_distances(const Vec3& q, PointsView pts, std::span<double> out) {
#if defined(PROPSLAM_HAVE_AVX2)
  if (active_level() == SimdLevel::kAvx2) return avx2::squared_distances(q, pts, out);
#endif
  scalar::squared_distances(q, pts, out);
}

void transform_points(const Mat3& r, const Vec3& t, PointsView in, PointsSoA& out) {
#if defined(PROPSLAM_HAVE_AVX2)
  if (active_level() == SimdLevel::kAvx2) return avx2::transform_points(r, t, in, out);
#endif
  scalar::transform_points(r, t, in, out);
}

double sum_squared_differences(PointsView a, PointsView b) {
#if defined(PROPSLAM_HAVE_AVX2)
  if (active_level() == SimdLevel::kAvx2) return avx2::sum_squared_differences(a, b);
#endif
  return scalar::sum_squared_differences(a, b);
}

}  // namespace propslam::simd
