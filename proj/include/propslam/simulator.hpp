#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "propslam/cloud.hpp"

namespace propslam {

/// Vertical wall rectangle standing on the floor (z = 0) over segment p1–p2.
struct Wall {
  Eigen::Vector2d p1 = Eigen::Vector2d::Zero();
  Eigen::Vector2d p2 = Eigen::Vector2d::Zero();
  double height = 0.0;
};

/// Surface region carrying a property class: every surface point within
/// `radius` of `center` gets `label`.
struct Patch {
  ClassLabel label;
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

/// 2.5D world: vertical walls on an infinite floor plane z = 0.
struct EnvironmentSpec {
  std::vector<Wall> walls;
  std::vector<Patch> patches;

  void validate() const;
};

struct SensorSpec {
  int horizontal_rays = 360;
  int rings = 16;
  double vertical_min_deg = -15.0;
  double vertical_max_deg = 15.0;
  double max_range = 100.0;  // m
  double noise_sigma = 0.01;  // m, per-range Gaussian
  /// Non-repeating pattern: every ray is drawn uniformly inside its
  /// (azimuth, ring) cell instead of at the cell's grid direction.
  bool jitter = false;
  std::uint64_t seed = 1;

  void validate() const;
};

struct OdometryNoiseSpec {
  double translation_sigma = 0.0;  // m per m travelled, x/y in the robot frame
  double rotation_sigma = 0.0;     // rad per rad turned
  double heading_sigma = 0.0;      // rad per m travelled
  double bias_scale = 0.0;         // fractional over-estimate of forward travel
  double bias_yaw = 0.0;           // rad per m travelled
  std::uint64_t seed = 1;

  void validate() const;
};

struct RayHit {
  double range = 0.0;  // m, noise-free
  Vec3 point = Vec3::Zero();  // world frame, on the surface
  ClassLabel label;
};

/// First surface hit along `direction` (unit) from `origin`, within max_range.
std::optional<RayHit> cast_ray(const EnvironmentSpec& world, const Vec3& origin, const Vec3& direction,
                               double max_range);

/// Label painted on a surface point.
ClassLabel surface_label(const EnvironmentSpec& world, const Vec3& surface_point);

/// Walls sampled on a `sample_spacing` grid along length and height.
PointCloud generate_world(const EnvironmentSpec& spec, double sample_spacing);

/// Ray-cast scan in the sensor frame; noise stream seeded from (sensor.seed, frame_id).
PointCloud simulate_scan(const EnvironmentSpec& world, const RigidTransform& true_pose,
                         const SensorSpec& sensor, std::uint32_t frame_id = 0);

/// Noisy relative pose per consecutive pair (size n−1). Noise scales with the
/// motion, so a stationary step is reported exactly.
std::vector<RigidTransform> simulate_odometry(std::span<const RigidTransform> true_trajectory,
                                              const OdometryNoiseSpec& noise);

/// Dead-reckoned poses from an initial pose and relative increments.
std::vector<RigidTransform> integrate(const RigidTransform& start,
                                      std::span<const RigidTransform> increments);

namespace fixtures {

/// Sensor height above the floor used by the fixtures (m).
inline constexpr double kSensorHeight = 0.5;

/// Closed loop course: two geometrically identical straight corridors joined
/// at both ends, with heat patches on the walls and water patches on the floor
/// placed differently in each corridor.
EnvironmentSpec loop_course();
/// ~150 poses, ~30 m, rounded rectangle inside loop_course().
std::vector<RigidTransform> loop_course_trajectory();
SensorSpec loop_course_sensor(std::uint64_t seed);
OdometryNoiseSpec loop_course_odometry(std::uint64_t seed);

/// Two parallel walls 4 m apart carrying identical fin rows (2 m pitch), one
/// heat patch around the fin at the origin on the wall at y = -2.
EnvironmentSpec corridor_pair();
SensorSpec corridor_pair_sensor(std::uint64_t seed);

}  // namespace fixtures

}  // namespace propslam
