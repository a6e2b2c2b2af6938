#include "propslam/simulator.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "propslam/error.hpp"

namespace propslam {
namespace {

constexpr double kRayEpsilon = 1e-9;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

void EnvironmentSpec::validate() const {
  for (const auto& w : walls) {
    if (!((w.p2 - w.p1).norm() > 0.0)) throw Error(ErrorCode::kConfig, "environment: wall has zero length");
    if (!(w.height >= 0.0)) throw Error(ErrorCode::kConfig, "environment: wall height must be >= 0");
  }
  for (const auto& p : patches) {
    if (!p.label.labeled()) throw Error(ErrorCode::kConfig, "environment: patch label must be non-zero");
    if (!(p.radius >= 0.0)) throw Error(ErrorCode::kConfig, "environment: patch radius must be >= 0");
  }
}

void SensorSpec::validate() const {
  if (horizontal_rays < 1 || rings < 1) throw Error(ErrorCode::kConfig, "sensor: ray counts must be >= 1");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::kConfig, "sensor: noise sigma must be >= 0");
  if (!(max_range > 0.0)) throw Error(ErrorCode::kConfig, "sensor: max range must be > 0");
}

void OdometryNoiseSpec::validate() const {
  if (!(translation_sigma >= 0.0) || !(rotation_sigma >= 0.0) || !(heading_sigma >= 0.0)) {
    throw Error(ErrorCode::kConfig, "odometry noise: sigmas must be >= 0");
  }
}

ClassLabel surface_label(const EnvironmentSpec& world, const Vec3& surface_point) {
  ClassLabel best = kUnlabeled;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& p : world.patches) {
    const double d = (surface_point - p.center).norm();
    if (p.radius > 0.0 && d <= p.radius && (d < best_d || (d == best_d && p.label < best))) {
      best = p.label;
      best_d = d;
    }
  }
  return best;
}

std::optional<RayHit> cast_ray(const EnvironmentSpec& world, const Vec3& origin, const Vec3& direction,
                               double max_range) {
  double best_t = max_range;
  bool hit = false;

  if (direction.z() < -kRayEpsilon && origin.z() > 0.0) {
    const double t = -origin.z() / direction.z();
    if (t > kRayEpsilon && t <= best_t) {
      best_t = t;
      hit = true;
    }
  }

  const Eigen::Vector2d o = origin.head<2>();
  const Eigen::Vector2d d = direction.head<2>();
  for (const auto& w : world.walls) {
    const Eigen::Vector2d e = w.p2 - w.p1;
    const double denom = d.x() * e.y() - d.y() * e.x();
    if (std::abs(denom) < kRayEpsilon) continue;
    const Eigen::Vector2d f = w.p1 - o;
    const double t = (f.x() * e.y() - f.y() * e.x()) / denom;
    const double s = (f.x() * d.y() - f.y() * d.x()) / denom;
    if (t <= kRayEpsilon || s < 0.0 || s > 1.0 || t > best_t) continue;
    const double z = origin.z() + t * direction.z();
    if (z < 0.0 || z > w.height) continue;
    best_t = t;
    hit = true;
  }

  if (!hit) return std::nullopt;
  RayHit out;
  out.range = best_t;
  out.point = origin + best_t * direction;
  out.label = surface_label(world, out.point);
  return out;
}

PointCloud generate_world(const EnvironmentSpec& spec, double sample_spacing) {
  spec.validate();
  if (!(sample_spacing > 0.0)) throw Error(ErrorCode::kConfig, "generate_world: spacing must be > 0");
  PointCloud out;
  for (const auto& w : spec.walls) {
    const Eigen::Vector2d e = w.p2 - w.p1;
    const double len = e.norm();
    const Eigen::Vector2d u = e / len;
    const auto n_len = static_cast<long>(std::floor(len / sample_spacing + 1e-9)) + 1;
    const auto n_h = static_cast<long>(std::floor(w.height / sample_spacing + 1e-9)) + 1;
    for (long i = 0; i < n_len; ++i) {
      const Eigen::Vector2d xy = w.p1 + u * (static_cast<double>(i) * sample_spacing);
      for (long k = 0; k < n_h; ++k) {
        const Vec3 p(xy.x(), xy.y(), static_cast<double>(k) * sample_spacing);
        out.push_back(p, surface_label(spec, p));
      }
    }
  }
  return out;
}

PointCloud simulate_scan(const EnvironmentSpec& world, const RigidTransform& true_pose,
                         const SensorSpec& sensor, std::uint32_t frame_id) {
  sensor.validate();
  auto rng = make_rng(sensor.seed, frame_id);
  std::normal_distribution<double> noise(0.0, 1.0);

  PointCloud scan;
  scan.frame_id = frame_id;
  const Vec3 origin = true_pose.translation();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double span = sensor.vertical_max_deg - sensor.vertical_min_deg;
  for (int ring = 0; ring < sensor.rings; ++ring) {
    const double grid_elev = sensor.rings == 1
                                 ? deg2rad(0.5 * (sensor.vertical_min_deg + sensor.vertical_max_deg))
                                 : deg2rad(sensor.vertical_min_deg + span * ring / (sensor.rings - 1));
    for (int k = 0; k < sensor.horizontal_rays; ++k) {
      double az = 2.0 * std::numbers::pi * k / sensor.horizontal_rays;
      double elev = grid_elev;
      if (sensor.jitter) {
        // uniform inside the (azimuth, ring) cell
        az = 2.0 * std::numbers::pi * (k + unit(rng)) / sensor.horizontal_rays;
        elev = deg2rad(sensor.vertical_min_deg + span * (ring + unit(rng)) / sensor.rings);
      }
      const Vec3 local(std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az), std::sin(elev));
      // Draw for every ray so the noise stream does not depend on which rays hit.
      const double n = sensor.noise_sigma > 0.0 ? sensor.noise_sigma * noise(rng) : 0.0;
      const auto h = cast_ray(world, origin, true_pose.rotation() * local, sensor.max_range);
      if (!h) continue;
      scan.push_back(local * (h->range + n), h->label);
    }
  }
  return scan;
}

std::vector<RigidTransform> simulate_odometry(std::span<const RigidTransform> true_trajectory,
                                              const OdometryNoiseSpec& noise) {
  noise.validate();
  std::vector<RigidTransform> out;
  if (true_trajectory.size() < 2) return out;
  auto rng = make_rng(noise.seed, 0x0d0d0d0dULL);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (std::size_t k = 0; k + 1 < true_trajectory.size(); ++k) {
    const RigidTransform delta = relative(true_trajectory[k], true_trajectory[k + 1]);
    const double dist = delta.translation().norm();
    const double turn = rotation_angle(delta.rotation());
    const double gx = gauss(rng);
    const double gy = gauss(rng);
    const double gyaw = gauss(rng);
    if (dist == 0.0 && turn == 0.0) {
      out.push_back(delta);
      continue;
    }
    Twist xi = Twist::Zero();
    xi(0) = noise.translation_sigma * dist * gx;
    xi(1) = noise.translation_sigma * dist * gy;
    // Forward-travel bias, along the motion direction in the end frame.
    if (dist > 0.0) {
      xi.head<3>() += noise.bias_scale * (delta.rotation().transpose() * delta.translation());
    }
    xi(5) = (noise.rotation_sigma * turn + noise.heading_sigma * dist) * gyaw + noise.bias_yaw * dist;
    out.push_back(compose(delta, twist_exp(xi)));
  }
  return out;
}

std::vector<RigidTransform> integrate(const RigidTransform& start,
                                      std::span<const RigidTransform> increments) {
  std::vector<RigidTransform> out{start};
  out.reserve(increments.size() + 1);
  for (const auto& inc : increments) out.push_back(compose(out.back(), inc));
  return out;
}

namespace fixtures {
namespace {

constexpr double kCourseLength = 12.5;  // straight corridor axis, x
constexpr double kCourseWidth = 3.0;    // distance between the two corridor axes, y
constexpr double kCornerRadius = 1.0;
constexpr double kWallHeight = 2.5;
constexpr int kCourseFrames = 150;

Wall wall(double x1, double y1, double x2, double y2) { return {{x1, y1}, {x2, y2}, kWallHeight}; }

}  // namespace

EnvironmentSpec loop_course() {
  EnvironmentSpec env;
  const double l = kCourseLength;
  const double w = kCourseWidth;
  // Outer boundary.
  env.walls.push_back(wall(-1.0, -1.0, l + 1.0, -1.0));
  env.walls.push_back(wall(l + 1.0, -1.0, l + 1.0, w + 1.0));
  env.walls.push_back(wall(l + 1.0, w + 1.0, -1.0, w + 1.0));
  env.walls.push_back(wall(-1.0, w + 1.0, -1.0, -1.0));
  // Inner block; the two long corridors either side of it are mirror images.
  env.walls.push_back(wall(1.0, 1.0, l - 1.0, 1.0));
  env.walls.push_back(wall(l - 1.0, 1.0, l - 1.0, w - 1.0));
  env.walls.push_back(wall(l - 1.0, w - 1.0, 1.0, w - 1.0));
  env.walls.push_back(wall(1.0, w - 1.0, 1.0, 1.0));

  const double h = kSensorHeight;
  // Lower corridor (y = 0 axis).
  env.patches.push_back({kHeat, {0.3, -1.0, h}, 0.5});
  env.patches.push_back({kHeat, {2.5, 1.0, h}, 0.5});
  env.patches.push_back({kHeat, {5.0, -1.0, h}, 0.5});
  env.patches.push_back({kHeat, {7.5, 1.0, h}, 0.5});
  env.patches.push_back({kHeat, {10.0, -1.0, h}, 0.5});
  env.patches.push_back({kWater, {3.8, -0.3, 0.0}, 0.6});
  env.patches.push_back({kWater, {8.8, 0.3, 0.0}, 0.6});
  // Upper corridor (y = w axis), different placement.
  env.patches.push_back({kHeat, {11.0, w + 1.0, h}, 0.5});
  env.patches.push_back({kHeat, {8.6, w - 1.0, h}, 0.5});
  env.patches.push_back({kHeat, {6.2, w + 1.0, h}, 0.5});
  env.patches.push_back({kHeat, {3.4, w + 1.0, h}, 0.5});
  env.patches.push_back({kWater, {9.9, w + 0.2, 0.0}, 0.6});
  env.patches.push_back({kWater, {4.8, w - 0.2, 0.0}, 0.6});
  env.patches.push_back({kWater, {1.5, w, 0.0}, 0.6});
  // Turning areas.
  env.patches.push_back({kHeat, {l + 1.0, 0.8, h}, 0.5});
  env.patches.push_back({kWater, {-0.2, 1.5, 0.0}, 0.6});
  return env;
}

std::vector<RigidTransform> loop_course_trajectory() {
  const double l = kCourseLength;
  const double w = kCourseWidth;
  const double r = kCornerRadius;
  const double straight_x = l - 2.0 * r;
  const double straight_y = w - 2.0 * r;
  const double arc = 0.5 * std::numbers::pi * r;
  const double perimeter = 2.0 * straight_x + 2.0 * straight_y + 4.0 * arc;
  const double step = perimeter / kCourseFrames;

  // Counter-clockwise, starting at (r, 0) heading +x.
  struct Segment {
    Eigen::Vector2d start;
    double heading;
    double length;
    bool turn;
    Eigen::Vector2d center;
  };
  const std::array<Segment, 8> segments{{
      {{r, 0.0}, 0.0, straight_x, false, {}},
      {{l - r, 0.0}, 0.0, arc, true, {l - r, r}},
      {{l, r}, 0.5 * std::numbers::pi, straight_y, false, {}},
      {{l, w - r}, 0.5 * std::numbers::pi, arc, true, {l - r, w - r}},
      {{l - r, w}, std::numbers::pi, straight_x, false, {}},
      {{r, w}, std::numbers::pi, arc, true, {r, w - r}},
      {{0.0, w - r}, 1.5 * std::numbers::pi, straight_y, false, {}},
      {{0.0, r}, 1.5 * std::numbers::pi, arc, true, {r, r}},
  }};

  std::vector<RigidTransform> out;
  for (int k = 0; k < kCourseFrames; ++k) {
    double s = step * k;
    std::size_t i = 0;
    while (i + 1 < segments.size() && s > segments[i].length) {
      s -= segments[i].length;
      ++i;
    }
    const Segment& seg = segments[i];
    Eigen::Vector2d xy;
    double yaw;
    if (!seg.turn) {
      xy = seg.start + s * Eigen::Vector2d(std::cos(seg.heading), std::sin(seg.heading));
      yaw = seg.heading;
    } else {
      const double phi = s / r;
      const Eigen::Vector2d rel = seg.start - seg.center;
      const double a0 = std::atan2(rel.y(), rel.x()) + phi;
      xy = seg.center + r * Eigen::Vector2d(std::cos(a0), std::sin(a0));
      yaw = seg.heading + phi;
    }
    out.push_back(RigidTransform::from_yaw(yaw, Vec3(xy.x(), xy.y(), kSensorHeight)));
  }
  return out;
}

SensorSpec loop_course_sensor(std::uint64_t seed) {
  SensorSpec s;
  s.horizontal_rays = 360;
  s.rings = 8;
  s.vertical_min_deg = -15.0;
  s.vertical_max_deg = 15.0;
  s.max_range = 3.5;
  s.noise_sigma = 0.01;
  s.jitter = true;
  s.seed = seed;
  return s;
}

OdometryNoiseSpec loop_course_odometry(std::uint64_t seed) {
  OdometryNoiseSpec n;
  n.translation_sigma = 0.4;
  n.rotation_sigma = 0.05;
  n.heading_sigma = 0.02;
  n.bias_scale = 0.3;
  n.bias_yaw = 0.01;
  n.seed = seed;
  return n;
}

EnvironmentSpec corridor_pair() {
  EnvironmentSpec env;
  env.walls.push_back({{-15.0, -2.0}, {15.0, -2.0}, kWallHeight});
  env.walls.push_back({{-15.0, 2.0}, {15.0, 2.0}, kWallHeight});
  // Identical fin rows on both walls, 2 m pitch: shifting by one pitch looks the same.
  for (int k = -7; k <= 7; ++k) {
    const double x = 2.0 * k;
    env.walls.push_back({{x, -2.0}, {x, -1.2}, kWallHeight});
    env.walls.push_back({{x, 2.0}, {x, 1.2}, kWallHeight});
  }
  env.patches.push_back({kHeat, {0.0, -2.0, kSensorHeight}, 1.0});
  return env;
}

SensorSpec corridor_pair_sensor(std::uint64_t seed) {
  SensorSpec s = loop_course_sensor(seed);
  s.horizontal_rays = 360;
  s.rings = 16;
  s.vertical_min_deg = 0.0;  // no floor rings
  s.max_range = 6.0;
  return s;
}

}  // namespace fixtures

}  // namespace propslam
