#pragma once

#include <cstdint>
#include <random>

#include "propslam/cloud.hpp"
#include "propslam/geometry.hpp"

namespace testing {

using namespace propslam;

inline std::mt19937_64 rng(std::uint64_t seed) {
  std::seed_seq seq{seed, std::uint64_t{0x7e57}};
  return std::mt19937_64(seq);
}

inline Vec3 random_vec(std::mt19937_64& g, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(g), u(g), u(g)};
}

inline Vec3 random_axis(std::mt19937_64& g) {
  std::normal_distribution<double> n;
  Vec3 a(n(g), n(g), n(g));
  return a.normalized();
}

inline Twist random_twist(std::mt19937_64& g, double max_t, double max_angle) {
  std::uniform_real_distribution<double> u(0.0, max_angle);
  Twist xi;
  xi << random_vec(g, max_t), random_axis(g) * u(g);
  return xi;
}

inline RigidTransform random_transform(std::mt19937_64& g, double max_t, double max_angle) {
  return twist_exp(random_twist(g, max_t, max_angle));
}

inline PointCloud random_cloud(std::mt19937_64& g, std::size_t n, double scale, int classes = 1) {
  PointCloud c;
  std::uniform_int_distribution<int> lab(0, classes - 1);
  for (std::size_t i = 0; i < n; ++i) {
    c.push_back(random_vec(g, scale), ClassLabel{static_cast<std::uint8_t>(lab(g))});
  }
  return c;
}

inline bool identical(const RigidTransform& a, const RigidTransform& b) {
  return a.rotation() == b.rotation() && a.translation() == b.translation();
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

inline double transform_gap(const RigidTransform& a, const RigidTransform& b) {
  return std::max(max_abs(a.rotation() - b.rotation()), max_abs(a.translation() - b.translation()));
}

}  // namespace testing
