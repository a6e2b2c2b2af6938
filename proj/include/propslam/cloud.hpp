#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "propslam/geometry.hpp"

namespace propslam {

/// Physical-property class of a measured point. Exactly one per point.
struct ClassLabel {
  std::uint8_t id = 0;

  static constexpr std::uint8_t kUnlabeled = 0;
  static constexpr std::uint8_t kHeat = 1;
  static constexpr std::uint8_t kWater = 2;
  static constexpr std::uint8_t kRadiation = 3;

  constexpr bool labeled() const { return id != kUnlabeled; }
  friend constexpr auto operator<=>(ClassLabel, ClassLabel) = default;
};

inline constexpr ClassLabel kUnlabeled{ClassLabel::kUnlabeled};
inline constexpr ClassLabel kHeat{ClassLabel::kHeat};
inline constexpr ClassLabel kWater{ClassLabel::kWater};

struct LabeledPoint {
  Vec3 position = Vec3::Zero();
  ClassLabel label;

  friend bool operator==(const LabeledPoint&, const LabeledPoint&) = default;
};

struct PointCloud {
  std::vector<LabeledPoint> points;
  std::uint32_t frame_id = 0;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void push_back(const Vec3& p, ClassLabel l = kUnlabeled) { points.push_back({p, l}); }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

/// Fraction of points per label present in the cloud. Throws kEmptyCloud.
std::map<ClassLabel, double> label_fraction(const PointCloud& c);

PointCloud filter_by_label(const PointCloud& c, ClassLabel l);

/// Each point becomes R·p + T; labels and frame id are kept.
PointCloud apply(const RigidTransform& a, const PointCloud& cloud);

/// Appends `b`'s points to `a`.
void append(PointCloud& a, const PointCloud& b);

}  // namespace propslam
