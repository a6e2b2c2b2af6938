#include "propslam/cloud.hpp"

#include "propslam/error.hpp"
#include "propslam/simd/kernels.hpp"

namespace propslam {

std::map<ClassLabel, double> label_fraction(const PointCloud& c) {
  if (c.empty()) throw Error(ErrorCode::kEmptyCloud, "label_fraction: empty cloud");
  std::map<ClassLabel, std::size_t> counts;
  for (const auto& p : c.points) ++counts[p.label];
  std::map<ClassLabel, double> out;
  const double n = static_cast<double>(c.size());
  for (const auto& [label, count] : counts) out[label] = static_cast<double>(count) / n;
  return out;
}

PointCloud filter_by_label(const PointCloud& c, ClassLabel l) {
  PointCloud out;
  out.frame_id = c.frame_id;
  for (const auto& p : c.points) {
    if (p.label == l) out.points.push_back(p);
  }
  return out;
}

PointCloud apply(const RigidTransform& a, const PointCloud& cloud) {
  const std::size_t n = cloud.size();
  simd::PointsSoA in(n);
  for (std::size_t i = 0; i < n; ++i) in.set(i, cloud.points[i].position);
  simd::PointsSoA out(n);
  simd::transform_points(a.rotation(), a.translation(), in, out);

  PointCloud result;
  result.frame_id = cloud.frame_id;
  result.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.points[i] = {out.get(i), cloud.points[i].label};
  }
  return result;
}

void append(PointCloud& a, const PointCloud& b) {
  a.points.insert(a.points.end(), b.points.begin(), b.points.end());
}

}  // namespace propslam
