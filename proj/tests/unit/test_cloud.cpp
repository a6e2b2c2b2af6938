#include <algorithm>

#include "doctest.h"
#include "propslam/error.hpp"
#include "support.hpp"

using namespace propslam;

TEST_CASE("label_fraction") {
  PointCloud c;
  for (int i = 0; i < 10; ++i) c.push_back(Vec3(i, 0, 0), i < 3 ? kHeat : kUnlabeled);
  auto f = label_fraction(c);
  CHECK(f.size() == 2);
  CHECK(f[kHeat] == doctest::Approx(0.3));
  CHECK(f[kUnlabeled] == doctest::Approx(0.7));

  PointCloud plain;
  plain.push_back(Vec3::Zero());
  CHECK(label_fraction(plain).at(kUnlabeled) == 1.0);

  auto g = testing::rng(11);
  const PointCloud r = testing::random_cloud(g, 537, 1.0, 4);
  std::map<ClassLabel, int> count;
  for (const auto& p : r.points) ++count[p.label];
  double total = 0.0;
  for (const auto& [label, frac] : label_fraction(r)) {
    CHECK(frac == static_cast<double>(count[label]) / 537.0);
    total += frac;
  }
  CHECK(std::abs(total - 1.0) < 1e-12);

  CHECK_THROWS_AS(label_fraction(PointCloud{}), Error);
}

TEST_CASE("filter_by_label partitions the cloud") {
  auto g = testing::rng(12);
  const PointCloud c = testing::random_cloud(g, 400, 2.0, 3);
  std::vector<LabeledPoint> all;
  for (std::uint8_t l = 0; l < 3; ++l) {
    const PointCloud f = filter_by_label(c, ClassLabel{l});
    std::vector<LabeledPoint> expected;
    for (const auto& p : c.points)
      if (p.label.id == l) expected.push_back(p);
    CHECK(f.points == expected);
    all.insert(all.end(), f.points.begin(), f.points.end());
  }
  auto key = [](const LabeledPoint& a, const LabeledPoint& b) {
    return std::tie(a.position.x(), a.position.y(), a.position.z(), a.label) <
           std::tie(b.position.x(), b.position.y(), b.position.z(), b.label);
  };
  auto sorted = c.points;
  std::sort(sorted.begin(), sorted.end(), key);
  std::sort(all.begin(), all.end(), key);
  CHECK(all == sorted);

  PointCloud heat;
  for (int i = 0; i < 5; ++i) heat.push_back(Vec3(i, 1, 2), kHeat);
  CHECK(filter_by_label(heat, kHeat).points == heat.points);
  CHECK(filter_by_label(heat, kWater).empty());
}
