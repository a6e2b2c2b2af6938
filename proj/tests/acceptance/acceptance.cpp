// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// the number of failures.
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "propslam/association.hpp"
#include "propslam/error.hpp"
#include "propslam/icp.hpp"
#include "propslam/io.hpp"
#include "propslam/metrics.hpp"
#include "propslam/pipeline.hpp"
#include "propslam/posegraph.hpp"
#include "propslam/simulator.hpp"
#include "support.hpp"

using namespace propslam;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& why) {
    if (!ok && pass) detail << why << "; ";
    pass = pass && ok;
  }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "exception: " << e.what() << "; ";
  }
  if (!o.pass) ++failures;
  std::printf("criterion %2d %s: %s (%.1f s) %s\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), seconds_since(t0),
              o.detail.str().c_str());
  std::fflush(stdout);
}

double rotation_error(const RigidTransform& a, const RigidTransform& b) {
  return rotation_angle(a.rotation().transpose() * b.rotation());
}

// Irregular solid: an ellipsoid shell with bumps plus two offset slabs, so no
// direction is degenerate and the nearest-neighbour basin is wide.
PointCloud structured_cloud(std::mt19937_64& g, std::size_t n) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 3 != 2) {
      Vec3 d(nd(g), nd(g), nd(g));
      d.normalize();
      const double bump = 1.0 + 0.15 * std::sin(3.0 * d.x()) * std::cos(2.0 * d.y());
      c.push_back(Vec3(2.0 * d.x(), 1.2 * d.y(), 0.7 * d.z()) * bump);
    } else {
      const double a = u(g), b = u(g);
      c.push_back(i % 2 ? Vec3(2.5 + 0.3 * a, 1.0 * b, 0.4 + 0.2 * a * b) : Vec3(-0.8 * a, -1.8 + 0.2 * b * b, 0.9 * b));
    }
  }
  return c;
}

// Exhaustive penalized argmin, written from the rule, not from the index.
std::optional<Correspondence> brute_match(const Vec3& p, ClassLabel lp, const PointCloud& target,
                                          const AssociationParams& a) {
  std::optional<Correspondence> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < target.size(); ++j) {
    const auto& q = target.points[j];
    const double dx = p.x() - q.position.x(), dy = p.y() - q.position.y(), dz = p.z() - q.position.z();
    const double d2 = dx * dx + dy * dy + dz * dz;
    const bool same = lp == q.label;
    const double lambda = same ? 0.0 : a.alpha;
    const double reach = same && lp.labeled() ? a.widened_radius : a.base_radius;
    const double cost = d2 + lambda;
    if (cost > reach * reach || !(cost < best_cost)) continue;
    best_cost = cost;
    best = Correspondence{static_cast<std::uint32_t>(j), d2, lambda};
  }
  return best;
}

bool symmetric_pd(const Mat6& c) {
  if (!c.allFinite() || c != c.transpose()) return false;
  return Eigen::SelfAdjointEigenSolver<Mat6>(c).eigenvalues()(0) > 0.0;
}

// ---- loop course, shared by criteria 4, 5 and 9 ----

struct SeedRun {
  std::map<PipelineVariant, double> map_dist;
  std::map<PipelineVariant, double> mean_err;
  std::map<PipelineVariant, double> final_err;
  std::size_t covariances = 0;
  std::size_t bad_covariances = 0;
};

std::vector<SeedRun> loop_runs;
double loop_seconds = 0.0;

void run_loop_course() {
  const auto t0 = Clock::now();
  const auto world = fixtures::loop_course();
  const auto truth = fixtures::loop_course_trajectory();
  const auto params = fixtures::loop_course_pipeline();
  const auto truth_traj = Trajectory::from_poses(truth);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto sensor = fixtures::loop_course_sensor(seed);
    std::vector<PointCloud> scans;
    for (std::size_t k = 0; k < truth.size(); ++k) scans.push_back(simulate_scan(world, truth[k], sensor, k));
    const auto odo = integrate(truth[0], simulate_odometry(truth, fixtures::loop_course_odometry(seed)));
    const PointCloud truth_map = assemble_map(scans, truth);
    const auto results = run_variants(scans, odo, kAllVariants, params);
    SeedRun s;
    for (const auto& r : results) {
      const auto err = translation_error_series(r.trajectory, truth_traj);
      s.map_dist[r.variant] = map_distance(r.map, truth_map);
      s.mean_err[r.variant] = mean(err);
      s.final_err[r.variant] = err.back();
      auto check = [&](const Mat6& c) {
        ++s.covariances;
        if (!symmetric_pd(c)) ++s.bad_covariances;
      };
      for (const auto& ir : r.icp_results) {
        if (ir) check(ir->covariance);
      }
      for (const auto& e : r.odometry_edges) check(e.covariance);
      for (const auto& e : r.loop_edges) check(e.covariance);
    }
    loop_runs.push_back(std::move(s));
  }
  loop_seconds = seconds_since(t0);
}

// ---- command-line round trip for criterion 10 ----

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + PROPSLAM_CLI + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::vector<fs::path> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
  }
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb) {
    why = "file lists differ under " + a.string();
    return false;
  }
  for (const auto& f : fa) {
    if (read_file(a / f) != read_file(b / f)) {
      why = "content differs: " + (a / f).string();
      return false;
    }
  }
  return true;
}

}  // namespace

int main() {
  report(1, "exact recovery on 50 noiseless pairs", [](Outcome& o) {
    auto g = testing::rng(1001);
    IcpParams p;
    p.association = AssociationParams::conventional(10.0);
    p.translation_tol = 1e-12;
    p.rotation_tol = 1e-12;
    p.max_iterations = 300;
    double worst_t = 0.0, worst_r = 0.0;
    const auto t0 = Clock::now();
    std::uniform_real_distribution<double> angle(0.0, 20.0 * std::numbers::pi / 180.0);
    for (int i = 0; i < 50; ++i) {
      const PointCloud target = structured_cloud(g, 600);
      const RigidTransform t(so3_exp(testing::random_axis(g) * angle(g)),
                             testing::random_axis(g) * std::uniform_real_distribution<double>(0.0, 0.5)(g));
      const PointCloud source = apply(inverse(t), target);
      const auto r = run_icp(source, target, RigidTransform::identity(), p);
      worst_t = std::max(worst_t, (r.transform.translation() - t.translation()).norm());
      worst_r = std::max(worst_r, rotation_error(r.transform, t));
    }
    const double secs = seconds_since(t0);
    o.detail << "worst translation " << worst_t << " m, rotation " << worst_r << " rad, " << secs << " s; ";
    o.require(worst_t < 1e-6, "translation error too large");
    o.require(worst_r < 1e-6, "rotation error too large");
    o.require(secs < 10.0, "too slow");
  });

  report(2, "zero-penalty equal-radius reduction is bitwise on 20 fixtures", [](Outcome& o) {
    auto g = testing::rng(1002);
    int mismatches = 0;
    for (int i = 0; i < 20; ++i) {
      PointCloud target = structured_cloud(g, 500);
      std::uniform_int_distribution<int> lab(0, 3);
      for (auto& q : target.points) q.label = ClassLabel{static_cast<std::uint8_t>(lab(g))};
      PointCloud source = apply(inverse(testing::random_transform(g, 0.2, 0.15)), target);
      std::normal_distribution<double> n(0.0, 0.01);
      for (auto& q : source.points) q.position += Vec3(n(g), n(g), n(g));
      const double radius = 0.3 + 0.1 * (i % 5);
      IcpParams prop;
      prop.association = {0.0, radius, radius};
      IcpParams conv = prop;
      conv.association = AssociationParams::conventional(radius);
      PointCloud blind = source;
      for (auto& q : blind.points) q.label = kUnlabeled;
      PointCloud blind_target = target;
      for (auto& q : blind_target.points) q.label = kUnlabeled;
      IcpTrace tp, tc;
      const auto rp = run_icp(source, target, RigidTransform::identity(), prop, &tp);
      const auto rc = run_icp(blind, blind_target, RigidTransform::identity(), conv, &tc);
      bool same = tp.correspondences == tc.correspondences && tp.transforms.size() == tc.transforms.size() &&
                  testing::identical(rp.transform, rc.transform);
      for (std::size_t k = 0; same && k < tp.transforms.size(); ++k) {
        same = testing::identical(tp.transforms[k], tc.transforms[k]);
      }
      if (!same) ++mismatches;
    }
    o.detail << mismatches << " of 20 differ; ";
    o.require(mismatches == 0, "reduction not bitwise");
  });

  report(3, "corridor fixture: conventional aliases, property-aware does not (5 seeds)", [](Outcome& o) {
    const auto world = fixtures::corridor_pair();
    const auto pose = RigidTransform::from_translation({0, 0, fixtures::kSensorHeight});
    const auto init = RigidTransform::from_translation({1.5, 0, 0});
    IcpParams prop;
    prop.association = {1.0, 3.0, 1.0};
    IcpParams conv = prop;
    conv.association = AssociationParams::conventional(1.0);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto sensor = fixtures::corridor_pair_sensor(seed);
      const auto src = simulate_scan(world, pose, sensor, 1);
      const auto tgt = simulate_scan(world, pose, sensor, 2);
      const double ec = run_icp(src, tgt, init, conv).transform.translation().norm();
      const double ep = run_icp(src, tgt, init, prop).transform.translation().norm();
      o.detail << "seed " << seed << " conventional " << ec << " m, property " << ep << " m; ";
      o.require(ec > 1.0, "conventional ICP did not alias");
      o.require(ep < 0.05, "property-aware ICP missed the truth");
    }
  });

  run_loop_course();

  report(4, "loop course map-distance ordering and 3x ratio (5 seeds)", [](Outcome& o) {
    using V = PipelineVariant;
    for (std::size_t i = 0; i < loop_runs.size(); ++i) {
      const auto& m = loop_runs[i].map_dist;
      o.detail << "seed " << i + 1 << " odo " << m.at(V::kOdometryOnly) << " icp " << m.at(V::kIcp) << " icp-pg "
               << m.at(V::kIcpPg) << " prop " << m.at(V::kPropIcp) << " prop-pg " << m.at(V::kPropIcpPg) << "; ";
      o.require(m.at(V::kOdometryOnly) > m.at(V::kIcp), "odometry <= icp");
      o.require(m.at(V::kIcp) > m.at(V::kPropIcp), "icp <= prop-icp");
      o.require(m.at(V::kPropIcp) > m.at(V::kPropIcpPg), "prop-icp <= prop-icp-pg");
      o.require(3.0 * m.at(V::kPropIcp) <= m.at(V::kIcp), "prop-icp above a third of icp");
      o.require(m.at(V::kIcp) >= 0.8 * m.at(V::kIcpPg), "icp-pg much worse than icp");
    }
    o.detail << "runtime " << loop_seconds << " s; ";
    o.require(loop_seconds < 300.0, "slower than 5 min");
  });

  report(5, "icp-pg fixes the final frame but not the whole path", [](Outcome& o) {
    using V = PipelineVariant;
    for (std::size_t i = 0; i < loop_runs.size(); ++i) {
      const auto& s = loop_runs[i];
      const double gain = (s.mean_err.at(V::kIcp) - s.mean_err.at(V::kIcpPg)) / s.mean_err.at(V::kIcp);
      o.detail << "seed " << i + 1 << " final " << s.final_err.at(V::kIcp) << " -> " << s.final_err.at(V::kIcpPg)
               << ", mean gain " << 100.0 * gain << "%; ";
      o.require(s.final_err.at(V::kIcpPg) < s.final_err.at(V::kIcp), "final-frame error not reduced");
      o.require(gain < 0.5, "whole-path mean improved by 50% or more");
    }
  });

  report(6, "noiseless pose graphs recover the truth", [](Outcome& o) {
    auto g = testing::rng(1006);
    double worst = 0.0, worst_j = 0.0;
    std::uniform_int_distribution<int> size(2, 100);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = size(g);
      std::vector<RigidTransform> truth{testing::random_transform(g, 5.0, 3.0)};
      for (int k = 1; k < n; ++k) truth.push_back(compose(truth.back(), testing::random_transform(g, 1.0, 0.5)));
      PoseGraph graph;
      for (int k = 0; k < n; ++k) {
        RigidTransform init = truth[k];
        if (k > 0) {
          Twist d;
          d << testing::random_axis(g) * std::uniform_real_distribution<double>(0.0, 0.3)(g),
              testing::random_axis(g) * std::uniform_real_distribution<double>(0.0, 10.0 * std::numbers::pi / 180.0)(g);
          init = RigidTransform(truth[k].rotation() * so3_exp(d.tail<3>()), truth[k].translation() + d.head<3>());
        }
        graph.nodes.push_back({static_cast<std::uint32_t>(k), init});
      }
      auto add_edge = [&](int a, int b, EdgeKind kind) {
        Eigen::Matrix<double, 6, 6> m = Eigen::Matrix<double, 6, 6>::Random();
        const Mat6 info = m * m.transpose() + Mat6::Identity();
        graph.edges.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                               relative(truth[a], truth[b]), info, kind});
      };
      for (int k = 1; k < n; ++k) add_edge(k - 1, k, EdgeKind::kOdometry);
      std::uniform_int_distribution<int> node(0, n - 1);
      for (int e = 0; e < n / 5; ++e) {
        int a = node(g), b = node(g);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        add_edge(a, b, EdgeKind::kLoop);
      }
      const auto out = optimize(graph, 100, 1e-6);
      for (int k = 0; k < n; ++k) worst = std::max(worst, testing::transform_gap(out.poses[k], truth[k]));
      worst_j = std::max(worst_j, out.report.final_J);
    }
    o.detail << "worst pose gap " << worst << ", worst J " << worst_j << "; ";
    o.require(worst <= 1e-8, "pose gap above 1e-8");
    o.require(worst_j < 1e-12, "J above 1e-12");
  });

  report(7, "Jacobians match central differences (100 configurations each)", [](Outcome& o) {
    auto g = testing::rng(1007);
    const double h = 1e-6;
    double worst_icp = 0.0, worst_pg = 0.0;
    auto rel = [](const Eigen::MatrixXd& num, const Eigen::MatrixXd& ana) {
      return (num - ana).norm() / std::max(ana.norm(), std::numeric_limits<double>::min());
    };
    for (int i = 0; i < 100; ++i) {
      const auto t = testing::random_transform(g, 3.0, 3.0);
      const MatchedPair pair{testing::random_vec(g, 3.0), testing::random_vec(g, 3.0), testing::random_axis(g)};
      Eigen::Matrix<double, 3, 6> jp;
      Eigen::Matrix<double, 1, 6> jr;
      for (int c = 0; c < 6; ++c) {
        Twist d = Twist::Zero();
        d(c) = h;
        const auto tp = t * twist_exp(d), tm = t * twist_exp(-d);
        jp.col(c) = (tp * pair.source - tm * pair.source) / (2 * h);
        jr(c) = (plane_residual(tp, pair) - plane_residual(tm, pair)) / (2 * h);
      }
      worst_icp = std::max({worst_icp, rel(jp, point_jacobian(t, pair.source)),
                            rel(jr, plane_residual_jacobian(t, pair))});
    }
    for (int i = 0; i < 100; ++i) {
      const auto xa = testing::random_transform(g, 5.0, 3.0);
      const auto xb = testing::random_transform(g, 5.0, 3.0);
      // measurement near the actual relative pose keeps the error away from the log singularity
      const auto d = compose(relative(xa, xb), testing::random_transform(g, 0.5, 0.5));
      const auto [ja, jb] = edge_jacobians(xa, xb, d);
      Mat6 na, nb;
      for (int c = 0; c < 6; ++c) {
        Twist e = Twist::Zero();
        e(c) = h;
        na.col(c) = (edge_error(xa * twist_exp(e), xb, d) - edge_error(xa * twist_exp(-e), xb, d)) / (2 * h);
        nb.col(c) = (edge_error(xa, xb * twist_exp(e), d) - edge_error(xa, xb * twist_exp(-e), d)) / (2 * h);
      }
      worst_pg = std::max({worst_pg, rel(na, ja), rel(nb, jb)});
    }
    o.detail << "worst relative error: ICP " << worst_icp << ", pose graph " << worst_pg << "; ";
    o.require(worst_icp <= 1e-5, "ICP Jacobian mismatch");
    o.require(worst_pg <= 1e-5, "pose-graph Jacobian mismatch");
  });

  report(8, "association and map distance equal brute force (500 cases)", [](Outcome& o) {
    auto g = testing::rng(1008);
    std::uniform_int_distribution<std::size_t> npts(1, 2000);
    std::uniform_real_distribution<double> ur(0.05, 1.5);
    int assoc_bad = 0, map_bad = 0;
    for (int c = 0; c < 500; ++c) {
      const std::size_t ns = npts(g) / 4 + 1, nt = npts(g);
      const double scale = 0.5 + 4.0 * std::uniform_real_distribution<double>(0.0, 1.0)(g);
      PointCloud source = testing::random_cloud(g, ns, scale, 3);
      PointCloud target = testing::random_cloud(g, nt, scale, 3);
      if (c % 7 == 0) {  // duplicates and exact ties
        for (std::size_t i = 0; i + 1 < target.size(); i += 5) target.points[i + 1] = target.points[i];
        for (std::size_t i = 0; i < source.size() && i < target.size(); i += 3) source.points[i].position = target.points[i].position;
      }
      const double base = ur(g);
      const double wide = base * (1.0 + 2.0 * std::uniform_real_distribution<double>(0.0, 1.0)(g));
      const double alpha = (c % 3 == 0) ? 0.0 : base * base * std::uniform_real_distribution<double>(0.0, 2.0)(g);
      const AssociationParams a{alpha, wide, base};
      const SpatialIndex index(target);
      const auto got = associate(source, index, a);
      for (std::size_t i = 0; i < source.size(); ++i) {
        if (got[i] != brute_match(source.points[i].position, source.points[i].label, target, a)) ++assoc_bad;
      }
      double sum = 0.0;
      for (const auto& p : source.points) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : target.points) {
          const double dx = p.position.x() - q.position.x(), dy = p.position.y() - q.position.y(),
                       dz = p.position.z() - q.position.z();
          best = std::min(best, dx * dx + dy * dy + dz * dz);
        }
        sum += std::sqrt(best);
      }
      if (map_distance(source, target) != sum / static_cast<double>(source.size())) ++map_bad;
    }
    o.detail << assoc_bad << " association slots and " << map_bad << " map distances differ; ";
    o.require(assoc_bad == 0, "association differs from brute force");
    o.require(map_bad == 0, "map distance differs from brute force");
  });

  report(9, "covariances symmetric PD; planar fixture ill-conditioned", [](Outcome& o) {
    std::size_t total = 0, bad = 0;
    for (const auto& s : loop_runs) {
      total += s.covariances;
      bad += s.bad_covariances;
    }
    auto g = testing::rng(1009);
    for (int i = 0; i < 50; ++i) {
      const PointCloud target = structured_cloud(g, 400);
      PointCloud source = apply(inverse(testing::random_transform(g, 0.1, 0.1)), target);
      std::normal_distribution<double> n(0.0, 0.01);
      for (auto& q : source.points) q.position += Vec3(n(g), n(g), n(g));
      IcpParams p;
      p.association = AssociationParams::conventional(0.5);
      ++total;
      if (!symmetric_pd(run_icp(source, target, RigidTransform::identity(), p).covariance)) ++bad;
    }
    // a flat floor patch: in-plane translation and yaw are unobservable
    PointCloud floor;
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 500; ++i) floor.push_back(Vec3(u(g), u(g), 0.0));
    std::vector<MatchedPair> pairs;
    for (const auto& p : floor.points) pairs.push_back({p.position, p.position, Vec3::UnitZ()});
    const Mat6 info = information_matrix(pairs, RigidTransform::identity());
    const auto ev = Eigen::SelfAdjointEigenSolver<Mat6>(info).eigenvalues();
    const double ratio = ev(5) / std::max(std::abs(ev(0)), std::numeric_limits<double>::min());
    const Mat6 cov = estimate_covariance(pairs, RigidTransform::identity(), 0.01);
    ++total;
    if (!symmetric_pd(cov)) ++bad;
    o.detail << bad << " of " << total << " covariances fail, planar information eigenvalues " << ev(0) << " .. " << ev(5)
             << " (ratio " << ratio << "); ";
    o.require(bad == 0, "non-symmetric or non-PD covariance");
    o.require(ratio > 1e6, "planar fixture not ill-conditioned");
  });

  report(10, "two runs from the same manifests are bit-identical", [](Outcome& o) {
    const fs::path root = fs::temp_directory_path() / "propslam_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string r = root.string();
    o.require(run_cli("fixture --name loop-course --out " + r + "/fix") == 0, "fixture failed");
    o.require(run_cli("simulate --env " + r + "/fix/env.txt --traj " + r + "/fix/trajectory.txt --config " + r +
                      "/fix/config.txt --seed 2 --out " + r + "/a/sim") == 0,
              "simulate failed");
    o.require(run_cli("slam --variant prop-icp-pg --scans " + r + "/a/sim --config " + r + "/fix/config.txt --out " +
                      r + "/a/slam") == 0,
              "slam failed");
    o.require(run_cli("eval --est " + r + "/a/slam --truth " + r + "/a/sim --out " + r + "/a/eval") == 0,
              "eval failed");
    if (!o.pass) return;
    for (const char* step : {"sim", "slam", "eval"}) {
      o.require(run_cli("replay --manifest " + r + "/a/" + step + "/manifest.txt --out " + r + "/b/" + step) == 0,
                std::string("replay of ") + step + " failed");
      std::string why;
      o.require(same_tree(root / "a" / step, root / "b" / step, why), why);
    }
    if (o.pass) fs::remove_all(root);
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
