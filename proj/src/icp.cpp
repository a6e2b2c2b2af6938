#include "propslam/icp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#include "propslam/error.hpp"

namespace propslam {
namespace {

constexpr double kCovarianceRegularization = 1e-9;

struct SourceBlock {
  simd::PointsSoA positions;
  std::vector<ClassLabel> labels;
};

SourceBlock to_block(const PointCloud& c) {
  SourceBlock b{simd::PointsSoA(c.size()), std::vector<ClassLabel>(c.size())};
  for (std::size_t i = 0; i < c.size(); ++i) {
    b.positions.set(i, c.points[i].position);
    b.labels[i] = c.points[i].label;
  }
  return b;
}

}  // namespace

void IcpParams::validate() const {
  association.validate();
  if (max_iterations < 1) throw Error(ErrorCode::kConfig, "icp: max_iterations must be >= 1");
  if (!(translation_tol > 0.0) || !(rotation_tol > 0.0)) {
    throw Error(ErrorCode::kConfig, "icp: tolerances must be > 0");
  }
  if (min_correspondences < 3) throw Error(ErrorCode::kConfig, "icp: min_correspondences must be >= 3");
  if (!(sensor_noise_sigma > 0.0)) throw Error(ErrorCode::kConfig, "icp: sensor_noise_sigma must be > 0");
  if (normal_neighbors < 3) throw Error(ErrorCode::kConfig, "icp: normal_neighbors must be >= 3");
}

RigidTransform solve_rigid(std::span<const Vec3> source, std::span<const Vec3> target) {
  const std::size_t n = source.size();
  if (n < 3 || target.size() != n) {
    throw Error(ErrorCode::kDegenerateCorrespondences,
                "solve_rigid: degenerate correspondence set (need >= 3 pairs)");
  }
  Vec3 cs = Vec3::Zero();
  Vec3 ct = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    cs += source[i];
    ct += target[i];
  }
  cs /= static_cast<double>(n);
  ct /= static_cast<double>(n);

  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < n; ++i) h += (source[i] - cs) * (target[i] - ct).transpose();

  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) {
    throw Error(ErrorCode::kDegenerateCorrespondences,
                "solve_rigid: degenerate correspondence set (collinear points)");
  }
  const Mat3& u = svd.matrixU();
  Mat3 v = svd.matrixV();
  if ((v * u.transpose()).determinant() < 0.0) v.col(2) *= -1.0;
  Mat3 r = v * u.transpose();
  return {r, ct - r * cs};
}

IcpResult run_icp(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
                  const IcpParams& params, IcpTrace* trace) {
  if (source.empty() || target.empty()) throw Error(ErrorCode::kEmptyCloud, "run_icp: empty cloud");
  return run_icp(source, SpatialIndex(target), init, params, trace);
}

IcpResult run_icp(const PointCloud& source, const SpatialIndex& index, const RigidTransform& init,
                  const IcpParams& params, IcpTrace* trace) {
  params.validate();
  if (source.empty()) throw Error(ErrorCode::kEmptyCloud, "run_icp: empty cloud");

  const SourceBlock src = to_block(source);
  simd::PointsSoA moved;
  simd::PointsSoA pair_source;
  simd::PointsSoA pair_target;
  simd::PointsSoA pair_moved;
  std::vector<Vec3> ps;
  std::vector<Vec3> pt;

  IcpResult result;
  RigidTransform current = init;
  std::vector<std::optional<Correspondence>> corr;
  double penalty_sum = 0.0;

  for (int it = 1; it <= params.max_iterations; ++it) {
    simd::transform_points(current.rotation(), current.translation(), src.positions, moved);
    corr = associate(moved, src.labels, index, params.association);

    ps.clear();
    pt.clear();
    penalty_sum = 0.0;
    for (std::size_t i = 0; i < corr.size(); ++i) {
      if (!corr[i]) continue;
      ps.push_back(src.positions.get(i));
      pt.push_back(index.point(corr[i]->target_index));
      penalty_sum += corr[i]->penalty;
    }
    if (ps.size() < params.min_correspondences) {
      std::ostringstream msg;
      msg << "run_icp: insufficient overlap at iteration " << it << " (" << ps.size()
          << " correspondences)";
      throw Error(ErrorCode::kInsufficientOverlap, msg.str());
    }

    const RigidTransform next = solve_rigid(ps, pt);
    const RigidTransform step = compose(next, inverse(current));
    current = next;

    const std::size_t m = ps.size();
    pair_source.resize(m);
    pair_target.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      pair_source.set(k, ps[k]);
      pair_target.set(k, pt[k]);
    }
    simd::transform_points(current.rotation(), current.translation(), pair_source, pair_moved);
    result.euclidean_cost = simd::sum_squared_differences(pair_moved, pair_target);
    result.final_cost = result.euclidean_cost + penalty_sum;
    result.cost_history.push_back(result.final_cost);
    result.iterations = it;
    result.correspondence_count = m;
    if (trace != nullptr) {
      trace->correspondences.push_back(corr);
      trace->transforms.push_back(current);
    }
    if (step.translation().norm() < params.translation_tol &&
        rotation_angle(step.rotation()) < params.rotation_tol) {
      result.converged = true;
      break;
    }
  }
  result.transform = current;

  std::vector<MatchedPair> pairs;
  pairs.reserve(ps.size());
  for (std::size_t k = 0; k < ps.size(); ++k) {
    pairs.push_back({ps[k], pt[k], estimate_normal(index, pt[k], params.normal_neighbors)});
  }
  result.covariance = estimate_covariance(pairs, current, params.sensor_noise_sigma);
  return result;
}

Eigen::Matrix<double, 3, 6> point_jacobian(const RigidTransform& t, const Vec3& s) {
  Eigen::Matrix<double, 3, 6> j;
  j.leftCols<3>() = t.rotation();
  j.rightCols<3>() = -t.rotation() * skew(s);
  return j;
}

double plane_residual(const RigidTransform& t, const MatchedPair& pair) {
  return pair.normal.dot(t * pair.source - pair.target);
}

Eigen::Matrix<double, 1, 6> plane_residual_jacobian(const RigidTransform& t, const MatchedPair& pair) {
  return pair.normal.transpose() * point_jacobian(t, pair.source);
}

Vec3 estimate_normal(const SpatialIndex& index, const Vec3& q, std::size_t k) {
  const auto nn = index.k_nearest(q, k);
  Vec3 mean = Vec3::Zero();
  for (auto i : nn) mean += index.point(i);
  mean /= static_cast<double>(nn.size());
  Mat3 cov = Mat3::Zero();
  for (auto i : nn) {
    const Vec3 d = index.point(i) - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Vec3 n = eig.eigenvectors().col(0);
  // Deterministic orientation: largest-magnitude component positive.
  Eigen::Index big = 0;
  n.cwiseAbs().maxCoeff(&big);
  if (n[big] < 0.0) n = -n;
  return n;
}

Mat6 information_matrix(std::span<const MatchedPair> pairs, const RigidTransform& t) {
  Mat6 h = Mat6::Zero();
  for (const auto& p : pairs) {
    const Eigen::Matrix<double, 1, 6> j = plane_residual_jacobian(t, p);
    h.noalias() += j.transpose() * j;
  }
  return h;
}

Mat6 estimate_covariance(std::span<const MatchedPair> pairs, const RigidTransform& t,
                         double sensor_noise_sigma) {
  const Mat6 h = information_matrix(pairs, t) + kCovarianceRegularization * Mat6::Identity();
  Eigen::LDLT<Mat6> ldlt(h);
  Mat6 cov = Mat6::Zero();
  bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
  if (ok) {
    cov = sensor_noise_sigma * sensor_noise_sigma * ldlt.solve(Mat6::Identity());
    cov = 0.5 * (cov + cov.transpose()).eval();
    ok = cov.allFinite() && Eigen::SelfAdjointEigenSolver<Mat6>(cov).eigenvalues().minCoeff() > 0.0;
  }
  if (!ok) {
    Eigen::SelfAdjointEigenSolver<Mat6> eig(h);
    std::ostringstream msg;
    msg << "estimate_covariance: unobservable direction ["
        << eig.eigenvectors().col(0).transpose() << "]";
    throw Error(ErrorCode::kUnobservableDirection, msg.str());
  }
  return cov;
}

}  // namespace propslam
