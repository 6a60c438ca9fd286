#include "til/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <opencv2/flann.hpp>
#include <opencv2/flann/kdtree_single_index.h>

#include "til/error.hpp"

namespace til {
namespace {

/// Exact nearest-neighbour index over a fixed cloud.
class NearestNeighbors {
 public:
  explicit NearestNeighbors(const PointCloud& cloud) : data_(cloud.size() * 3) {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      data_[3 * i + 0] = static_cast<float>(cloud[i].x());
      data_[3 * i + 1] = static_cast<float>(cloud[i].y());
      data_[3 * i + 2] = static_cast<float>(cloud[i].z());
    }
    matrix_ = cvflann::Matrix<float>(data_.data(), cloud.size(), 3);
    index_ = std::make_unique<Index>(matrix_, cvflann::KDTreeSingleIndexParams(16));
    index_->buildIndex();
  }

  int nearest(const Eigen::Vector3d& p) const {
    float query[3] = {static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z())};
    int index = 0;
    float dist = 0.0f;
    cvflann::Matrix<float> q(query, 1, 3);
    cvflann::Matrix<int> indices(&index, 1, 1);
    cvflann::Matrix<float> dists(&dist, 1, 1);
    index_->knnSearch(q, indices, dists, 1, cvflann::SearchParams(cvflann::FLANN_CHECKS_UNLIMITED));
    return index;
  }

 private:
  using Index = cvflann::KDTreeSingleIndex<cvflann::L2_Simple<float>>;
  std::vector<float> data_;
  cvflann::Matrix<float> matrix_;
  std::unique_ptr<Index> index_;
};

struct VoxelKey {
  long long x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    return static_cast<std::size_t>(k.x * 73856093LL ^ k.y * 19349663LL ^ k.z * 83492791LL);
  }
};

Eigen::Vector3d centroid(const PointCloud& cloud) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& p : cloud) sum += p;
  return sum / static_cast<double>(cloud.size());
}

struct Correspondences {
  PointCloud source;
  PointCloud target;
  double rms = 0.0;
};

Correspondences match(const PointCloud& source, const PointCloud& target,
                      const NearestNeighbors& nn, const Eigen::Isometry3d& pose, double trim_ratio) {
  const std::size_t n = source.size();
  std::vector<Eigen::Vector3d> moved(n);
  std::vector<int> partner(n);
  std::vector<double> dist2(n);
  for (std::size_t i = 0; i < n; ++i) {
    moved[i] = pose * source[i];
    partner[i] = nn.nearest(moved[i]);
    dist2[i] = (moved[i] - target[static_cast<std::size_t>(partner[i])]).squaredNorm();
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t keep =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(trim_ratio * static_cast<double>(n))),
                              std::min<std::size_t>(3, n), n);
  std::nth_element(order.begin(), order.begin() + static_cast<long>(keep - 1), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist2[a] < dist2[b]; });

  Correspondences c;
  c.source.reserve(keep);
  c.target.reserve(keep);
  double sum = 0.0;
  for (std::size_t j = 0; j < keep; ++j) {
    const std::size_t i = order[j];
    c.source.push_back(moved[i]);
    c.target.push_back(target[static_cast<std::size_t>(partner[i])]);
    sum += dist2[i];
  }
  c.rms = std::sqrt(sum / static_cast<double>(keep));
  return c;
}

IcpResult run_icp(const PointCloud& source, const PointCloud& target, const NearestNeighbors& nn,
                  const Eigen::Isometry3d& start, const IcpConfig& config) {
  IcpResult result;
  result.transform = start;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it < config.max_iterations; ++it) {
    Correspondences c = match(source, target, nn, result.transform, config.trim_ratio);
    result.iterations = it + 1;
    if (std::abs(previous - c.rms) < config.convergence_rms_delta) {
      result.converged = true;
      break;
    }
    previous = c.rms;
    result.transform = orthonormalize(kabsch(c.source, c.target) * result.transform);
  }
  result.rms = match(source, target, nn, result.transform, config.trim_ratio).rms;
  return result;
}

}  // namespace

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0)) return cloud;
  PointCloud out;
  std::unordered_set<VoxelKey, VoxelHash> seen;
  seen.reserve(cloud.size());
  for (const auto& p : cloud) {
    const VoxelKey key{static_cast<long long>(std::floor(p.x() / voxel_size)),
                       static_cast<long long>(std::floor(p.y() / voxel_size)),
                       static_cast<long long>(std::floor(p.z() / voxel_size))};
    if (seen.insert(key).second) out.push_back(p);
  }
  return out;
}

Eigen::Isometry3d kabsch(const PointCloud& source, const PointCloud& target) {
  if (source.size() != target.size() || source.size() < 3) {
    throw Error(ErrorKind::Config, "rigid fit needs at least 3 paired points");
  }
  Eigen::Matrix3Xd src(3, static_cast<Eigen::Index>(source.size()));
  Eigen::Matrix3Xd dst(3, static_cast<Eigen::Index>(target.size()));
  for (std::size_t i = 0; i < source.size(); ++i) {
    src.col(static_cast<Eigen::Index>(i)) = source[i];
    dst.col(static_cast<Eigen::Index>(i)) = target[i];
  }
  Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
  pose.matrix() = Eigen::umeyama(src, dst, false);
  return pose;
}

Eigen::Isometry3d orthonormalize(const Eigen::Isometry3d& pose) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(pose.linear(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d rotation = svd.matrixU() * svd.matrixV().transpose();
  if (rotation.determinant() < 0.0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    rotation = u * svd.matrixV().transpose();
  }
  Eigen::Isometry3d out = Eigen::Isometry3d::Identity();
  out.linear() = rotation;
  out.translation() = pose.translation();
  return out;
}

IcpResult register_clouds(const PointCloud& source, const PointCloud& target, const IcpConfig& config) {
  if (source.size() < 3 || target.size() < 3) {
    throw Error(ErrorKind::Config, "registration needs at least 3 points per cloud");
  }
  const PointCloud reduced = voxel_downsample(source, config.voxel_size);
  const NearestNeighbors nn(target);

  IcpResult best = run_icp(reduced, target, nn, Eigen::Isometry3d::Identity(), config);
  const Eigen::Vector3d shift = centroid(target) - centroid(reduced);
  if (shift.norm() > config.convergence_rms_delta && best.rms > config.convergence_rms_delta) {
    Eigen::Isometry3d start = Eigen::Isometry3d::Identity();
    start.translation() = shift;
    IcpResult aligned = run_icp(reduced, target, nn, start, config);
    if (aligned.rms < best.rms) best = aligned;
  }
  return best;
}

PoseSequence identity_poses(std::size_t n) {
  PoseSequence poses;
  poses.transforms.assign(n, Eigen::Isometry3d::Identity());
  poses.residuals.assign(n, 0.0);
  return poses;
}

namespace {

void chain(PoseSequence& poses, const IcpResult& pair, const IcpConfig& config) {
  const std::size_t t = poses.transforms.size();
  if (pair.rms > config.divergence_rms) {
    poses.transforms.push_back(poses.transforms.back());
    poses.fallback_frames.push_back(static_cast<int>(t + 1));
  } else {
    poses.transforms.push_back(orthonormalize(poses.transforms.back() * pair.transform));
  }
  poses.residuals.push_back(pair.rms);
}

}  // namespace

PoseSequence register_cloud_sequence(const std::vector<PointCloud>& clouds, const IcpConfig& config) {
  if (clouds.empty()) throw Error(ErrorKind::TooShort, "no clouds to register");
  PoseSequence poses = identity_poses(1);
  for (std::size_t t = 1; t < clouds.size(); ++t) {
    chain(poses, register_clouds(clouds[t], clouds[t - 1], config), config);
  }
  return poses;
}

PoseSequence register_frames(const DepthSequence& depth, const CameraIntrinsics& k,
                             const IcpConfig& config) {
  if (depth.empty()) throw Error(ErrorKind::TooShort, "no depth frames to register");
  PoseSequence poses = identity_poses(1);
  PointCloud previous = depth_to_cloud(depth.at(0), k, config.depth_stride);
  for (std::size_t t = 1; t < depth.size(); ++t) {
    PointCloud current = depth_to_cloud(depth.at(t), k, config.depth_stride);
    if (current.size() < 3 || previous.size() < 3) {
      IcpResult failed;
      failed.rms = std::numeric_limits<double>::infinity();
      chain(poses, failed, config);
    } else {
      chain(poses, register_clouds(current, previous, config), config);
    }
    previous = std::move(current);
  }
  return poses;
}

}  // namespace til
