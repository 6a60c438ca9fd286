#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "til/camera.hpp"

namespace til {

using PointCloud = std::vector<Eigen::Vector3d>;

struct IcpConfig {
  double voxel_size = 0.01;         ///< source downsampling, meters
  int max_iterations = 50;
  double convergence_rms_delta = 1e-6;
  double divergence_rms = 0.05;     ///< residual above this marks the pair as failed
  double trim_ratio = 0.9;          ///< fraction of closest correspondences kept per iteration
  int depth_stride = 4;             ///< pixel stride when turning depth maps into clouds
};

struct IcpResult {
  Eigen::Isometry3d transform = Eigen::Isometry3d::Identity();  ///< maps source into target
  double rms = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Camera poses relative to the first frame.
struct PoseSequence {
  std::vector<Eigen::Isometry3d> transforms;  ///< frame t camera coords -> frame 1 coords
  std::vector<double> residuals;              ///< pairwise RMS, residuals[0] == 0
  std::vector<int> fallback_frames;           ///< 1-based frames that reused the previous pose

  std::size_t size() const noexcept { return transforms.size(); }
};

/// Keeps the first point that falls into each voxel; no points are synthesized.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size);

/// Least-squares rigid transform mapping `source[i]` onto `target[i]`.
Eigen::Isometry3d kabsch(const PointCloud& source, const PointCloud& target);

/// Point-to-point ICP. Runs from identity and from a centroid-aligned start
/// and keeps the lower-residual solution.
IcpResult register_clouds(const PointCloud& source, const PointCloud& target,
                          const IcpConfig& config = {});

PoseSequence identity_poses(std::size_t n);

/// Chains pairwise registrations (t -> t-1) into poses relative to the first cloud.
PoseSequence register_cloud_sequence(const std::vector<PointCloud>& clouds,
                                     const IcpConfig& config = {});

PoseSequence register_frames(const DepthSequence& depth, const CameraIntrinsics& k,
                             const IcpConfig& config = {});

/// Projects the rotation block back onto SO(3).
Eigen::Isometry3d orthonormalize(const Eigen::Isometry3d& pose);

}  // namespace til
