#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include <Eigen/Core>
#include <opencv2/core.hpp>

namespace til {

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws Error(Config) when focal lengths or principal point are out of range.
  void validate() const;
  bool contains(double u, double v) const noexcept {
    return u >= 0.0 && v >= 0.0 && u < width && v < height;
  }
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
  bool operator==(const Pixel&) const = default;
};

/// Pinhole back-projection of pixel (u, v) at metric depth z into the camera frame.
Eigen::Vector3d back_project(double u, double v, double z, const CameraIntrinsics& k);

/// Inverse of back_project for points with z > 0.
Eigen::Vector2d project(const Eigen::Vector3d& point, const CameraIntrinsics& k);

/// Random-access view over per-frame depth maps (CV_32F, meters).
///
/// Frames are either held in memory or decoded lazily from 16-bit PNGs, so a
/// long video never needs all depth maps resident at once.
class DepthSequence {
 public:
  DepthSequence() = default;

  static DepthSequence from_mats(std::vector<cv::Mat> maps);
  static DepthSequence from_files(std::vector<std::filesystem::path> paths, double scale);

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  /// 0-based frame access; returns a CV_32F map in meters.
  cv::Mat at(std::size_t index) const;

 private:
  std::size_t size_ = 0;
  std::function<cv::Mat(std::size_t)> load_;
};

/// Reads a 16-bit depth PNG and scales raw units to meters.
cv::Mat read_depth_png(const std::filesystem::path& path, double scale);

/// Back-projects every `stride`-th valid pixel of a metric depth map.
std::vector<Eigen::Vector3d> depth_to_cloud(const cv::Mat& depth, const CameraIntrinsics& k,
                                            int stride = 1);

}  // namespace til
