#include "til/camera.hpp"

#include <cmath>

#include <fmt/core.h>
#include <opencv2/imgcodecs.hpp>

#include "til/error.hpp"

namespace til {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorKind::Config, fmt::format("focal lengths must be positive (fx={}, fy={})", fx, fy));
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::Config, fmt::format("image size must be positive ({}x{})", width, height));
  }
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
    throw Error(ErrorKind::Config,
                fmt::format("principal point ({}, {}) outside {}x{} image", cx, cy, width, height));
  }
}

Eigen::Vector3d back_project(double u, double v, double z, const CameraIntrinsics& k) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw Error(ErrorKind::InvalidDepth, fmt::format("depth must be positive, got {}", z));
  }
  return {(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z};
}

Eigen::Vector2d project(const Eigen::Vector3d& point, const CameraIntrinsics& k) {
  if (!(point.z() > 0.0)) {
    throw Error(ErrorKind::InvalidDepth, "cannot project a point behind the camera");
  }
  return {k.fx * point.x() / point.z() + k.cx, k.fy * point.y() / point.z() + k.cy};
}

DepthSequence DepthSequence::from_mats(std::vector<cv::Mat> maps) {
  DepthSequence seq;
  seq.size_ = maps.size();
  auto shared = std::make_shared<std::vector<cv::Mat>>(std::move(maps));
  seq.load_ = [shared](std::size_t i) {
    cv::Mat m = shared->at(i);
    if (m.type() != CV_32F) {
      cv::Mat converted;
      m.convertTo(converted, CV_32F);
      return converted;
    }
    return m;
  };
  return seq;
}

DepthSequence DepthSequence::from_files(std::vector<std::filesystem::path> paths, double scale) {
  DepthSequence seq;
  seq.size_ = paths.size();
  auto shared = std::make_shared<std::vector<std::filesystem::path>>(std::move(paths));
  seq.load_ = [shared, scale](std::size_t i) { return read_depth_png(shared->at(i), scale); };
  return seq;
}

cv::Mat DepthSequence::at(std::size_t index) const {
  if (index >= size_) {
    throw Error(ErrorKind::LengthMismatch,
                fmt::format("depth frame {} out of range (size {})", index, size_));
  }
  return load_(index);
}

cv::Mat read_depth_png(const std::filesystem::path& path, double scale) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_ANYDEPTH);
  if (raw.empty()) {
    throw Error(ErrorKind::Io, "cannot read depth image " + path.string());
  }
  cv::Mat meters;
  raw.convertTo(meters, CV_32F, scale);
  return meters;
}

std::vector<Eigen::Vector3d> depth_to_cloud(const cv::Mat& depth, const CameraIntrinsics& k,
                                            int stride) {
  std::vector<Eigen::Vector3d> cloud;
  stride = std::max(stride, 1);
  cloud.reserve(static_cast<std::size_t>(depth.rows / stride + 1) *
                static_cast<std::size_t>(depth.cols / stride + 1));
  for (int v = 0; v < depth.rows; v += stride) {
    const float* row = depth.ptr<float>(v);
    for (int u = 0; u < depth.cols; u += stride) {
      const double z = row[u];
      if (z > 0.0 && std::isfinite(z)) {
        cloud.push_back(back_project(u, v, z, k));
      }
    }
  }
  return cloud;
}

}  // namespace til
