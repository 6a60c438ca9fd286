#include "til/hand_motion.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "til/error.hpp"

namespace til {
namespace {

bool usable_depth(float z) { return z > 0.0f && std::isfinite(z); }

}  // namespace

std::optional<double> sample_depth(const cv::Mat& depth, double u, double v) {
  const int col = static_cast<int>(std::lround(u));
  const int row = static_cast<int>(std::lround(v));
  if (col < 0 || row < 0 || col >= depth.cols || row >= depth.rows) return std::nullopt;
  const float center = depth.at<float>(row, col);
  if (usable_depth(center)) return center;

  std::vector<float> neighborhood;
  for (int r = std::max(row - 2, 0); r <= std::min(row + 2, depth.rows - 1); ++r) {
    for (int c = std::max(col - 2, 0); c <= std::min(col + 2, depth.cols - 1); ++c) {
      const float z = depth.at<float>(r, c);
      if (usable_depth(z)) neighborhood.push_back(z);
    }
  }
  if (neighborhood.empty()) return std::nullopt;
  const auto mid = neighborhood.begin() + static_cast<long>(neighborhood.size() / 2);
  std::nth_element(neighborhood.begin(), mid, neighborhood.end());
  if (neighborhood.size() % 2 == 1) return *mid;
  const float upper = *mid;
  const float lower = *std::max_element(neighborhood.begin(), mid);
  return 0.5 * (static_cast<double>(lower) + static_cast<double>(upper));
}

std::vector<Eigen::Vector3d> fill_track_gaps(std::vector<Eigen::Vector3d> points,
                                             const std::vector<bool>& valid) {
  if (points.size() != valid.size()) {
    throw Error(ErrorKind::LengthMismatch, "track and validity flags differ in length");
  }
  std::vector<std::size_t> good;
  for (std::size_t i = 0; i < valid.size(); ++i) {
    if (valid[i]) good.push_back(i);
  }
  if (good.empty()) throw Error(ErrorKind::DegenerateTrack, "no frame has a valid wrist position");

  std::size_t next = 0;  // index into `good` of the first valid frame >= i
  for (std::size_t i = 0; i < points.size(); ++i) {
    while (next < good.size() && good[next] < i) ++next;
    if (valid[i]) continue;
    if (next == 0) {
      points[i] = points[good.front()];
    } else if (next == good.size()) {
      points[i] = points[good.back()];
    } else {
      const std::size_t a = good[next - 1];
      const std::size_t b = good[next];
      const double w = static_cast<double>(i - a) / static_cast<double>(b - a);
      points[i] = (1.0 - w) * points[a] + w * points[b];
    }
  }
  return points;
}

WristTrack lift_wrist_track(std::span<const std::optional<Pixel>> keypoints, const DepthSequence& depth,
                            const CameraIntrinsics& k) {
  if (keypoints.size() != depth.size()) {
    throw Error(ErrorKind::LengthMismatch,
                fmt::format("{} keypoints but {} depth maps", keypoints.size(), depth.size()));
  }
  WristTrack track;
  const std::size_t n = keypoints.size();
  track.cam_points.assign(n, Eigen::Vector3d::Zero());
  track.valid.assign(n, false);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& kp = keypoints[t];
    if (!kp || !k.contains(kp->u, kp->v)) continue;
    const auto z = sample_depth(depth.at(t), kp->u, kp->v);
    if (!z) continue;
    track.cam_points[t] = back_project(kp->u, kp->v, *z, k);
    track.valid[t] = true;
  }
  track.cam_points = fill_track_gaps(std::move(track.cam_points), track.valid);
  track.glob_points = track.cam_points;
  return track;
}

WristTrack pixel_track(std::span<const std::optional<Pixel>> keypoints) {
  WristTrack track;
  track.cam_points.assign(keypoints.size(), Eigen::Vector3d::Zero());
  track.valid.assign(keypoints.size(), false);
  for (std::size_t t = 0; t < keypoints.size(); ++t) {
    if (!keypoints[t]) continue;
    track.cam_points[t] = {keypoints[t]->u, keypoints[t]->v, 0.0};
    track.valid[t] = true;
  }
  track.cam_points = fill_track_gaps(std::move(track.cam_points), track.valid);
  track.glob_points = track.cam_points;
  return track;
}

WristTrack to_global(WristTrack track, const PoseSequence& poses) {
  if (poses.size() != track.size()) {
    throw Error(ErrorKind::LengthMismatch,
                fmt::format("{} poses for a track of {} frames", poses.size(), track.size()));
  }
  track.glob_points.resize(track.size());
  for (std::size_t t = 0; t < track.size(); ++t) {
    track.glob_points[t] = poses.transforms[t] * track.cam_points[t];
  }
  return track;
}

std::vector<double> speed_series(std::span<const Eigen::Vector3d> points, double dt) {
  if (points.size() < 2) {
    throw Error(ErrorKind::TooShort, fmt::format("speed needs at least 2 frames, got {}", points.size()));
  }
  if (!(dt > 0.0)) throw Error(ErrorKind::Config, fmt::format("frame interval must be positive, got {}", dt));
  std::vector<double> speeds(points.size());
  for (std::size_t t = 0; t + 1 < points.size(); ++t) {
    speeds[t] = (points[t + 1] - points[t]).norm() / dt;
  }
  speeds.back() = speeds[speeds.size() - 2];
  return speeds;
}

DynamicsConfig DynamicsConfig::for_fps(double fps) {
  DynamicsConfig config;
  if (fps < 15.0) {
    config.savgol_window = 5;
    config.savgol_order = 2;
  }
  return config;
}

std::vector<double> zero_acceleration_times(const DynamicsProfile& profile) {
  return spline_minima(profile.spline);
}

DynamicsProfile analyze_dynamics(std::span<const Eigen::Vector3d> points, double dt,
                                 const DynamicsConfig& config) {
  DynamicsProfile profile;
  profile.dt = dt;
  profile.speeds = speed_series(points, dt);
  const int n = static_cast<int>(profile.speeds.size());

  int window = config.savgol_window;
  int order = config.savgol_order;
  if (window > n) {
    window = n % 2 == 1 ? n : n - 1;
    profile.notes.push_back(fmt::format("smoothing window shrunk to {} for {} frames", window, n));
  }
  if (order >= window) order = window - 1;
  if (window >= 3) {
    profile.smoothed = smooth_speeds(profile.speeds, window, order, config.boundary);
  } else {
    profile.smoothed = profile.speeds;
    window = 1;
    order = 0;
    profile.notes.push_back("track too short to smooth");
  }
  profile.window_used = window;
  profile.order_used = order;

  profile.spline = fit_velocity_spline(profile.smoothed);
  if (profile.spline.degraded()) profile.notes.push_back("fewer than 4 samples; spline degraded");
  profile.zero_accel_times = zero_acceleration_times(profile);
  return profile;
}

}  // namespace til
