#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "til/camera.hpp"
#include "til/registration.hpp"
#include "til/signal.hpp"

namespace til {

struct WristTrack {
  std::vector<Eigen::Vector3d> cam_points;
  std::vector<Eigen::Vector3d> glob_points;
  std::vector<bool> valid;  ///< validity before temporal fill

  std::size_t size() const noexcept { return cam_points.size(); }
};

/// Depth (meters) at the pixel nearest to (u, v). Zero/NaN depth falls back to the
/// median of valid depths in the 5x5 neighborhood; returns nullopt if none.
std::optional<double> sample_depth(const cv::Mat& depth, double u, double v);

/// Fills invalid entries by linear interpolation between the nearest valid
/// neighbors; leading/trailing gaps copy the nearest valid point.
/// Throws Error(DegenerateTrack) when nothing is valid.
std::vector<Eigen::Vector3d> fill_track_gaps(std::vector<Eigen::Vector3d> points,
                                             const std::vector<bool>& valid);

WristTrack lift_wrist_track(std::span<const std::optional<Pixel>> keypoints,
                            const DepthSequence& depth, const CameraIntrinsics& k);

/// Planar track for the 2D ablation: (u, v, 0) per frame, gaps filled.
WristTrack pixel_track(std::span<const std::optional<Pixel>> keypoints);

WristTrack to_global(WristTrack track, const PoseSequence& poses);

/// Per-frame scalar speed |p[t+1] - p[t]| / dt; the last entry repeats the previous one.
std::vector<double> speed_series(std::span<const Eigen::Vector3d> points, double dt);

struct DynamicsConfig {
  int savgol_window = 7;
  int savgol_order = 3;
  SavgolBoundary boundary = SavgolBoundary::Interpolate;

  /// (7, 3) for 15 fps and above, (5, 2) below.
  static DynamicsConfig for_fps(double fps);
};

struct DynamicsProfile {
  std::vector<double> speeds;
  std::vector<double> smoothed;
  CubicSpline spline;
  std::vector<double> zero_accel_times;
  double dt = 0.0;
  /// Smoothing parameters actually used after shrinking to fit short tracks.
  int window_used = 0;
  int order_used = 0;
  std::vector<std::string> notes;
};

std::vector<double> zero_acceleration_times(const DynamicsProfile& profile);

/// speeds -> Savitzky–Golay -> natural spline -> interior minima.
DynamicsProfile analyze_dynamics(std::span<const Eigen::Vector3d> points, double dt,
                                 const DynamicsConfig& config = {});

}  // namespace til
