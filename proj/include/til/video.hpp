#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "til/camera.hpp"
#include "til/visual_prompt.hpp"

namespace til {

/// Precomputed per-frame hand observations (keypoint detector + hand detector output).
struct HandObservation {
  std::optional<Pixel> wrist;
  std::optional<Pixel> index_tip;
  std::optional<Pixel> thumb_tip;
  std::optional<Box> box;
  std::vector<Pixel> keypoints;  ///< any additional 2D hand keypoints

  /// Every 2D keypoint known for this frame.
  std::vector<Pixel> all_keypoints() const;
  bool operator==(const HandObservation&) const = default;
};

struct GroundTruth {
  std::vector<int> contacts;     ///< 1-based frames
  std::vector<int> separations;  ///< 1-based frames
  bool operator==(const GroundTruth&) const = default;
};

struct VideoRecord {
  std::string id;
  double fps = 30.0;
  std::vector<std::filesystem::path> frames;
  std::vector<std::filesystem::path> depth;
  double depth_scale = 0.001;  ///< raw depth unit -> meters
  CameraIntrinsics intrinsics;
  std::vector<HandObservation> hand;
  std::optional<GroundTruth> ground_truth;
  std::filesystem::path source;  ///< manifest this record was loaded from

  int n_obs() const noexcept { return static_cast<int>(frames.size()); }
  double dt() const noexcept { return 1.0 / fps; }
  bool has_depth() const noexcept { return !depth.empty(); }

  DepthSequence depth_sequence() const;
  /// 1-based frame access; throws Error(Io) if the image cannot be read.
  cv::Mat load_frame(int frame) const;
  std::vector<std::optional<Pixel>> wrist_pixels() const;
};

}  // namespace til
