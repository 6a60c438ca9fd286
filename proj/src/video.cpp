#include "til/video.hpp"

#include <fmt/core.h>
#include <opencv2/imgcodecs.hpp>

#include "til/error.hpp"

namespace til {

std::vector<Pixel> HandObservation::all_keypoints() const {
  std::vector<Pixel> out;
  if (wrist) out.push_back(*wrist);
  if (index_tip) out.push_back(*index_tip);
  if (thumb_tip) out.push_back(*thumb_tip);
  out.insert(out.end(), keypoints.begin(), keypoints.end());
  return out;
}

DepthSequence VideoRecord::depth_sequence() const {
  if (!has_depth()) throw Error(ErrorKind::Config, fmt::format("video '{}' has no depth", id));
  return DepthSequence::from_files(depth, depth_scale);
}

cv::Mat VideoRecord::load_frame(int frame) const {
  if (frame < 1 || frame > n_obs()) {
    throw Error(ErrorKind::Config, fmt::format("frame {} outside [1, {}] in video '{}'", frame, n_obs(), id));
  }
  const auto& path = frames[static_cast<std::size_t>(frame - 1)];
  cv::Mat image = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (image.empty()) throw Error(ErrorKind::Io, "cannot read frame " + path.string());
  return image;
}

std::vector<std::optional<Pixel>> VideoRecord::wrist_pixels() const {
  std::vector<std::optional<Pixel>> out;
  out.reserve(hand.size());
  for (const auto& h : hand) out.push_back(h.wrist);
  return out;
}

}  // namespace til
