#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <opencv2/core.hpp>

#include "til/camera.hpp"

namespace til {

/// The N_adj^2 frames tiled around an anchor.
struct AdjacentWindow {
  std::vector<int> frames;  ///< 1-based, strictly increasing
  int anchor_position = 1;  ///< 1-based index into `frames`

  int anchor() const { return frames.at(static_cast<std::size_t>(anchor_position - 1)); }
  int first() const { return frames.front(); }
  int last() const { return frames.back(); }
  /// Frame shown in 1-based tile `index`.
  int frame_at(int index) const { return frames.at(static_cast<std::size_t>(index - 1)); }
  bool contains(int frame) const;
  bool operator==(const AdjacentWindow&) const = default;
};

/// Preferred anchor slot: n/2 for even tile counts, (n+1)/2 for odd.
int anchor_slot(int n_tiles);

/// Window of n_adj^2 frames around `anchor`, shifted (never shrunk) to fit [1, n_obs].
/// Throws Error(WindowTooLarge) when the video is shorter than the window span.
AdjacentWindow adjacent_window(int anchor, int n_adj, int n_obs, int stride = 1);

/// Inclusive pixel rectangle.
struct Box {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0 + 1; }
  int height() const noexcept { return y1 - y0 + 1; }
  bool contains(const Box& other) const noexcept {
    return x0 <= other.x0 && y0 <= other.y0 && x1 >= other.x1 && y1 >= other.y1;
  }
  bool operator==(const Box&) const = default;
};

/// Grows the box by eps on each side, then clamps to the image.
Box expand_box(const Box& box, int eps_w, int eps_h, int width, int height);

/// Detector box if present, else the keypoint bounding rectangle padded by `pad`.
/// Throws Error(MissingHand) when neither exists.
Box resolve_hand_box(const std::optional<Box>& detector_box, std::span<const Pixel> keypoints,
                     int pad = 20);

struct HandRegion {
  int frame = 0;
  Box box;
  cv::Mat crop;
};

HandRegion hand_region(const cv::Mat& image, int frame, const Box& hand_box, int eps_w,
                       int eps_h);

using FrameLoader = std::function<cv::Mat(int frame)>;
using HandBoxLookup = std::function<Box(int frame)>;

struct LabelStyle {
  /// Glyph height max(12, h / 20) px for tile height h.
  static int font_px(int tile_height);
};

/// Earlier and later expanded hand crops side by side under a "t1" / "t2" label band.
/// `target_height` == 0 keeps the taller crop's height.
cv::Mat boundary_pair(const AdjacentWindow& window, const FrameLoader& frames,
                      const HandBoxLookup& boxes, int eps_w, int eps_h, int target_height = 0);

/// Height of the label band boundary_pair adds for a given crop height.
int boundary_label_band(int crop_height);

struct GridImage {
  cv::Mat image;
  int n_adj = 0;
  int tile_width = 0;
  int tile_height = 0;
  std::vector<int> tile_frames;     ///< row-major; 0 marks an empty tile
  std::vector<cv::Rect> label_rects;

  /// 1-based tile index -> frame.
  int frame_of_tile(int index) const { return tile_frames.at(static_cast<std::size_t>(index - 1)); }
};

/// Row-major chronological tiling with 1-based labels in each tile's top-left corner.
/// Fewer frames than tiles leaves trailing tiles black. All frames must share one size.
GridImage grid_image(std::span<const int> frames, const FrameLoader& loader, int n_adj);

}  // namespace til
