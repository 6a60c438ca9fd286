#include "til/visual_prompt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include <fmt/core.h>
#include <opencv2/imgproc.hpp>

#include "til/error.hpp"

namespace til {
namespace {

constexpr int kFont = cv::FONT_HERSHEY_SIMPLEX;
constexpr int kLabelPad = 3;

cv::Mat as_bgr(const cv::Mat& image) {
  if (image.channels() == 3) return image;
  cv::Mat out;
  if (image.channels() == 1) {
    cv::cvtColor(image, out, cv::COLOR_GRAY2BGR);
  } else if (image.channels() == 4) {
    cv::cvtColor(image, out, cv::COLOR_BGRA2BGR);
  } else {
    throw Error(ErrorKind::Config, fmt::format("unsupported channel count {}", image.channels()));
  }
  return out;
}

int ceil_to_multiple(int value, int step) { return ((value + step - 1) / step) * step; }

/// Draws `text` on a filled white box anchored at `origin`; returns the box.
cv::Rect draw_label(cv::Mat& canvas, const std::string& text, cv::Point origin, int font_px) {
  const int thickness = std::max(1, font_px / 12);
  const double scale = cv::getFontScaleFromHeight(kFont, font_px, thickness);
  int baseline = 0;
  const cv::Size size = cv::getTextSize(text, kFont, scale, thickness, &baseline);
  cv::Rect box(origin.x, origin.y, size.width + 2 * kLabelPad, size.height + baseline + 2 * kLabelPad);
  box &= cv::Rect(0, 0, canvas.cols, canvas.rows);
  cv::rectangle(canvas, box, cv::Scalar::all(255), cv::FILLED);
  cv::putText(canvas, text, cv::Point(box.x + kLabelPad, box.y + kLabelPad + size.height), kFont, scale,
              cv::Scalar::all(0), thickness, cv::LINE_AA);
  return box;
}

}  // namespace

bool AdjacentWindow::contains(int frame) const {
  return std::find(frames.begin(), frames.end(), frame) != frames.end();
}

int anchor_slot(int n_tiles) { return n_tiles % 2 == 0 ? n_tiles / 2 : (n_tiles + 1) / 2; }

AdjacentWindow adjacent_window(int anchor, int n_adj, int n_obs, int stride) {
  if (n_adj < 1 || stride < 1) {
    throw Error(ErrorKind::Config, fmt::format("invalid window (n_adj {}, stride {})", n_adj, stride));
  }
  if (anchor < 1 || anchor > n_obs) {
    throw Error(ErrorKind::Config, fmt::format("anchor {} outside [1, {}]", anchor, n_obs));
  }
  const int tiles = n_adj * n_adj;
  const int span = stride * (tiles - 1) + 1;
  if (span > n_obs) {
    throw Error(ErrorKind::WindowTooLarge,
                fmt::format("window of {} frames (stride {}) does not fit {} frames", tiles, stride, n_obs));
  }

  int first = anchor - stride * (anchor_slot(tiles) - 1);
  // Shift by whole strides when possible so the anchor stays on the sampling grid.
  if (first < 1) {
    const int needed = 1 - first;
    const int shift = ceil_to_multiple(needed, stride);
    first += (first + shift + span - 1 <= n_obs) ? shift : needed;
  }
  if (first + span - 1 > n_obs) {
    const int needed = first + span - 1 - n_obs;
    const int shift = ceil_to_multiple(needed, stride);
    first -= (first - shift >= 1) ? shift : needed;
  }

  AdjacentWindow window;
  window.frames.reserve(static_cast<std::size_t>(tiles));
  for (int i = 0; i < tiles; ++i) window.frames.push_back(first + stride * i);

  int best = 0;
  for (int i = 1; i < tiles; ++i) {
    if (std::abs(window.frames[static_cast<std::size_t>(i)] - anchor) <
        std::abs(window.frames[static_cast<std::size_t>(best)] - anchor)) {
      best = i;
    }
  }
  window.anchor_position = best + 1;
  return window;
}

Box expand_box(const Box& box, int eps_w, int eps_h, int width, int height) {
  Box out{box.x0 - eps_w, box.y0 - eps_h, box.x1 + eps_w, box.y1 + eps_h};
  out.x0 = std::clamp(out.x0, 0, width - 1);
  out.x1 = std::clamp(out.x1, 0, width - 1);
  out.y0 = std::clamp(out.y0, 0, height - 1);
  out.y1 = std::clamp(out.y1, 0, height - 1);
  return out;
}

Box resolve_hand_box(const std::optional<Box>& detector_box, std::span<const Pixel> keypoints, int pad) {
  if (detector_box) return *detector_box;
  if (keypoints.empty()) throw Error(ErrorKind::MissingHand, "no hand box and no hand keypoints");
  double u0 = keypoints.front().u, u1 = u0, v0 = keypoints.front().v, v1 = v0;
  for (const auto& p : keypoints) {
    u0 = std::min(u0, p.u);
    u1 = std::max(u1, p.u);
    v0 = std::min(v0, p.v);
    v1 = std::max(v1, p.v);
  }
  return {static_cast<int>(std::floor(u0)) - pad, static_cast<int>(std::floor(v0)) - pad,
          static_cast<int>(std::ceil(u1)) + pad, static_cast<int>(std::ceil(v1)) + pad};
}

HandRegion hand_region(const cv::Mat& image, int frame, const Box& hand_box, int eps_w, int eps_h) {
  if (image.empty()) throw Error(ErrorKind::Io, fmt::format("frame {} image is empty", frame));
  if (hand_box.x1 < 0 || hand_box.y1 < 0 || hand_box.x0 >= image.cols || hand_box.y0 >= image.rows ||
      hand_box.x1 < hand_box.x0 || hand_box.y1 < hand_box.y0) {
    throw Error(ErrorKind::MissingHand, fmt::format("hand box in frame {} does not overlap the image", frame));
  }
  HandRegion region;
  region.frame = frame;
  region.box = expand_box(hand_box, eps_w, eps_h, image.cols, image.rows);
  region.crop = image(cv::Rect(region.box.x0, region.box.y0, region.box.width(), region.box.height())).clone();
  return region;
}

int LabelStyle::font_px(int tile_height) { return std::max(12, tile_height / 20); }

int boundary_label_band(int crop_height) {
  const int font_px = LabelStyle::font_px(crop_height);
  const int thickness = std::max(1, font_px / 12);
  const double scale = cv::getFontScaleFromHeight(kFont, font_px, thickness);
  int baseline = 0;
  const cv::Size size = cv::getTextSize("t2", kFont, scale, thickness, &baseline);
  return size.height + baseline + 2 * kLabelPad;
}

cv::Mat boundary_pair(const AdjacentWindow& window, const FrameLoader& frames, const HandBoxLookup& boxes,
                      int eps_w, int eps_h, int target_height) {
  if (window.frames.empty()) throw Error(ErrorKind::Config, "empty window");
  const int early_frame = window.first();
  const int late_frame = window.last();
  HandRegion early = hand_region(frames(early_frame), early_frame, boxes(early_frame), eps_w, eps_h);
  HandRegion late = hand_region(frames(late_frame), late_frame, boxes(late_frame), eps_w, eps_h);

  const int height = target_height > 0 ? target_height : std::max(early.crop.rows, late.crop.rows);
  auto fit = [height](const cv::Mat& crop) {
    cv::Mat bgr = as_bgr(crop);
    if (bgr.rows == height) return bgr;
    const int width = std::max(1, static_cast<int>(std::lround(bgr.cols * static_cast<double>(height) / bgr.rows)));
    cv::Mat out;
    cv::resize(bgr, out, cv::Size(width, height), 0, 0, cv::INTER_AREA);
    return out;
  };
  const cv::Mat left = fit(early.crop);
  const cv::Mat right = fit(late.crop);

  const int band = boundary_label_band(height);
  cv::Mat canvas(band + height, left.cols + right.cols, CV_8UC3, cv::Scalar::all(255));
  left.copyTo(canvas(cv::Rect(0, band, left.cols, height)));
  right.copyTo(canvas(cv::Rect(left.cols, band, right.cols, height)));
  const int font_px = LabelStyle::font_px(height);
  draw_label(canvas, "t1", {0, 0}, font_px);
  draw_label(canvas, "t2", {left.cols, 0}, font_px);
  return canvas;
}

GridImage grid_image(std::span<const int> frames, const FrameLoader& loader, int n_adj) {
  const auto tiles = static_cast<std::size_t>(n_adj) * static_cast<std::size_t>(n_adj);
  if (n_adj < 1 || frames.empty() || frames.size() > tiles) {
    throw Error(ErrorKind::Config, fmt::format("{} frames cannot fill a {}x{} grid", frames.size(), n_adj, n_adj));
  }
  std::vector<cv::Mat> images;
  images.reserve(frames.size());
  for (int f : frames) {
    images.push_back(loader(f));
    if (images.back().empty()) throw Error(ErrorKind::Io, fmt::format("frame {} image is empty", f));
    if (images.back().size() != images.front().size() || images.back().type() != images.front().type()) {
      throw Error(ErrorKind::MixedFrameSizes,
                  fmt::format("frame {} is {}x{}, expected {}x{}", f, images.back().cols, images.back().rows,
                              images.front().cols, images.front().rows));
    }
  }

  GridImage grid;
  grid.n_adj = n_adj;
  grid.tile_width = images.front().cols;
  grid.tile_height = images.front().rows;
  grid.image = cv::Mat::zeros(n_adj * grid.tile_height, n_adj * grid.tile_width, images.front().type());
  grid.tile_frames.assign(tiles, 0);
  const int font_px = LabelStyle::font_px(grid.tile_height);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const int row = static_cast<int>(i) / n_adj;
    const int col = static_cast<int>(i) % n_adj;
    const cv::Point origin(col * grid.tile_width, row * grid.tile_height);
    images[i].copyTo(grid.image(cv::Rect(origin.x, origin.y, grid.tile_width, grid.tile_height)));
    grid.tile_frames[i] = frames[i];
    cv::Mat tile = grid.image(cv::Rect(origin.x, origin.y, grid.tile_width, grid.tile_height));
    cv::Rect label = draw_label(tile, std::to_string(i + 1), {0, 0}, font_px);
    grid.label_rects.emplace_back(label.x + origin.x, label.y + origin.y, label.width, label.height);
  }
  return grid;
}

}  // namespace til
