#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace til {

/// In-contact stages as inclusive, sorted, non-overlapping 1-based frame ranges.
struct ContactSegments {
  std::vector<std::pair<int, int>> intervals;

  int frame_count() const;
  bool operator==(const ContactSegments&) const = default;
};

/// Pairs each contact with the next separation. A separation with nothing open
/// starts right after the previous segment (frame 1 if none); a trailing contact
/// runs to n_obs.
ContactSegments build_segments(std::span<const int> contacts, std::span<const int> separations,
                               int n_obs);

/// |pred ∩ gt| / |gt|; empty gt scores 1 if pred is empty too, else 0.
double mof(const ContactSegments& pred, const ContactSegments& gt);

/// |pred ∩ gt| / |pred ∪ gt|; both empty scores 1.
double iou(const ContactSegments& pred, const ContactSegments& gt);

struct EventMatching {
  std::vector<std::pair<int, int>> pairs;  ///< (pred, gt)
  std::vector<int> unmatched_gt;
  std::vector<int> unmatched_pred;
};

/// Greedy one-to-one matching by ascending |pred - gt|; ties go to the earlier gt,
/// then the earlier prediction.
EventMatching match_events(std::span<const int> pred, std::span<const int> gt);

/// Concatenates matchings (e.g. contacts and separations).
EventMatching merge(const EventMatching& a, const EventMatching& b);

/// Mean |pred - gt| over matched pairs, or `n_obs` when nothing matched.
double mae(const EventMatching& matching, int n_obs);

/// Matched pairs within gamma frames divided by the number of ground-truth events.
/// No ground truth at all scores 1.
double sr(const EventMatching& matching, int gamma);

struct VideoScore {
  std::string video_id;
  int trial = 0;
  int n_obs = 0;
  double mof = 0.0;
  double iou = 0.0;
  double mae = 0.0;
  bool mae_fallback = false;  ///< no matched pairs; MAE set to n_obs
  int gt_events = 0;
  int matched = 0;
  int unmatched_gt = 0;
  int unmatched_pred = 0;
  std::vector<std::pair<int, double>> sr;  ///< (gamma, value)
  std::vector<std::pair<int, int>> successes;  ///< (gamma, matched within gamma)
};

VideoScore score_video(std::span<const int> pred_contacts, std::span<const int> pred_separations,
                       std::span<const int> gt_contacts, std::span<const int> gt_separations,
                       int n_obs, std::span<const int> gammas);

struct MetricsSummary {
  int videos = 0;
  double mof = 0.0;
  double iou = 0.0;
  double mae = 0.0;
  std::vector<std::pair<int, double>> sr;  ///< pooled over all ground-truth events
};

/// MoF/IoU/MAE averaged per video; SR pooled over all events.
MetricsSummary aggregate(std::span<const VideoScore> scores);

}  // namespace til
