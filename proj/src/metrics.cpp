#include "til/metrics.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <optional>
#include <tuple>

#include <fmt/core.h>

#include "til/error.hpp"

namespace til {
namespace {

int overlap(const ContactSegments& a, const ContactSegments& b) {
  // Both interval lists are sorted and disjoint: sweep them together.
  int total = 0;
  std::size_t i = 0, j = 0;
  while (i < a.intervals.size() && j < b.intervals.size()) {
    const auto [a0, a1] = a.intervals[i];
    const auto [b0, b1] = b.intervals[j];
    const int lo = std::max(a0, b0);
    const int hi = std::min(a1, b1);
    if (lo <= hi) total += hi - lo + 1;
    if (a1 < b1) ++i;
    else ++j;
  }
  return total;
}

}  // namespace

int ContactSegments::frame_count() const {
  int total = 0;
  for (const auto& [start, end] : intervals) total += end - start + 1;
  return total;
}

ContactSegments build_segments(std::span<const int> contacts, std::span<const int> separations, int n_obs) {
  // Merge both lists on one timeline; at equal frames the separation closes first.
  std::vector<std::pair<int, bool>> timeline;  // (frame, is_contact)
  for (int c : contacts) timeline.emplace_back(c, true);
  for (int s : separations) timeline.emplace_back(s, false);
  std::sort(timeline.begin(), timeline.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : (!a.second && b.second);
  });

  ContactSegments out;
  std::optional<int> open;
  const auto close = [&](int start, int end) {
    start = std::clamp(start, 1, std::max(n_obs, 1));
    end = std::clamp(end, 1, std::max(n_obs, 1));
    if (end < start) return;
    if (!out.intervals.empty() && start <= out.intervals.back().second) {
      out.intervals.back().second = std::max(out.intervals.back().second, end);
    } else {
      out.intervals.emplace_back(start, end);
    }
  };
  for (const auto& [frame, is_contact] : timeline) {
    if (is_contact) {
      if (!open) open = frame;
    } else if (open) {
      close(*open, frame);
      open.reset();
    } else {
      // A separation with nothing open closes a segment that began right after the
      // previous segment (or at frame 1 if there is none).
      close(out.intervals.empty() ? 1 : out.intervals.back().second + 1, frame);
    }
  }
  if (open) close(*open, n_obs);
  return out;
}

double mof(const ContactSegments& pred, const ContactSegments& gt) {
  const int gt_frames = gt.frame_count();
  if (gt_frames == 0) return pred.frame_count() == 0 ? 1.0 : 0.0;
  return static_cast<double>(overlap(pred, gt)) / gt_frames;
}

double iou(const ContactSegments& pred, const ContactSegments& gt) {
  const int inter = overlap(pred, gt);
  const int uni = pred.frame_count() + gt.frame_count() - inter;
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / uni;
}

EventMatching match_events(std::span<const int> pred, std::span<const int> gt) {
  // Candidate pairs sorted by (distance, gt time, pred time), then taken greedily.
  std::vector<std::tuple<int, int, int, std::size_t, std::size_t>> candidates;
  candidates.reserve(pred.size() * gt.size());
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      candidates.emplace_back(std::abs(pred[p] - gt[g]), gt[g], pred[p], p, g);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<bool> pred_used(pred.size(), false), gt_used(gt.size(), false);
  EventMatching out;
  for (const auto& [distance, g_time, p_time, p, g] : candidates) {
    if (pred_used[p] || gt_used[g]) continue;
    pred_used[p] = gt_used[g] = true;
    out.pairs.emplace_back(p_time, g_time);
  }
  for (std::size_t g = 0; g < gt.size(); ++g) {
    if (!gt_used[g]) out.unmatched_gt.push_back(gt[g]);
  }
  for (std::size_t p = 0; p < pred.size(); ++p) {
    if (!pred_used[p]) out.unmatched_pred.push_back(pred[p]);
  }
  std::sort(out.pairs.begin(), out.pairs.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  return out;
}

EventMatching merge(const EventMatching& a, const EventMatching& b) {
  EventMatching out = a;
  out.pairs.insert(out.pairs.end(), b.pairs.begin(), b.pairs.end());
  out.unmatched_gt.insert(out.unmatched_gt.end(), b.unmatched_gt.begin(), b.unmatched_gt.end());
  out.unmatched_pred.insert(out.unmatched_pred.end(), b.unmatched_pred.begin(), b.unmatched_pred.end());
  return out;
}

double mae(const EventMatching& matching, int n_obs) {
  if (matching.pairs.empty()) return static_cast<double>(n_obs);
  double total = 0.0;
  for (const auto& [p, g] : matching.pairs) total += std::abs(p - g);
  return total / static_cast<double>(matching.pairs.size());
}

namespace {

int successes_within(const EventMatching& matching, int gamma) {
  return static_cast<int>(std::count_if(matching.pairs.begin(), matching.pairs.end(),
                                        [gamma](const auto& pair) { return std::abs(pair.first - pair.second) <= gamma; }));
}

}  // namespace

double sr(const EventMatching& matching, int gamma) {
  if (gamma < 0) throw Error(ErrorKind::Config, fmt::format("gamma must be >= 0, got {}", gamma));
  const std::size_t gt_count = matching.pairs.size() + matching.unmatched_gt.size();
  if (gt_count == 0) return 1.0;
  return static_cast<double>(successes_within(matching, gamma)) / static_cast<double>(gt_count);
}

VideoScore score_video(std::span<const int> pred_contacts, std::span<const int> pred_separations,
                       std::span<const int> gt_contacts, std::span<const int> gt_separations, int n_obs,
                       std::span<const int> gammas) {
  VideoScore score;
  score.n_obs = n_obs;
  const ContactSegments pred = build_segments(pred_contacts, pred_separations, n_obs);
  const ContactSegments gt = build_segments(gt_contacts, gt_separations, n_obs);
  score.mof = mof(pred, gt);
  score.iou = iou(pred, gt);

  const EventMatching matching =
      merge(match_events(pred_contacts, gt_contacts), match_events(pred_separations, gt_separations));
  score.mae = mae(matching, n_obs);
  score.mae_fallback = matching.pairs.empty();
  score.gt_events = static_cast<int>(gt_contacts.size() + gt_separations.size());
  score.matched = static_cast<int>(matching.pairs.size());
  score.unmatched_gt = static_cast<int>(matching.unmatched_gt.size());
  score.unmatched_pred = static_cast<int>(matching.unmatched_pred.size());
  for (int gamma : gammas) {
    score.sr.emplace_back(gamma, sr(matching, gamma));
    score.successes.emplace_back(gamma, successes_within(matching, gamma));
  }
  return score;
}

MetricsSummary aggregate(std::span<const VideoScore> scores) {
  MetricsSummary summary;
  summary.videos = static_cast<int>(scores.size());
  if (scores.empty()) return summary;
  std::map<int, std::pair<long, long>> pooled;  // gamma -> (successes, gt events)
  for (const VideoScore& s : scores) {
    summary.mof += s.mof;
    summary.iou += s.iou;
    summary.mae += s.mae;
    for (const auto& [gamma, hits] : s.successes) {
      pooled[gamma].first += hits;
      pooled[gamma].second += s.gt_events;
    }
  }
  const double n = static_cast<double>(scores.size());
  summary.mof /= n;
  summary.iou /= n;
  summary.mae /= n;
  for (const auto& [gamma, counts] : pooled) {
    summary.sr.emplace_back(gamma, counts.second == 0 ? 1.0 : static_cast<double>(counts.first) / counts.second);
  }
  return summary;
}

}  // namespace til
