#include "til/sampler.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "til/error.hpp"

namespace til {

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) std::swap(lo, hi);
  const auto span = static_cast<double>(hi - lo + 1);
  const int offset = static_cast<int>(std::floor(uniform() * span));
  return lo + std::min(offset, hi - lo);
}

void SamplerConfig::validate() const {
  if (n_ac < 1) throw Error(ErrorKind::Config, fmt::format("n_ac must be >= 1, got {}", n_ac));
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::Config, fmt::format("lambda must be finite and >= 0, got {}", lambda));
  }
  if (n_adj < 2) throw Error(ErrorKind::Config, fmt::format("n_adj must be >= 2, got {}", n_adj));
}

AnchorPlan build_candidates(double center_time, int n_ac, int n_obs) {
  if (n_ac < 1) throw Error(ErrorKind::Config, "n_ac must be >= 1");
  if (n_obs < 1) throw Error(ErrorKind::TooShort, "video has no frames");
  AnchorPlan plan;
  plan.center_time = center_time;
  const int center = std::clamp(static_cast<int>(std::floor(center_time + 0.5)), 1, n_obs);
  const int left = n_ac / 2;
  const int right = n_ac - 1 - left;
  for (int f = center - left; f <= center + right; ++f) {
    if (f >= 1 && f <= n_obs) plan.candidates.push_back(f);
  }
  plan.remaining = plan.candidates;
  return plan;
}

std::vector<double> sampling_weights(std::span<const double> candidate_speeds, double lambda) {
  if (candidate_speeds.empty()) throw Error(ErrorKind::EmptyCandidates, "no candidates to weight");
  for (double v : candidate_speeds) {
    if (!std::isfinite(v)) throw Error(ErrorKind::Config, "candidate speeds must be finite");
  }
  // exp(-lambda v) / sum exp(-lambda v), shifted by the largest exponent.
  const double slowest = *std::min_element(candidate_speeds.begin(), candidate_speeds.end());
  std::vector<double> weights(candidate_speeds.size());
  double total = 0.0;
  for (std::size_t i = 0; i < candidate_speeds.size(); ++i) {
    weights[i] = std::exp(-lambda * (candidate_speeds[i] - slowest));
    total += weights[i];
  }
  for (double& w : weights) w /= total;
  return weights;
}

int sample_anchor(AnchorPlan& plan, std::span<const double> frame_speeds, double lambda, Rng& rng) {
  if (plan.remaining.empty()) {
    throw Error(ErrorKind::CandidatesExhausted,
                fmt::format("anchor plan {} has no remaining candidates", plan.id));
  }
  std::vector<double> speeds;
  speeds.reserve(plan.remaining.size());
  for (int f : plan.remaining) {
    if (f < 1 || static_cast<std::size_t>(f) > frame_speeds.size()) {
      throw Error(ErrorKind::LengthMismatch, fmt::format("no speed for frame {}", f));
    }
    speeds.push_back(frame_speeds[static_cast<std::size_t>(f - 1)]);
  }
  const std::vector<double> weights = sampling_weights(speeds, lambda);

  const double u = rng.uniform();
  std::size_t pick = weights.size() - 1;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cumulative += weights[i];
    if (u < cumulative) {
      pick = i;
      break;
    }
  }
  const int frame = plan.remaining[pick];
  plan.remaining.erase(plan.remaining.begin() + static_cast<long>(pick));
  plan.consumed.push_back(frame);
  return frame;
}

std::vector<int> fallback_uniform(int n_obs, int n_adj) {
  if (n_adj < 1) throw Error(ErrorKind::Config, "n_adj must be positive");
  const int interval = n_adj * n_adj;
  std::vector<int> anchors;
  for (int f = 1; f <= n_obs; f += interval) anchors.push_back(f);
  return anchors;
}

}  // namespace til
