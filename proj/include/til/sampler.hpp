#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace til {

/// Portable seeded generator.
///
/// std::mt19937_64 output is fixed by the standard; uniform doubles are built
/// from the top 53 bits so draws reproduce across standard libraries (unlike
/// std::uniform_real_distribution, whose algorithm is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);

 private:
  std::mt19937_64 engine_;
};

struct SamplerConfig {
  int n_ac = 5;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  int n_adj = 2;

  void validate() const;
};

struct AnchorPlan {
  int id = 0;
  double center_time = 0.0;
  std::vector<int> candidates;  ///< 1-based frames, ascending
  std::vector<int> remaining;   ///< ascending
  std::vector<int> consumed;    ///< in draw order
  bool resolved = false;
};

AnchorPlan build_candidates(double center_time, int n_ac, int n_obs);

/// Softmax of -lambda * speed, normalized after subtracting the minimum speed.
std::vector<double> sampling_weights(std::span<const double> candidate_speeds, double lambda);

/// Draws one frame from `plan.remaining` and moves it to `plan.consumed`.
/// `frame_speeds[f - 1]` is the speed at frame f. Throws Error(CandidatesExhausted).
int sample_anchor(AnchorPlan& plan, std::span<const double> frame_speeds, double lambda,
                  Rng& rng);

/// Anchors {1, 1 + n_adj^2, 1 + 2 n_adj^2, ...} not exceeding n_obs.
std::vector<int> fallback_uniform(int n_obs, int n_adj);

}  // namespace til
