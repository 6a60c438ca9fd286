#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "til/error.hpp"
#include "til/sampler.hpp"

namespace {

using HighPrecision = boost::multiprecision::cpp_bin_float_50;

/// Oracle: exp(-lambda v_i) / sum_j exp(-lambda v_j) in 50-digit arithmetic, no shifting.
std::vector<double> direct_weights(const std::vector<double>& speeds, double lambda) {
  std::vector<HighPrecision> terms;
  HighPrecision total = 0;
  for (double v : speeds) {
    terms.push_back(boost::multiprecision::exp(-HighPrecision(lambda) * HighPrecision(v)));
    total += terms.back();
  }
  std::vector<double> out;
  for (const auto& t : terms) out.push_back(static_cast<double>(t / total));
  return out;
}

TEST(BuildCandidates, SymmetricAroundRoundedCenter) {
  EXPECT_EQ(til::build_candidates(10.3, 5, 100).candidates, (std::vector<int>{8, 9, 10, 11, 12}));
  EXPECT_EQ(til::build_candidates(10.6, 1, 100).candidates, (std::vector<int>{11}));
  EXPECT_EQ(til::build_candidates(1.2, 5, 100).candidates, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(til::build_candidates(99.9, 5, 100).candidates, (std::vector<int>{98, 99, 100}));
}

TEST(BuildCandidates, EvenCountLeansLeft) {
  EXPECT_EQ(til::build_candidates(10.0, 4, 100).candidates, (std::vector<int>{8, 9, 10, 11}));
}

TEST(Weights, ReferenceTriple) {
  const auto w = til::sampling_weights(std::vector<double>{0.1, 0.2, 0.4}, 1.0);
  EXPECT_NEAR(w[0], 0.3780, 5e-5);
  EXPECT_NEAR(w[1], 0.3420, 5e-5);
  EXPECT_NEAR(w[2], 0.2800, 5e-5);
}

TEST(Weights, MatchHighPrecisionOracle) {
  const std::vector<std::pair<std::vector<double>, double>> cases = {
      {{0.1, 0.2, 0.4}, 1.0},
      {{0.0, 0.5, 1.0, 1.5, 2.0}, 3.0},
      {{12.0, 12.5, 13.0}, 40.0},
      {{0.31, 0.05, 0.27, 0.9}, 0.25},
  };
  for (const auto& [speeds, lambda] : cases) {
    const auto w = til::sampling_weights(speeds, lambda);
    const auto oracle = direct_weights(speeds, lambda);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(w[i], oracle[i], 1e-12);
  }
}

TEST(Weights, UniformWhenSpeedsEqualOrLambdaZero) {
  for (double lambda : {0.0, 1.0, 50.0}) {
    for (double w : til::sampling_weights(std::vector<double>(4, 0.7), lambda)) EXPECT_EQ(w, 0.25);
  }
  for (double w : til::sampling_weights(std::vector<double>{0.1, 3.0, 9.0, 0.2, 5.0}, 0.0)) EXPECT_EQ(w, 0.2);
}

TEST(Weights, RejectEmptyInput) {
  try {
    til::sampling_weights(std::vector<double>{}, 1.0);
    FAIL();
  } catch (const til::Error& e) {
    EXPECT_EQ(e.kind(), til::ErrorKind::EmptyCandidates);
  }
}

TEST(SampleAnchor, SingleRemainingCandidate) {
  til::AnchorPlan plan;
  plan.candidates = plan.remaining = {42};
  til::Rng rng(1);
  const std::vector<double> speeds(50, 0.0);
  EXPECT_EQ(til::sample_anchor(plan, speeds, 1.0, rng), 42);
  EXPECT_TRUE(plan.remaining.empty());
  EXPECT_EQ(plan.consumed, std::vector<int>{42});
}

TEST(SampleAnchor, SeededSequencesRepeat) {
  const std::vector<double> speeds = {0.3, 0.1, 0.2, 0.25, 0.05, 0.4, 0.3};
  const auto draw_all = [&](std::uint64_t seed) {
    til::AnchorPlan plan = til::build_candidates(4, 7, 7);
    til::Rng rng(seed);
    std::vector<int> order;
    while (!plan.remaining.empty()) order.push_back(til::sample_anchor(plan, speeds, 5.0, rng));
    return order;
  };
  EXPECT_EQ(draw_all(9), draw_all(9));
}

TEST(SampleAnchor, ExhaustionIsExactAndWithoutReplacement) {
  til::AnchorPlan plan = til::build_candidates(10, 5, 100);
  til::Rng rng(3);
  const std::vector<double> speeds(100, 0.1);
  std::vector<int> seen;
  for (int i = 0; i < 5; ++i) seen.push_back(til::sample_anchor(plan, speeds, 1.0, rng));
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(seen, plan.candidates);
  try {
    til::sample_anchor(plan, speeds, 1.0, rng);
    FAIL();
  } catch (const til::Error& e) {
    EXPECT_EQ(e.kind(), til::ErrorKind::CandidatesExhausted);
  }
}

TEST(SampleAnchor, SlowFrameDominatesAtHighLambda) {
  // Frames 5, 6, 7 with speeds 0, 1, 1 (frame f reads speeds[f - 1]).
  std::vector<double> speeds(10, 1.0);
  speeds[4] = 0.0;
  til::Rng rng(2024);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) {
    til::AnchorPlan plan;
    plan.candidates = plan.remaining = {5, 6, 7};
    if (til::sample_anchor(plan, speeds, 50.0, rng) == 5) ++hits;
  }
  EXPECT_GT(hits / 10000.0, 0.99);
}

TEST(SampleAnchor, FrequenciesWithinThreeSigma) {
  const std::vector<double> speeds = {0.1, 0.2, 0.4, 0.15, 0.3};
  const double lambda = 4.0;
  const auto p = direct_weights(speeds, lambda);
  constexpr int kDraws = 10000;
  std::map<int, int> counts;
  til::Rng rng(77);
  for (int i = 0; i < kDraws; ++i) {
    til::AnchorPlan plan;
    plan.candidates = plan.remaining = {1, 2, 3, 4, 5};
    ++counts[til::sample_anchor(plan, speeds, lambda, rng)];
  }
  for (int f = 1; f <= 5; ++f) {
    const double pi = p[static_cast<std::size_t>(f - 1)];
    const double sigma = std::sqrt(kDraws * pi * (1 - pi));
    EXPECT_LE(std::abs(counts[f] - kDraws * pi), 3 * sigma) << "frame " << f;
  }
}

TEST(SampleAnchor, ResampleRenormalizesOverRemaining) {
  // After the first pick is removed, the next draw follows the weights of the rest.
  const std::vector<double> speeds = {0.0, 0.5, 1.0};
  const auto rest = direct_weights({0.5, 1.0}, 2.0);
  constexpr int kDraws = 10000;
  int second_is_frame2 = 0, trials = 0;
  til::Rng rng(5);
  for (int i = 0; i < kDraws * 3; ++i) {
    til::AnchorPlan plan;
    plan.candidates = plan.remaining = {1, 2, 3};
    if (til::sample_anchor(plan, speeds, 2.0, rng) != 1) continue;
    ++trials;
    if (til::sample_anchor(plan, speeds, 2.0, rng) == 2) ++second_is_frame2;
  }
  const double sigma = std::sqrt(trials * rest[0] * (1 - rest[0]));
  EXPECT_LE(std::abs(second_is_frame2 - trials * rest[0]), 3 * sigma);
}

TEST(FallbackUniform, EveryIntervalFrames) {
  EXPECT_EQ(til::fallback_uniform(10, 2), (std::vector<int>{1, 5, 9}));
  EXPECT_EQ(til::fallback_uniform(3, 2), (std::vector<int>{1}));
  EXPECT_EQ(til::fallback_uniform(33, 3), (std::vector<int>{1, 10, 19, 28}));
}

TEST(Rng, UniformIntStaysInRange) {
  til::Rng rng(0);
  for (int i = 0; i < 1000; ++i) {
    const int x = rng.uniform_int(3, 7);
    EXPECT_GE(x, 3);
    EXPECT_LE(x, 7);
  }
}

TEST(SamplerConfig, Validation) {
  EXPECT_NO_THROW((til::SamplerConfig{5, 1.0, 0, 2}.validate()));
  EXPECT_THROW((til::SamplerConfig{0, 1.0, 0, 2}.validate()), til::Error);
  EXPECT_THROW((til::SamplerConfig{5, -1.0, 0, 2}.validate()), til::Error);
  EXPECT_THROW((til::SamplerConfig{5, 1.0, 0, 1}.validate()), til::Error);
}

}  // namespace
