#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "til/error.hpp"
#include "til/signal.hpp"

namespace {

/// Oracle: fit a degree-`order` polynomial to samples[start, start + window) by
/// QR least squares on raw integer abscissae and evaluate it at `at`.
double polyfit_eval(const std::vector<double>& samples, int start, int window, int order, int at) {
  Eigen::MatrixXd a(window, order + 1);
  Eigen::VectorXd y(window);
  for (int i = 0; i < window; ++i) {
    for (int j = 0; j <= order; ++j) a(i, j) = std::pow(static_cast<double>(start + i - at), j);
    y(i) = samples[static_cast<std::size_t>(start + i)];
  }
  const Eigen::VectorXd c = a.householderQr().solve(y);
  return c(0);  // abscissae are centred on `at`
}

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> out(n);
  for (double& x : out) x = d(gen);
  return out;
}

double variance(const std::vector<double>& x) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(x.size());
}

TEST(Savgol, MatchesLeastSquaresOracleEverywhere) {
  const std::vector<double> y = noise(30, 3);
  for (auto [window, order] : {std::pair{7, 3}, std::pair{5, 2}, std::pair{9, 4}}) {
    const auto smoothed = til::smooth_speeds(y, window, order);
    const int n = static_cast<int>(y.size());
    const int half = window / 2;
    for (int i = 0; i < n; ++i) {
      const int start = std::clamp(i - half, 0, n - window);
      EXPECT_NEAR(smoothed[static_cast<std::size_t>(i)], polyfit_eval(y, start, window, order, i), 1e-10)
          << "window " << window << " sample " << i;
    }
  }
}

TEST(Savgol, ReproducesPolynomialsUpToItsOrder) {
  for (int degree = 0; degree <= 3; ++degree) {
    std::vector<double> y(40);
    for (std::size_t t = 0; t < y.size(); ++t) {
      const double x = static_cast<double>(t) / 10.0;
      y[t] = 0.5 - 0.3 * x + (degree >= 2 ? 0.2 * x * x : 0.0) + (degree >= 3 ? -0.05 * x * x * x : 0.0);
      if (degree == 0) y[t] = 0.5;
    }
    const auto smoothed = til::smooth_speeds(y, 7, 3);
    for (std::size_t t = 0; t < y.size(); ++t) EXPECT_NEAR(smoothed[t], y[t], 1e-9) << "degree " << degree;
  }
}

TEST(Savgol, ConstantSeriesUnchangedInBothEdgeModes) {
  const std::vector<double> y(12, 0.42);
  for (auto mode : {til::SavgolBoundary::Interpolate, til::SavgolBoundary::Mirror}) {
    const auto smoothed = til::smooth_speeds(y, 7, 3, mode);
    for (double v : smoothed) EXPECT_NEAR(v, 0.42, 1e-12);
  }
}

TEST(Savgol, MirrorEdgesConvolveReflectedSamples) {
  const std::vector<double> y = noise(15, 9);
  const auto smoothed = til::smooth_speeds(y, 5, 2, til::SavgolBoundary::Mirror);
  // Reflection about the edge sample: y[-k] = y[k].
  std::vector<double> padded = {y[2], y[1]};
  padded.insert(padded.end(), y.begin(), y.end());
  padded.push_back(y[13]);
  padded.push_back(y[12]);
  for (int i : {0, 1, 13, 14}) {
    EXPECT_NEAR(smoothed[static_cast<std::size_t>(i)], polyfit_eval(padded, i, 5, 2, i + 2), 1e-10) << i;
  }
}

TEST(Savgol, WhiteNoiseVarianceShrinks) {
  const std::vector<double> y = noise(500, 21);
  EXPECT_LT(variance(til::smooth_speeds(y, 7, 3)), variance(y));
}

TEST(Savgol, RejectsBadParameters) {
  const std::vector<double> y(10, 1.0);
  EXPECT_THROW(til::smooth_speeds(y, 6, 2), til::Error);
  EXPECT_THROW(til::smooth_speeds(y, 5, 5), til::Error);
  EXPECT_THROW(til::smooth_speeds(y, 11, 3), til::Error);
}

/// Oracle: natural spline second derivatives from a dense solve of the full system.
Eigen::VectorXd dense_natural_moments(const std::vector<double>& y) {
  const int n = static_cast<int>(y.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  a(0, 0) = 1.0;
  a(n - 1, n - 1) = 1.0;
  for (int i = 1; i < n - 1; ++i) {
    a(i, i - 1) = 1.0;
    a(i, i) = 4.0;
    a(i, i + 1) = 1.0;
    b(i) = 6.0 * (y[static_cast<std::size_t>(i + 1)] - 2.0 * y[static_cast<std::size_t>(i)] +
                  y[static_cast<std::size_t>(i - 1)]);
  }
  return a.fullPivLu().solve(b);
}

TEST(Spline, InterpolatesKnotsAndMatchesDenseOracle) {
  const std::vector<double> y = noise(25, 4);
  const til::CubicSpline s = til::fit_velocity_spline(y);
  const Eigen::VectorXd m = dense_natural_moments(y);
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double t = static_cast<double>(k + 1);
    EXPECT_NEAR(s(t), y[k], 1e-9);
    EXPECT_NEAR(s.second_derivative(t), m(static_cast<Eigen::Index>(k)), 1e-9);
  }
}

TEST(Spline, IsTwiceContinuouslyDifferentiableWithNaturalEnds) {
  const std::vector<double> y = noise(12, 5);
  const til::CubicSpline s = til::fit_velocity_spline(y);
  for (std::size_t i = 0; i + 1 < s.pieces().size(); ++i) {
    const auto& p = s.pieces()[i];
    const auto& q = s.pieces()[i + 1];
    EXPECT_NEAR(p.a + p.b + p.c + p.d, q.a, 1e-12);
    EXPECT_NEAR(p.b + 2 * p.c + 3 * p.d, q.b, 1e-12);
    EXPECT_NEAR(2 * p.c + 6 * p.d, 2 * q.c, 1e-12);
  }
  EXPECT_NEAR(s.second_derivative(s.t_min()), 0.0, 1e-12);
  EXPECT_NEAR(s.second_derivative(s.t_max()), 0.0, 1e-12);
}

TEST(Spline, LinearDataHasNoCurvature) {
  std::vector<double> y(10);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.3 + 0.07 * static_cast<double>(i);
  const til::CubicSpline s = til::fit_velocity_spline(y);
  for (double t = 1.0; t <= 10.0; t += 0.01) EXPECT_LT(std::abs(s.second_derivative(t)), 1e-8);
}

TEST(Spline, ParabolaMinimumAtAnalyticLocation) {
  // v(t) = (t - 2)^2 + 0.1 sampled at t = 0..4, i.e. knots 1..5; the minimum t = 2 is knot 3.
  std::vector<double> y;
  for (int t = 0; t <= 4; ++t) y.push_back((t - 2.0) * (t - 2.0) + 0.1);
  const auto minima = til::spline_minima(til::fit_velocity_spline(y));
  ASSERT_EQ(minima.size(), 1u);
  EXPECT_NEAR(minima[0], 3.0, 0.05);
}

TEST(SplineMinima, StationaryWithPositiveCurvature) {
  const std::vector<double> y = noise(40, 8);
  const til::CubicSpline s = til::fit_velocity_spline(y);
  const auto minima = til::spline_minima(s);
  ASSERT_FALSE(minima.empty());
  for (double t : minima) {
    EXPECT_LT(std::abs(s.derivative(t)), 1e-9) << t;
    EXPECT_GT(s.second_derivative(t), 0.0) << t;
    EXPECT_GT(t, s.t_min());
    EXPECT_LT(t, s.t_max());
  }
  EXPECT_TRUE(std::is_sorted(minima.begin(), minima.end()));
}

TEST(SplineMinima, TwoValleysMatchDenseScan) {
  std::vector<double> y(40);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double t = static_cast<double>(i + 1);
    y[i] = 1.0 - 0.6 * std::exp(-0.5 * std::pow((t - 12.3) / 3.0, 2)) - 0.5 * std::exp(-0.5 * std::pow((t - 29.6) / 3.5, 2));
  }
  const til::CubicSpline s = til::fit_velocity_spline(y);
  const auto minima = til::spline_minima(s);

  // Oracle: local minima of a 1e-3 grid evaluation.
  std::vector<double> scanned;
  double prev2 = s(1.0), prev1 = s(1.001);
  for (double t = 1.002; t <= 40.0; t += 0.001) {
    const double cur = s(t);
    if (prev1 < prev2 && prev1 < cur) scanned.push_back(t - 0.001);
    prev2 = prev1;
    prev1 = cur;
  }
  ASSERT_EQ(minima.size(), 2u);
  ASSERT_EQ(scanned.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(minima[i], scanned[i], 2e-3);
  EXPECT_LT(minima[0], minima[1]);
}

TEST(SplineMinima, MonotoneAndFlatDataHaveNone) {
  std::vector<double> rising(20), flat(20, 0.25);
  for (std::size_t i = 0; i < rising.size(); ++i) rising[i] = 0.1 + 0.02 * static_cast<double>(i * i);
  EXPECT_TRUE(til::spline_minima(til::fit_velocity_spline(rising)).empty());
  EXPECT_TRUE(til::spline_minima(til::fit_velocity_spline(flat)).empty());
}

TEST(Spline, FewSamplesAreFlaggedDegraded) {
  EXPECT_TRUE(til::fit_velocity_spline(std::vector<double>{1.0, 2.0, 1.5}).degraded());
  EXPECT_FALSE(til::fit_velocity_spline(std::vector<double>{1.0, 2.0, 1.5, 1.0}).degraded());
  EXPECT_THROW(til::fit_velocity_spline(std::vector<double>{1.0}), til::Error);
}

}  // namespace
