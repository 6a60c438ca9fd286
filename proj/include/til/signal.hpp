#pragma once

#include <span>
#include <vector>

namespace til {

enum class SavgolBoundary {
  Interpolate,  ///< fit the edge window and evaluate the polynomial there
  Mirror,       ///< reflect samples about the edge sample
};

/// Savitzky–Golay smoothing. Interior samples use the standard convolution;
/// edges follow `boundary`. Throws Error(Config) on window/order violations.
std::vector<double> smooth_speeds(std::span<const double> samples, int window, int order,
                                  SavgolBoundary boundary = SavgolBoundary::Interpolate);

/// Convolution weights for the sample at `position` (0-based) inside a window.
std::vector<double> savgol_coefficients(int window, int order, int position);

/// Piecewise cubic on knots t = 1, 2, ..., n (frame units).
///
/// Piece i covers [i+1, i+2] and evaluates a + b x + c x^2 + d x^3 with x = t - (i+1).
class CubicSpline {
 public:
  struct Piece {
    double a, b, c, d;
  };

  CubicSpline() = default;
  explicit CubicSpline(std::vector<Piece> pieces, bool degraded = false);

  double operator()(double t) const { return value(t); }
  double value(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;

  double t_min() const noexcept { return 1.0; }
  double t_max() const noexcept { return static_cast<double>(pieces_.size() + 1); }
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }
  /// True when fewer than four samples were available.
  bool degraded() const noexcept { return degraded_; }

 private:
  std::size_t piece_index(double t) const;

  std::vector<Piece> pieces_;
  bool degraded_ = false;
};

/// Natural cubic spline interpolating `samples` at integer frame times 1..n.
CubicSpline fit_velocity_spline(std::span<const double> samples);

/// Interior local minima of the spline (s' = 0, s'' > 0), ascending.
std::vector<double> spline_minima(const CubicSpline& spline);

}  // namespace til
