#include "til/signal.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/core.h>

#include "til/error.hpp"

namespace til {

std::vector<double> savgol_coefficients(int window, int order, int position) {
  if (window < 1 || window % 2 == 0) {
    throw Error(ErrorKind::Config, fmt::format("Savitzky-Golay window must be odd and positive, got {}", window));
  }
  if (order < 0 || order >= window) {
    throw Error(ErrorKind::Config,
                fmt::format("Savitzky-Golay order {} must be in [0, window) for window {}", order, window));
  }
  if (position < 0 || position >= window) {
    throw Error(ErrorKind::Config, fmt::format("position {} outside window {}", position, window));
  }
  const int half = window / 2;
  const double scale = half > 0 ? static_cast<double>(half) : 1.0;
  Eigen::MatrixXd design(window, order + 1);
  for (int i = 0; i < window; ++i) {
    const double x = (i - half) / scale;
    double power = 1.0;
    for (int j = 0; j <= order; ++j) {
      design(i, j) = power;
      power *= x;
    }
  }
  Eigen::VectorXd at(order + 1);
  const double x0 = (position - half) / scale;
  double power = 1.0;
  for (int j = 0; j <= order; ++j) {
    at(j) = power;
    power *= x0;
  }
  // value(x0) = at' * pinv(A) * y, so the weights are pinv(A)' * at.
  const Eigen::MatrixXd pinv = design.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::VectorXd weights = pinv.transpose() * at;
  return {weights.data(), weights.data() + weights.size()};
}

std::vector<double> smooth_speeds(std::span<const double> samples, int window, int order,
                                  SavgolBoundary boundary) {
  const int n = static_cast<int>(samples.size());
  if (window < 1 || window % 2 == 0 || window <= order || order < 0) {
    throw Error(ErrorKind::Config,
                fmt::format("invalid Savitzky-Golay parameters (window {}, order {})", window, order));
  }
  if (window > n) {
    throw Error(ErrorKind::Config, fmt::format("window {} exceeds series length {}", window, n));
  }
  const int half = window / 2;
  const std::vector<double> center = savgol_coefficients(window, order, half);
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);

  auto convolve = [&](int i, auto&& sample) {
    double acc = 0.0;
    for (int j = 0; j < window; ++j) acc += center[static_cast<std::size_t>(j)] * sample(i - half + j);
    return acc;
  };
  auto direct = [&](int k) { return samples[static_cast<std::size_t>(k)]; };

  for (int i = half; i < n - half; ++i) out[static_cast<std::size_t>(i)] = convolve(i, direct);

  if (boundary == SavgolBoundary::Mirror) {
    auto mirrored = [&](int k) {
      if (k < 0) k = -k;
      if (k >= n) k = 2 * (n - 1) - k;
      return samples[static_cast<std::size_t>(k)];
    };
    for (int i = 0; i < std::min(half, n); ++i) out[static_cast<std::size_t>(i)] = convolve(i, mirrored);
    for (int i = std::max(n - half, half); i < n; ++i) out[static_cast<std::size_t>(i)] = convolve(i, mirrored);
    return out;
  }

  // Edge samples: evaluate the polynomial fitted to the first/last full window.
  for (int i = 0; i < half; ++i) {
    const auto w = savgol_coefficients(window, order, i);
    double acc = 0.0;
    for (int j = 0; j < window; ++j) acc += w[static_cast<std::size_t>(j)] * samples[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  const int start = n - window;
  for (int i = n - half; i < n; ++i) {
    const auto w = savgol_coefficients(window, order, i - start);
    double acc = 0.0;
    for (int j = 0; j < window; ++j) {
      acc += w[static_cast<std::size_t>(j)] * samples[static_cast<std::size_t>(start + j)];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

CubicSpline::CubicSpline(std::vector<Piece> pieces, bool degraded)
    : pieces_(std::move(pieces)), degraded_(degraded) {}

std::size_t CubicSpline::piece_index(double t) const {
  if (pieces_.empty()) throw Error(ErrorKind::TooShort, "empty spline");
  const double k = std::floor(t - 1.0);
  if (k <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(k), pieces_.size() - 1);
}

double CubicSpline::value(double t) const {
  const std::size_t i = piece_index(t);
  const Piece& p = pieces_[i];
  const double x = t - static_cast<double>(i + 1);
  return p.a + x * (p.b + x * (p.c + x * p.d));
}

double CubicSpline::derivative(double t) const {
  const std::size_t i = piece_index(t);
  const Piece& p = pieces_[i];
  const double x = t - static_cast<double>(i + 1);
  return p.b + x * (2.0 * p.c + 3.0 * x * p.d);
}

double CubicSpline::second_derivative(double t) const {
  const std::size_t i = piece_index(t);
  const Piece& p = pieces_[i];
  const double x = t - static_cast<double>(i + 1);
  return 2.0 * p.c + 6.0 * p.d * x;
}

CubicSpline fit_velocity_spline(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw Error(ErrorKind::TooShort, fmt::format("spline needs at least 2 samples, got {}", n));

  // Second derivatives with natural end conditions; unit knot spacing gives the
  // tridiagonal system M[i-1] + 4 M[i] + M[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]).
  std::vector<double> m(n, 0.0);
  if (n > 2) {
    const std::size_t inner = n - 2;
    std::vector<double> diag(inner, 4.0);
    std::vector<double> rhs(inner);
    for (std::size_t i = 0; i < inner; ++i) {
      rhs[i] = 6.0 * (samples[i + 2] - 2.0 * samples[i + 1] + samples[i]);
    }
    for (std::size_t i = 1; i < inner; ++i) {
      const double w = 1.0 / diag[i - 1];
      diag[i] -= w;
      rhs[i] -= w * rhs[i - 1];
    }
    m[inner] = rhs[inner - 1] / diag[inner - 1];
    for (std::size_t i = inner - 1; i-- > 0;) {
      m[i + 1] = (rhs[i] - m[i + 2]) / diag[i];
    }
  }

  std::vector<CubicSpline::Piece> pieces(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    pieces[i] = {samples[i], (samples[i + 1] - samples[i]) - (2.0 * m[i] + m[i + 1]) / 6.0, m[i] / 2.0,
                 (m[i + 1] - m[i]) / 6.0};
  }
  return CubicSpline(std::move(pieces), n < 4);
}

std::vector<double> spline_minima(const CubicSpline& spline) {
  const auto& pieces = spline.pieces();
  double scale = 0.0;
  for (const auto& p : pieces) scale = std::max({scale, std::abs(p.a), std::abs(p.b)});
  if (scale == 0.0) return {};
  // Curvature floor rejects rounding-level wiggles on flat data.
  const double curvature_floor = 1e-10 * scale;
  const double t_last = spline.t_max();

  std::vector<double> times;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& p = pieces[i];
    const double qa = 3.0 * p.d;
    const double qb = 2.0 * p.c;
    const double qc = p.b;
    std::vector<double> roots;
    const double coeff_scale = std::abs(qb) + std::abs(qc);
    if (std::abs(qa) <= 1e-14 * coeff_scale || qa == 0.0) {
      if (qb != 0.0) roots.push_back(-qc / qb);
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
        if (q != 0.0) {
          roots.push_back(q / qa);
          roots.push_back(qc / q);
        } else {
          roots.push_back(0.0);
        }
      }
    }
    const double t0 = static_cast<double>(i + 1);
    for (double x : roots) {
      if (!(x >= -1e-12 && x <= 1.0 + 1e-12)) continue;
      x = std::clamp(x, 0.0, 1.0);
      for (int step = 0; step < 3; ++step) {
        const double d1 = p.b + x * (2.0 * p.c + 3.0 * x * p.d);
        const double d2 = 2.0 * p.c + 6.0 * p.d * x;
        if (d2 == 0.0) break;
        const double next = x - d1 / d2;
        if (!(next >= 0.0 && next <= 1.0)) break;
        x = next;
      }
      const double curvature = 2.0 * p.c + 6.0 * p.d * x;
      const double t = t0 + x;
      if (curvature > curvature_floor && t > 1.0 + 1e-9 && t < t_last - 1e-9) times.push_back(t);
    }
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
              times.end());
  return times;
}

}  // namespace til
