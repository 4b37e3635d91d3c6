#pragma once

// Reference computations used to check the library. Nothing here calls into
// the code under test except for plain data accessors.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "refign/grid.hpp"
#include "refign/metrics.hpp"

namespace oracle {

struct McEstimate {
  double p = 0.0;
  double standard_error = 0.0;  // of the estimator, from the sampled p
};

/// P(|X| <= r) for X ~ N(0, variance * I2), by direct sampling.
inline McEstimate disc_probability(double variance, double radius, std::size_t samples,
                                   std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  std::size_t inside = 0;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < samples; ++i) {
    const double dx = normal(engine), dy = normal(engine);
    if (dx * dx + dy * dy <= r2) ++inside;
  }
  McEstimate est;
  est.p = static_cast<double>(inside) / static_cast<double>(samples);
  est.standard_error = std::sqrt(est.p * (1.0 - est.p) / static_cast<double>(samples));
  return est;
}

/// Bilinear sample of channel k at (sx, sy); empty outside [0, w-1] x [0, h-1].
inline std::optional<double> bilinear(const refign::Field& f, double sx, double sy, int k) {
  if (!(sx >= 0.0 && sy >= 0.0 && sx <= f.width() - 1 && sy <= f.height() - 1)) return std::nullopt;
  const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, f.width() - 1), y1 = std::min(y0 + 1, f.height() - 1);
  const double ax = sx - x0, ay = sy - y0;
  return (1 - ay) * ((1 - ax) * f(y0, x0, k) + ax * f(y0, x1, k)) +
         ay * ((1 - ax) * f(y1, x0, k) + ax * f(y1, x1, k));
}

/// Projective map of (x, y) through a row-major 3x3 matrix.
inline std::array<double, 2> project(const std::array<double, 9>& m, double x, double y) {
  const double w = m[6] * x + m[7] * y + m[8];
  return {(m[0] * x + m[1] * y + m[2]) / w, (m[3] * x + m[4] * y + m[5]) / w};
}

/// Central difference of f around a float coordinate. The step is taken in
/// float and the quotient uses the step actually realised.
template <class F>
double central_difference_f32(F&& f, float x0, float h) {
  const float plus = x0 + h;
  const float minus = x0 - h;
  return (f(plus) - f(minus)) / (static_cast<double>(plus) - static_cast<double>(minus));
}

template <class F>
double central_difference(F&& f, double x0, double h) {
  return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

inline double relative_error(double analytic, double numeric, double floor = 1e-7) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Minimiser of a unimodal f on [a, b].
template <class F>
double golden_section(F&& f, double a, double b, double tol = 1e-12) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// AUSE by repeatedly deleting the current worst element (largest key, first
/// in input order on ties) and recomputing the remaining mean error.
inline double brute_force_ause(const refign::MatchSet& ms, const std::vector<double>& fractions) {
  const std::size_t n = ms.size();
  std::vector<double> err(n), var(n);
  for (std::size_t i = 0; i < n; ++i) {
    err[i] = std::hypot(ms[i].truth[0] - ms[i].predicted[0], ms[i].truth[1] - ms[i].predicted[1]);
    var[i] = ms[i].variance;
  }
  const double full = std::accumulate(err.begin(), err.end(), 0.0) / static_cast<double>(n);
  if (full == 0.0) return 0.0;

  auto remaining_mean = [&](const std::vector<double>& key, std::size_t remove) {
    std::vector<bool> gone(n, false);
    for (std::size_t r = 0; r < remove; ++r) {
      std::size_t worst = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (gone[i]) continue;
        if (worst == n || key[i] > key[worst]) worst = i;
      }
      gone[worst] = true;
    }
    double sum = 0.0;
    std::size_t left = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!gone[i]) {
        sum += err[i];
        ++left;
      }
    }
    return sum / static_cast<double>(left);
  };

  std::vector<double> gap;
  for (double f : fractions) {
    std::size_t k = static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9));
    k = std::min(k, n - 1);
    gap.push_back((remaining_mean(var, k) - remaining_mean(err, k)) / full);
  }
  double area = 0.0;
  for (std::size_t i = 1; i < fractions.size(); ++i)
    area += 0.5 * (gap[i] + gap[i - 1]) * (fractions[i] - fractions[i - 1]);
  return area;
}

}  // namespace oracle
