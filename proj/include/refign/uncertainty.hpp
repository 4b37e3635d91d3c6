#pragma once

#include "refign/grid.hpp"

namespace refign {

inline constexpr float kMinLogVariance = -10.0f;
inline constexpr float kMaxLogVariance = 10.0f;

/// Isotropic per-pixel Gaussian over a flow: mean, log-variance shared by the
/// u and v directions, and the pixels where the flow is defined at all.
/// Log-variance is clamped to [kMinLogVariance, kMaxLogVariance] on entry.
class GaussianFlow {
 public:
  GaussianFlow() = default;
  GaussianFlow(FlowField mean, ScalarField log_variance);
  GaussianFlow(FlowField mean, ScalarField log_variance, ValidityMask validity);

  const FlowField& mean() const noexcept { return mean_; }
  const ScalarField& log_variance() const noexcept { return log_variance_; }
  const ValidityMask& validity() const noexcept { return validity_; }

  int height() const noexcept { return mean_.height(); }
  int width() const noexcept { return mean_.width(); }

  double variance(std::size_t p) const noexcept;
  ScalarField variance_field() const;

 private:
  FlowField mean_;
  ScalarField log_variance_;
  ValidityMask validity_;
};

/// Warp confidence in [0, 1]; exactly zero wherever the warp is invalid.
using ConfidenceMap = ScalarField;

/// Chains two flow distributions. Means compose like compose_flow; variances
/// add after warping the second leg's variance by the first leg's mean.
GaussianFlow compose_gaussian(const GaussianFlow& g_ab, const GaussianFlow& g_bc);

/// P(|F - mean| <= r) = 1 - exp(-r^2 / (2 variance)), zeroed on invalid pixels.
ConfidenceMap confidence_map(const GaussianFlow& g, double radius = 1.0);

/// Scalar form of the confidence for a single variance.
double confidence(double variance, double radius);

}  // namespace refign
