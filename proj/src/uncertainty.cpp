#include "refign/uncertainty.hpp"

#include <algorithm>
#include <cmath>

namespace refign {

GaussianFlow::GaussianFlow(FlowField mean, ScalarField log_variance) {
  ValidityMask all(mean.height(), mean.width(), true);
  *this = GaussianFlow(std::move(mean), std::move(log_variance), std::move(all));
}

GaussianFlow::GaussianFlow(FlowField mean, ScalarField log_variance, ValidityMask validity)
    : mean_(std::move(mean)), log_variance_(std::move(log_variance)), validity_(std::move(validity)) {
  require(mean_.same_grid(log_variance_), "gaussian flow: mean and log-variance differ in size");
  require(validity_.height() == mean_.height() && validity_.width() == mean_.width(),
          "gaussian flow: validity mask differs in size");
  require(mean_.all_finite() && log_variance_.all_finite(), "gaussian flow: non-finite values");
  for (float& lv : log_variance_.data()) lv = std::clamp(lv, kMinLogVariance, kMaxLogVariance);
}

double GaussianFlow::variance(std::size_t p) const noexcept {
  return std::exp(static_cast<double>(log_variance_.data()[p]));
}

ScalarField GaussianFlow::variance_field() const {
  ScalarField out(height(), width());
  auto dst = out.data();
  for (std::size_t p = 0; p < dst.size(); ++p) dst[p] = static_cast<float>(variance(p));
  return out;
}

GaussianFlow compose_gaussian(const GaussianFlow& g_ab, const GaussianFlow& g_bc) {
  require(g_ab.mean().same_grid(g_bc.mean()), "compose_gaussian: dimension mismatch");
  auto composed = compose_flow(g_ab.mean(), g_bc.mean());
  const auto warped_var = warp(g_bc.variance_field(), g_ab.mean());

  // The second leg is only trusted where every bilinear neighbour was valid.
  ScalarField indicator(g_bc.height(), g_bc.width());
  for (std::size_t p = 0; p < indicator.pixel_count(); ++p)
    indicator.data()[p] = g_bc.validity().at(p) ? 1.0f : 0.0f;
  const auto warped_indicator = warp(indicator, g_ab.mean());

  ScalarField log_var(g_ab.height(), g_ab.width());
  ValidityMask valid = g_ab.validity() & composed.valid;
  for (std::size_t p = 0; p < log_var.pixel_count(); ++p) {
    const double var = g_ab.variance(p) + static_cast<double>(warped_var.field.data()[p]);
    log_var.data()[p] = static_cast<float>(std::log(var));
    if (warped_indicator.field.data()[p] < 1.0f - 1e-6f) valid.set(p, false);
  }
  return GaussianFlow(std::move(composed.field), std::move(log_var), std::move(valid));
}

double confidence(double variance, double radius) {
  return -std::expm1(-(radius * radius) / (2.0 * variance));
}

ConfidenceMap confidence_map(const GaussianFlow& g, double radius) {
  require(radius > 0.0, "confidence radius must be positive");
  ConfidenceMap out(g.height(), g.width(), 0.0f);
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    if (!g.validity().at(p)) continue;
    out.data()[p] = static_cast<float>(confidence(g.variance(p), radius));
  }
  return out;
}

}  // namespace refign
