#include "refign/losses.hpp"

#include <cmath>

namespace refign {

namespace {

double residual_norm(const FlowField& a, const FlowField& b, std::size_t p) {
  const double du = static_cast<double>(a.data()[2 * p]) - b.data()[2 * p];
  const double dv = static_cast<double>(a.data()[2 * p + 1]) - b.data()[2 * p + 1];
  return std::hypot(du, dv);
}

double squared_norm(const FlowField& f, std::size_t p) {
  const double u = f.data()[2 * p];
  const double v = f.data()[2 * p + 1];
  return u * u + v * v;
}

void require_same(const Field& a, const Field& b, const char* op) {
  require(a.same_grid(b), std::string(op) + ": dimension mismatch");
}

void require_mask(const Field& a, const ValidityMask& v, const char* op) {
  require(a.height() == v.height() && a.width() == v.width(),
          std::string(op) + ": mask dimension mismatch");
}

}  // namespace

void LossConfig::validate() const {
  require(lambda_weight > 0.0 && huber_delta > 0.0 && alpha1 > 0.0 && alpha2 > 0.0,
          "loss configuration values must be positive");
}

double huber(double x, double delta) {
  return x <= delta ? 0.5 * x * x : delta * (x - 0.5 * delta);
}

double huber_slope(double x, double delta) { return x <= delta ? x : delta; }

double direct_loss(const FlowField& pred, const FlowField& w, const LossConfig& cfg) {
  require_same(pred, w, "direct_loss");
  const std::size_t n = pred.pixel_count();
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t p = 0; p < n; ++p) sum += huber(residual_norm(pred, w, p), cfg.huber_delta);
  return sum / static_cast<double>(n);
}

ValidityMask visibility_mask(const FlowField& f_ij, const FlowField& warped_f_ji,
                             const FlowField& w, const LossConfig& cfg) {
  require_same(f_ij, warped_f_ji, "visibility_mask");
  require_same(f_ij, w, "visibility_mask");
  ValidityMask v(f_ij.height(), f_ij.width(), false);
  for (std::size_t p = 0; p < v.pixel_count(); ++p) {
    const double du = static_cast<double>(f_ij.data()[2 * p]) + warped_f_ji.data()[2 * p] -
                      w.data()[2 * p];
    const double dv = static_cast<double>(f_ij.data()[2 * p + 1]) +
                      warped_f_ji.data()[2 * p + 1] - w.data()[2 * p + 1];
    const double lhs = du * du + dv * dv;
    const double rhs = cfg.alpha2 + cfg.alpha1 * (squared_norm(f_ij, p) +
                                                  squared_norm(warped_f_ji, p) +
                                                  squared_norm(w, p));
    v.set(p, lhs < rhs);
  }
  return v;
}

double composite_loss(const FlowField& composite, const FlowField& w, const ValidityMask& v,
                      const LossConfig& cfg) {
  require_same(composite, w, "composite_loss");
  require_mask(composite, v, "composite_loss");
  double sum = 0.0;
  std::size_t visible = 0;
  for (std::size_t p = 0; p < v.pixel_count(); ++p) {
    if (!v.at(p)) continue;
    sum += huber(residual_norm(composite, w, p), cfg.huber_delta);
    ++visible;
  }
  return visible == 0 ? 0.0 : sum / static_cast<double>(visible);
}

double nll_loss(const GaussianFlow& g, const FlowField& w, const ValidityMask& v,
                const LossConfig& cfg) {
  require_same(g.mean(), w, "nll_loss");
  require_mask(w, v, "nll_loss");
  double sum = 0.0;
  std::size_t visible = 0;
  for (std::size_t p = 0; p < v.pixel_count(); ++p) {
    if (!v.at(p)) continue;
    const double log_var = g.log_variance().data()[p];
    const double h = huber(residual_norm(g.mean(), w, p), cfg.huber_delta);
    sum += h / (2.0 * std::exp(log_var)) + log_var;
    ++visible;
  }
  return visible == 0 ? 0.0 : sum / static_cast<double>(visible);
}

NllGradients nll_gradients(const GaussianFlow& g, const FlowField& w, const ValidityMask& v,
                           const LossConfig& cfg) {
  require_same(g.mean(), w, "nll_gradients");
  require_mask(w, v, "nll_gradients");
  NllGradients out{FlowField(g.height(), g.width()), ScalarField(g.height(), g.width())};
  const std::size_t visible = v.count();
  if (visible == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(visible);

  for (std::size_t p = 0; p < v.pixel_count(); ++p) {
    if (!v.at(p)) continue;
    const double var = g.variance(p);
    const double du = static_cast<double>(g.mean().data()[2 * p]) - w.data()[2 * p];
    const double dv = static_cast<double>(g.mean().data()[2 * p + 1]) - w.data()[2 * p + 1];
    const double norm = std::hypot(du, dv);
    const double h = huber(norm, cfg.huber_delta);
    // d huber / d residual = slope(norm) * residual / norm, which is the
    // residual itself inside the quadratic zone (and 0 at norm 0).
    const double scale = norm <= cfg.huber_delta ? 1.0 : cfg.huber_delta / norm;
    out.d_mean.data()[2 * p] = static_cast<float>(inv_n * scale * du / (2.0 * var));
    out.d_mean.data()[2 * p + 1] = static_cast<float>(inv_n * scale * dv / (2.0 * var));
    out.d_log_variance.data()[p] = static_cast<float>(inv_n * (1.0 - h / (2.0 * var)));
  }
  return out;
}

LossReport alignment_loss(const FlowField& direct, const FlowField& f_ij, const FlowField& f_ji,
                          const FlowField& w, const LossConfig& cfg) {
  cfg.validate();
  const auto warped_ji = warp(f_ji, f_ij);
  FlowField composite = f_ij;
  for (std::size_t i = 0; i < composite.data().size(); ++i)
    composite.data()[i] += warped_ji.field.data()[i];
  const auto v = visibility_mask(f_ij, warped_ji.field, w, cfg) & warped_ji.valid;

  LossReport r;
  r.direct_term = direct_loss(direct, w, cfg);
  r.composite_term = composite_loss(composite, w, v, cfg);
  r.total = r.direct_term + cfg.lambda_weight * r.composite_term;
  r.visible_fraction = v.pixel_count() == 0
                           ? 0.0
                           : static_cast<double>(v.count()) / static_cast<double>(v.pixel_count());
  return r;
}

LossReport probabilistic_alignment_loss(const GaussianFlow& direct, const GaussianFlow& g_ij,
                                        const GaussianFlow& g_ji, const FlowField& w,
                                        const LossConfig& cfg) {
  cfg.validate();
  const auto composite = compose_gaussian(g_ij, g_ji);
  const auto warped_ji = warp(g_ji.mean(), g_ij.mean());
  const auto v = visibility_mask(g_ij.mean(), warped_ji.field, w, cfg) & composite.validity();

  LossReport r;
  r.direct_term = nll_loss(direct, w, direct.validity(), cfg);
  r.composite_term = nll_loss(composite, w, v, cfg);
  r.total = r.direct_term + cfg.lambda_weight * r.composite_term;
  r.visible_fraction = v.pixel_count() == 0
                           ? 0.0
                           : static_cast<double>(v.count()) / static_cast<double>(v.pixel_count());
  return r;
}

}  // namespace refign
