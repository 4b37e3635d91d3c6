#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "refign/losses.hpp"

using namespace refign;

namespace {

FlowField constant(int h, int w, float u, float v) { return FlowField(h, w, u, v); }

FlowField random_flow(int h, int w, std::mt19937_64& g, float reach) {
  std::uniform_real_distribution<float> u(-reach, reach);
  FlowField f(h, w);
  for (float& v : f.data()) v = u(g);
  return f;
}

}  // namespace

TEST_CASE("huber") {
  CHECK(huber(0.0, 1.0) == 0.0);
  CHECK(huber(2.0, 1.0) == 1.5);
  CHECK(huber(0.5, 1.0) == 0.125);
  CHECK(huber(1.0, 1.0) == 0.5);
  CHECK(huber(std::nextafter(1.0, 2.0), 1.0) == doctest::Approx(0.5));
  CHECK(huber(3.0, 2.0) == 4.0);
}

TEST_CASE("direct loss fixtures") {
  const LossConfig cfg;
  const auto w = constant(4, 5, 1.0f, -2.0f);
  CHECK(direct_loss(w, w, cfg) == 0.0);
  CHECK(direct_loss(constant(4, 5, 1.3f, -1.6f), w, cfg) == doctest::Approx(0.125).epsilon(1e-6));
  CHECK(direct_loss(constant(4, 5, 4.0f, 2.0f), w, cfg) == doctest::Approx(4.5));
  CHECK_THROWS_AS(direct_loss(constant(4, 4, 0, 0), w, cfg), Error);
}

TEST_CASE("visibility mask") {
  const LossConfig cfg;
  SUBCASE("exact composite is visible") {
    std::mt19937_64 g(1);
    const auto f = random_flow(4, 4, g, 3.0f);
    const auto b = random_flow(4, 4, g, 3.0f);
    FlowField w = f;
    for (std::size_t i = 0; i < w.data().size(); ++i) w.data()[i] += b.data()[i];
    // Recompute the sum in double to make the residual exactly zero.
    const auto v = visibility_mask(f, b, w, cfg);
    for (std::size_t p = 0; p < 16; ++p) {
      const double du = static_cast<double>(f.data()[2 * p]) + b.data()[2 * p] - w.data()[2 * p];
      const double dv = static_cast<double>(f.data()[2 * p + 1]) + b.data()[2 * p + 1] - w.data()[2 * p + 1];
      CHECK(du * du + dv * dv < cfg.alpha2);
      CHECK(v.at(p));
    }
  }
  SUBCASE("large unexplained displacement is hidden") {
    const auto v = visibility_mask(constant(2, 2, 0, 0), constant(2, 2, 0, 0), constant(2, 2, 10, 0), cfg);
    CHECK(v.count() == 0);
  }
  SUBCASE("equality is not visible") {
    // f = 0, b = 0, w = (x, 0): lhs x^2, rhs a2 + a1 x^2; equal when x^2 = a2 / (1 - a1).
    LossConfig c;
    c.alpha1 = 0.5;
    c.alpha2 = 0.5;
    // x^2 = 1 gives lhs = 1 = rhs exactly.
    const auto v = visibility_mask(constant(1, 1, 0, 0), constant(1, 1, 0, 0), constant(1, 1, 1, 0), c);
    CHECK_FALSE(v.at(0));
    const auto v2 = visibility_mask(constant(1, 1, 0, 0), constant(1, 1, 0, 0), constant(1, 1, 0.999f, 0), c);
    CHECK(v2.at(0));
  }
  SUBCASE("matches the inequality on scaled random inputs") {
    std::mt19937_64 g(3);
    for (int trial = 0; trial < 200; ++trial) {
      auto f = random_flow(3, 3, g, 2.0f), b = random_flow(3, 3, g, 2.0f), w = random_flow(3, 3, g, 2.0f);
      for (float s : {1.0f, 2.0f, 8.0f}) {
        for (auto* field : {&f, &b, &w})
          for (float& x : field->data()) x *= s;
        const auto v = visibility_mask(f, b, w, cfg);
        for (std::size_t p = 0; p < 9; ++p) {
          double lhs = 0, rhs = cfg.alpha2;
          for (int k = 0; k < 2; ++k) {
            const double fk = f.data()[2 * p + k], bk = b.data()[2 * p + k], wk = w.data()[2 * p + k];
            lhs += (fk + bk - wk) * (fk + bk - wk);
            rhs += cfg.alpha1 * (fk * fk + bk * bk + wk * wk);
          }
          CHECK(v.at(p) == (lhs < rhs));
        }
      }
    }
  }
}

TEST_CASE("composite loss") {
  const LossConfig cfg;
  const auto w = constant(2, 4, 0, 0);
  CHECK(composite_loss(w, w, ValidityMask(2, 4, true), cfg) == 0.0);
  CHECK(composite_loss(constant(2, 4, 5, 5), w, ValidityMask(2, 4, false), cfg) == 0.0);
  ValidityMask half(2, 4, false);
  for (int x = 0; x < 4; ++x) half.set(0, x, true);
  FlowField c = constant(2, 4, 0.3f, 0.4f);
  for (int x = 0; x < 4; ++x) c(1, x, 0) = 50.0f;
  CHECK(composite_loss(c, w, half, cfg) == doctest::Approx(0.125).epsilon(1e-6));
}

TEST_CASE("nll loss fixtures") {
  const LossConfig cfg;
  const auto w = constant(3, 3, 1, 1);
  const ValidityMask all(3, 3, true);
  CHECK(nll_loss(GaussianFlow(w, ScalarField(3, 3)), w, all, cfg) == 0.0);
  CHECK(nll_loss(GaussianFlow(constant(3, 3, 3, 1), ScalarField(3, 3)), w, all, cfg) == doctest::Approx(0.75));
  SUBCASE("unit variance reduces to half the huber loss") {
    std::mt19937_64 g(8);
    const auto pred = random_flow(3, 3, g, 4.0f);
    CHECK(nll_loss(GaussianFlow(pred, ScalarField(3, 3)), w, all, cfg) ==
          doctest::Approx(0.5 * direct_loss(pred, w, cfg)).epsilon(1e-12));
  }
}

TEST_CASE("nll stationary variance is half the huber loss") {
  const LossConfig cfg;
  for (double residual : {0.3, 0.9, 1.7, 4.0}) {
    const double h = huber(residual, cfg.huber_delta);
    auto f = [&](double lv) { return h / (2.0 * std::exp(lv)) + lv; };
    const double lv_star = oracle::golden_section(f, -10.0, 10.0, 1e-12);
    CHECK(std::exp(lv_star) == doctest::Approx(h / 2.0).epsilon(1e-6));

    const auto w = constant(1, 1, 0, 0);
    const float lv = static_cast<float>(std::log(h / 2.0));
    GaussianFlow g(constant(1, 1, static_cast<float>(residual), 0), ScalarField(1, 1, lv));
    const auto grad = nll_gradients(g, w, ValidityMask(1, 1, true), cfg);
    CHECK(std::abs(grad.d_log_variance.data()[0]) < 1e-6);
  }
}

TEST_CASE("nll gradients match central finite differences") {
  const LossConfig cfg;
  std::mt19937_64 g(2024);
  std::uniform_real_distribution<float> lv(-2.0f, 2.0f);
  std::bernoulli_distribution keep(0.8);
  double worst = 0.0;
  for (int instance = 0; instance < 100; ++instance) {
    const int h = 3, w = 4;
    FlowField mean = random_flow(h, w, g, 3.0f);
    const FlowField target = random_flow(h, w, g, 3.0f);
    ScalarField logvar(h, w);
    for (float& v : logvar.data()) v = lv(g);
    ValidityMask vis(h, w, false);
    for (std::size_t p = 0; p < vis.pixel_count(); ++p) vis.set(p, keep(g));
    // Keep residual norms away from the Huber kink.
    for (std::size_t p = 0; p < vis.pixel_count(); ++p) {
      const double n = std::hypot(mean.data()[2 * p] - target.data()[2 * p],
                                  mean.data()[2 * p + 1] - target.data()[2 * p + 1]);
      if (std::abs(n - cfg.huber_delta) < 0.05) mean.data()[2 * p] += 0.2f;
    }
    // Near the optimal variance the log-variance gradient cancels to almost
    // nothing and the O(h^2) truncation of the difference quotient dominates.
    for (std::size_t p = 0; p < vis.pixel_count(); ++p) {
      const double n = std::hypot(mean.data()[2 * p] - target.data()[2 * p],
                                  mean.data()[2 * p + 1] - target.data()[2 * p + 1]);
      const double ratio = huber(n, cfg.huber_delta) / (2.0 * std::exp(static_cast<double>(logvar.data()[p])));
      if (std::abs(1.0 - ratio) < 0.05) logvar.data()[p] += 0.5f;
    }
    const GaussianFlow base(mean, logvar, vis);
    const auto grad = nll_gradients(base, target, vis, cfg);

    for (std::size_t i = 0; i < mean.data().size(); ++i) {
      auto loss_at = [&](float x) {
        FlowField m = mean;
        m.data()[i] = x;
        return nll_loss(GaussianFlow(m, logvar, vis), target, vis, cfg);
      };
      const double fd = oracle::central_difference_f32(loss_at, mean.data()[i], 1e-3f);
      const double an = grad.d_mean.data()[i];
      if (!vis.at(i / 2)) {
        CHECK(an == 0.0);
        continue;
      }
      worst = std::max(worst, oracle::relative_error(an, fd));
    }
    for (std::size_t p = 0; p < logvar.data().size(); ++p) {
      auto loss_at = [&](float x) {
        ScalarField l = logvar;
        l.data()[p] = x;
        return nll_loss(GaussianFlow(mean, l, vis), target, vis, cfg);
      };
      const double fd = oracle::central_difference_f32(loss_at, logvar.data()[p], 1e-3f);
      const double an = grad.d_log_variance.data()[p];
      if (!vis.at(p)) {
        CHECK(an == 0.0);
        continue;
      }
      worst = std::max(worst, oracle::relative_error(an, fd));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("zero residual gives zero mean gradient") {
  const auto w = constant(2, 2, 1.5f, -0.5f);
  const auto grad = nll_gradients(GaussianFlow(w, ScalarField(2, 2, 0.7f)), w, ValidityMask(2, 2, true), LossConfig{});
  for (float v : grad.d_mean.data()) CHECK(v == 0.0f);
}

TEST_CASE("alignment loss report") {
  const LossConfig cfg{0.7, 1.0, 0.03, 0.05};
  std::mt19937_64 g(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto direct = random_flow(6, 6, g, 1.0f);
    const auto fij = random_flow(6, 6, g, 1.0f);
    const auto fji = random_flow(6, 6, g, 1.0f);
    const auto w = random_flow(6, 6, g, 1.0f);
    const auto r = alignment_loss(direct, fij, fji, w, cfg);
    CHECK(r.total == r.direct_term + cfg.lambda_weight * r.composite_term);
    CHECK(r.direct_term >= 0.0);
    CHECK(r.composite_term >= 0.0);
    CHECK(r.visible_fraction >= 0.0);
    CHECK(r.visible_fraction <= 1.0);

    std::uniform_real_distribution<float> lv(-1.0f, 1.0f);
    ScalarField l1(6, 6), l2(6, 6), l3(6, 6);
    for (auto* l : {&l1, &l2, &l3})
      for (float& v : l->data()) v = lv(g);
    const auto p = probabilistic_alignment_loss(GaussianFlow(direct, l1), GaussianFlow(fij, l2),
                                                GaussianFlow(fji, l3), w, cfg);
    CHECK(p.total == p.direct_term + cfg.lambda_weight * p.composite_term);
  }
}

TEST_CASE("a perfect composite triangle costs nothing") {
  const LossConfig cfg;
  const auto fij = constant(5, 5, 1, 0), fji = constant(5, 5, 0, 1), w = constant(5, 5, 1, 1);
  const auto r = alignment_loss(w, fij, fji, w, cfg);
  CHECK(r.total == 0.0);
  CHECK(r.visible_fraction == doctest::Approx(20.0 / 25.0));
}

TEST_CASE("loss configuration must be positive") {
  LossConfig cfg;
  cfg.alpha1 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
