#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "refign/uncertainty.hpp"

using namespace refign;

namespace {

GaussianFlow random_gaussian(int h, int w, std::uint64_t seed, float reach, float lv_lo, float lv_hi) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<float> m(-reach, reach), l(lv_lo, lv_hi);
  FlowField mean(h, w);
  ScalarField lv(h, w);
  for (float& v : mean.data()) v = m(g);
  for (float& v : lv.data()) v = l(g);
  return GaussianFlow(std::move(mean), std::move(lv));
}

}  // namespace

TEST_CASE("log-variance is clamped to [-10, 10]") {
  GaussianFlow g(FlowField(1, 3), ScalarField(1, 3, std::vector<float>{-50.0f, 0.5f, 50.0f}));
  CHECK(g.log_variance()(0, 0) == -10.0f);
  CHECK(g.log_variance()(0, 1) == 0.5f);
  CHECK(g.log_variance()(0, 2) == 10.0f);
}

TEST_CASE("non-finite means are rejected") {
  FlowField mean(1, 1);
  mean.data()[0] = std::nanf("");
  CHECK_THROWS_AS(GaussianFlow(mean, ScalarField(1, 1)), Error);
}

TEST_CASE("compose_gaussian adds variances under an identity first leg") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto a = random_gaussian(5, 6, seed, 0.0f, -3.0f, 3.0f);
    auto b = random_gaussian(5, 6, seed + 1000, 2.0f, -3.0f, 3.0f);
    const auto c = compose_gaussian(a, b);
    for (std::size_t p = 0; p < 30; ++p) {
      const double expected = std::exp(static_cast<double>(a.log_variance().data()[p])) +
                              static_cast<double>(static_cast<float>(std::exp(static_cast<double>(b.log_variance().data()[p]))));
      CHECK(c.log_variance().data()[p] == static_cast<float>(std::log(expected)));
      CHECK(c.variance(p) == doctest::Approx(expected).epsilon(1e-6));
    }
    CHECK(c.mean() == b.mean());
  }
}

TEST_CASE("compose_gaussian fixtures") {
  SUBCASE("unit plus two is three") {
    GaussianFlow a(FlowField(4, 4), ScalarField(4, 4, 0.0f));
    GaussianFlow b(FlowField(4, 4), ScalarField(4, 4, static_cast<float>(std::log(2.0))));
    const auto c = compose_gaussian(a, b);
    for (std::size_t p = 0; p < 16; ++p) CHECK(c.variance(p) == doctest::Approx(3.0).epsilon(1e-6));
  }
  SUBCASE("negligible second leg leaves the first") {
    auto a = random_gaussian(6, 6, 3, 0.0f, 0.0f, 2.0f);
    GaussianFlow b(FlowField(6, 6), ScalarField(6, 6, -10.0f));
    const auto c = compose_gaussian(a, b);
    for (std::size_t p = 0; p < 36; ++p) {
      const double va = a.variance(p);
      CHECK(std::abs(c.variance(p) - va) / va < 1e-4);
    }
  }
  SUBCASE("constant translations compose associatively in the mean") {
    auto t = [](float u, float v) { return GaussianFlow(FlowField(8, 8, u, v), ScalarField(8, 8)); };
    const auto left = compose_gaussian(compose_gaussian(t(1, 0), t(0, 1)), t(1, 1));
    const auto right = compose_gaussian(t(1, 0), compose_gaussian(t(0, 1), t(1, 1)));
    for (std::size_t p = 0; p < 64; ++p) {
      if (!left.validity().at(p) || !right.validity().at(p)) continue;
      CHECK(left.mean().data()[2 * p] == right.mean().data()[2 * p]);
      CHECK(left.mean().data()[2 * p + 1] == right.mean().data()[2 * p + 1]);
      CHECK(left.mean().data()[2 * p] == 2.0f);
    }
  }
}

TEST_CASE("composite variance dominates both inputs on valid pixels") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto a = random_gaussian(8, 8, seed, 2.5f, -4.0f, 4.0f);
    auto b = random_gaussian(8, 8, seed + 500, 2.5f, -4.0f, 4.0f);
    const auto c = compose_gaussian(a, b);
    const auto warped_b = warp(b.variance_field(), a.mean());
    for (std::size_t p = 0; p < 64; ++p) {
      if (!c.validity().at(p)) continue;
      CHECK(c.variance(p) >= a.variance(p) * (1 - 1e-6));
      CHECK(c.variance(p) >= warped_b.field.data()[p] * (1 - 1e-6));
    }
  }
}

TEST_CASE("composite validity needs both legs") {
  auto a = random_gaussian(6, 6, 1, 0.0f, 0.0f, 0.0f);
  ValidityMask vb(6, 6, true);
  vb.set(2, 3, false);
  GaussianFlow b(FlowField(6, 6), ScalarField(6, 6), vb);
  const auto c = compose_gaussian(a, b);
  CHECK_FALSE(c.validity()(2, 3));
  CHECK(c.validity().count() == 35);

  // A half-pixel shift makes the invalid pixel a bilinear neighbour of two outputs.
  GaussianFlow shift(FlowField(6, 6, 0.5f, 0.0f), ScalarField(6, 6));
  const auto d = compose_gaussian(shift, b);
  CHECK_FALSE(d.validity()(2, 2));
  CHECK_FALSE(d.validity()(2, 3));
  CHECK_FALSE(d.validity()(0, 5));
}

TEST_CASE("confidence map closed form") {
  CHECK(confidence(0.5, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
  CHECK(confidence(std::exp(-10.0), 1.0) > 0.9999);
  SUBCASE("strictly decreasing in variance, increasing in radius") {
    double prev = 2.0;
    for (double lv = -2.0; lv <= 8.0; lv += 0.25) {
      const double p = confidence(std::exp(lv), 1.0);
      CHECK(p < prev);
      prev = p;
    }
    prev = -1.0;
    for (double r = 0.1; r <= 5.0; r += 0.1) {
      const double p = confidence(2.0, r);
      CHECK(p > prev);
      prev = p;
    }
  }
  SUBCASE("zero on invalid pixels, in [0, 1] elsewhere") {
    ValidityMask v(3, 3, true);
    v.set(1, 1, false);
    GaussianFlow g(FlowField(3, 3), ScalarField(3, 3, -2.0f), v);
    const auto p = confidence_map(g, 1.0);
    CHECK(p(1, 1) == 0.0f);
    for (std::size_t i = 0; i < 9; ++i) {
      CHECK(p.data()[i] >= 0.0f);
      CHECK(p.data()[i] <= 1.0f);
    }
    CHECK(p(0, 0) == static_cast<float>(confidence(std::exp(-2.0f), 1.0)));
  }
  CHECK_THROWS_AS(confidence_map(GaussianFlow(FlowField(1, 1), ScalarField(1, 1)), 0.0), Error);
}

TEST_CASE("confidence matches Monte-Carlo disc integration") {
  const auto est = oracle::disc_probability(0.5, 1.0, 1000000, 77);
  CHECK(std::abs(est.p - confidence(0.5, 1.0)) < 2e-3);

  std::mt19937_64 g(9);
  std::uniform_real_distribution<double> lv(-3.0, 3.0), rr(0.3, 3.0);
  for (int i = 0; i < 5; ++i) {
    const double var = std::exp(lv(g)), r = rr(g);
    const auto mc = oracle::disc_probability(var, r, 200000, 1000 + i);
    const double exact = confidence(var, r);
    const double se = std::sqrt(exact * (1 - exact) / 200000.0);
    CHECK(std::abs(mc.p - exact) <= 3.0 * se + 1e-12);
  }
}
