#include "refign/grid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "refign/rng.hpp"

namespace refign {

namespace {

constexpr double kDegenerateDenominator = 1e-12;

std::string dims(const Field& f) {
  return std::to_string(f.height()) + "x" + std::to_string(f.width()) + "x" +
         std::to_string(f.channels());
}

}  // namespace

Field::Field(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  require(height >= 0 && width >= 0 && channels >= 1, "field dimensions must be non-negative");
  data_.assign(pixel_count() * channels, fill);
}

Field::Field(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  require(height >= 0 && width >= 0 && channels >= 1, "field dimensions must be non-negative");
  require(data_.size() == pixel_count() * channels,
          "field data length does not match " + dims(*this));
}

bool Field::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

FlowField::FlowField(int height, int width, float u, float v) : Field(height, width, 2) {
  auto d = data();
  for (std::size_t i = 0; i < d.size(); i += 2) {
    d[i] = u;
    d[i + 1] = v;
  }
}

FlowField::FlowField(Field field) : Field(std::move(field)) {
  require(channels() == 2, "flow field needs exactly 2 channels");
}

ScalarField::ScalarField(int height, int width, float fill) : Field(height, width, 1, fill) {}

ScalarField::ScalarField(int height, int width, std::vector<float> data)
    : Field(height, width, 1, std::move(data)) {}

ScalarField::ScalarField(Field field) : Field(std::move(field)) {
  require(channels() == 1, "scalar field needs exactly 1 channel");
}

ImageField::ImageField(int height, int width, int channels, float fill)
    : Field(height, width, channels, fill) {}

ImageField::ImageField(Field field) : Field(std::move(field)) {}

ProbMap::ProbMap(int height, int width, int classes, float fill)
    : Field(height, width, classes, fill) {}

ProbMap::ProbMap(Field field) : Field(std::move(field)) {}

bool ProbMap::is_simplex(double tol) const noexcept {
  for (std::size_t p = 0; p < pixel_count(); ++p) {
    double sum = 0.0;
    for (float q : pixel(p)) {
      if (!(q >= 0.0f && q <= 1.0f)) return false;
      sum += q;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

ValidityMask::ValidityMask(int height, int width, bool fill)
    : height_(height), width_(width),
      bits_(static_cast<std::size_t>(height) * width, fill ? 1 : 0) {
  require(height >= 0 && width >= 0, "mask dimensions must be non-negative");
}

std::size_t ValidityMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

ValidityMask ValidityMask::operator&(const ValidityMask& other) const {
  require(height_ == other.height_ && width_ == other.width_, "mask dimension mismatch");
  ValidityMask out(height_, width_, false);
  for (std::size_t p = 0; p < bits_.size(); ++p) out.bits_[p] = bits_[p] & other.bits_[p];
  return out;
}

namespace detail {

Warped<Field> warp_field(const Field& field, const FlowField& flow) {
  require(field.same_grid(flow), "warp: field " + dims(field) + " and flow " + dims(flow) +
                                     " differ in height/width");
  const int h = field.height();
  const int w = field.width();
  const int c = field.channels();
  Field out(h, w, c, 0.0f);
  ValidityMask valid(h, w, false);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sx = x + static_cast<double>(flow(y, x, 0));
      const double sy = y + static_cast<double>(flow(y, x, 1));
      if (!(sx >= 0.0 && sx <= w - 1 && sy >= 0.0 && sy <= h - 1)) continue;
      valid.set(y, x, true);

      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0;
      const double fy = sy - y0;
      // fx == 0 covers x0 == w - 1, so x0 + 1 is only read when in range.
      for (int k = 0; k < c; ++k) {
        auto row = [&](int yy) {
          const double a = field(yy, x0, k);
          if (fx == 0.0) return a;
          return (1.0 - fx) * a + fx * static_cast<double>(field(yy, x0 + 1, k));
        };
        const double top = row(y0);
        const double value = fy == 0.0 ? top : (1.0 - fy) * top + fy * row(y0 + 1);
        out(y, x, k) = static_cast<float>(value);
      }
    }
  }
  return {std::move(out), std::move(valid)};
}

}  // namespace detail

Warped<FlowField> compose_flow(const FlowField& f_ab, const FlowField& f_bc) {
  require(f_ab.same_grid(f_bc), "compose_flow: dimension mismatch");
  auto warped = warp(f_bc, f_ab);
  auto out = f_ab;
  auto dst = out.data();
  auto src = warped.field.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return {std::move(out), std::move(warped.valid)};
}

Homography::Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

Homography::Homography(const std::array<double, 9>& row_major) : m_(row_major) {
  if (std::abs(m_[8]) <= kDegenerateDenominator) {
    fail(ErrorCode::kDegenerateHomography, "homography has zero bottom-right entry");
  }
  const double scale = m_[8];
  for (double& v : m_) v /= scale;
  if (std::abs(determinant()) <= 1e-12) {
    fail(ErrorCode::kDegenerateHomography, "homography is singular");
  }
}

Homography Homography::translation(double tx, double ty) {
  return Homography({1, 0, tx, 0, 1, ty, 0, 0, 1});
}

double Homography::determinant() const noexcept {
  const auto& a = m_;
  return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
         a[2] * (a[3] * a[7] - a[4] * a[6]);
}

Homography Homography::inverse() const {
  Eigen::Matrix3d m;
  m << m_[0], m_[1], m_[2], m_[3], m_[4], m_[5], m_[6], m_[7], m_[8];
  const Eigen::Matrix3d inv = m.inverse();
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[r * 3 + c] = inv(r, c);
  return Homography(out);
}

std::array<double, 2> Homography::project(double x, double y, double* w_out) const noexcept {
  const double px = m_[0] * x + m_[1] * y + m_[2];
  const double py = m_[3] * x + m_[4] * y + m_[5];
  const double pw = m_[6] * x + m_[7] * y + m_[8];
  if (w_out != nullptr) *w_out = pw;
  return {px / pw, py / pw};
}

Homography Homography::operator*(const Homography& rhs) const {
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < 3; ++k) out[r * 3 + c] += m_[r * 3 + k] * rhs.m_[k * 3 + c];
  return Homography(out);
}

FlowField homography_to_flow(const Homography& h, int height, int width) {
  FlowField flow(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double denom = 0.0;
      const auto p = h.project(x, y, &denom);
      if (std::abs(denom) <= kDegenerateDenominator) {
        fail(ErrorCode::kDegenerateHomography,
             "homography sends pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                 ") to infinity");
      }
      flow(y, x, 0) = static_cast<float>(p[0] - x);
      flow(y, x, 1) = static_cast<float>(p[1] - y);
    }
  }
  return flow;
}

Homography homography_from_points(const std::array<std::array<double, 2>, 4>& src,
                                  const std::array<std::array<double, 2>, 4>& dst) {
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const double x = src[i][0], y = src[i][1];
    const double u = dst[i][0], v = dst[i][1];
    a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    b(2 * i) = u;
    b(2 * i + 1) = v;
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
  if (!lu.isInvertible()) {
    fail(ErrorCode::kDegenerateHomography, "corner correspondences are degenerate");
  }
  const Eigen::Matrix<double, 8, 1> s = lu.solve(b);
  return Homography({s(0), s(1), s(2), s(3), s(4), s(5), s(6), s(7), 1.0});
}

Homography sample_homography(std::uint64_t seed, double strength, int height, int width) {
  require(strength > 0.0 && strength <= 0.5, "homography strength must lie in (0, 0.5]");
  require(height >= 2 && width >= 2, "homography sampling needs at least a 2x2 grid");
  Rng rng(seed);
  const double reach = strength * (std::min(height, width) - 1) / 2.0;
  const double xm = width - 1, ym = height - 1;
  const std::array<std::array<double, 2>, 4> corners{{{0, 0}, {xm, 0}, {xm, ym}, {0, ym}}};
  auto moved = corners;
  for (auto& c : moved) {
    c[0] += rng.uniform(-reach, reach);
    c[1] += rng.uniform(-reach, reach);
  }
  return homography_from_points(corners, moved);
}

}  // namespace refign
