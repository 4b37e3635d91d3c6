#pragma once

// Dense 2-D fields with bilinear backward warping and homography flows.
//
// Coordinates are pixel centres with (0, 0) at the top-left pixel. A flow F
// relates an output grid to a source grid: output(x) samples source(x + F(x)).

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "refign/error.hpp"

namespace refign {

/// Row-major h x w x c grid of 32-bit floats.
class Field {
 public:
  Field() = default;
  Field(int height, int width, int channels, float fill = 0.0f);
  Field(int height, int width, int channels, std::vector<float> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  const std::vector<float>& values() const noexcept { return data_; }

  float& operator()(int y, int x, int k = 0) noexcept {
    return data_[index(y, x, k)];
  }
  float operator()(int y, int x, int k = 0) const noexcept {
    return data_[index(y, x, k)];
  }

  std::span<float> pixel(std::size_t p) noexcept {
    return {data_.data() + p * channels_, static_cast<std::size_t>(channels_)};
  }
  std::span<const float> pixel(std::size_t p) const noexcept {
    return {data_.data() + p * channels_, static_cast<std::size_t>(channels_)};
  }

  bool same_grid(const Field& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  bool all_finite() const noexcept;

  friend bool operator==(const Field&, const Field&) = default;

 private:
  std::size_t index(int y, int x, int k) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + k;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Per-pixel (u, v) displacement in pixels.
class FlowField : public Field {
 public:
  FlowField() = default;
  FlowField(int height, int width, float u = 0.0f, float v = 0.0f);
  explicit FlowField(Field field);

  float u(int y, int x) const noexcept { return (*this)(y, x, 0); }
  float v(int y, int x) const noexcept { return (*this)(y, x, 1); }
};

class ScalarField : public Field {
 public:
  ScalarField() = default;
  ScalarField(int height, int width, float fill = 0.0f);
  ScalarField(int height, int width, std::vector<float> data);
  explicit ScalarField(Field field);
};

class ImageField : public Field {
 public:
  ImageField() = default;
  ImageField(int height, int width, int channels, float fill = 0.0f);
  explicit ImageField(Field field);
};

/// Per-pixel class scores over c channels. Model outputs are probability
/// simplices; warped or refined maps may leave the simplex.
class ProbMap : public Field {
 public:
  ProbMap() = default;
  ProbMap(int height, int width, int classes, float fill = 0.0f);
  explicit ProbMap(Field field);

  int classes() const noexcept { return channels(); }

  /// Entries in [0, 1] and every pixel's channel sum within `tol` of 1.
  bool is_simplex(double tol = 1e-5) const noexcept;
};

class ValidityMask {
 public:
  ValidityMask() = default;
  ValidityMask(int height, int width, bool fill = true);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t pixel_count() const noexcept { return bits_.size(); }

  bool operator()(int y, int x) const noexcept {
    return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  bool at(std::size_t p) const noexcept { return bits_[p] != 0; }
  void set(std::size_t p, bool value) noexcept { bits_[p] = value ? 1 : 0; }
  void set(int y, int x, bool value) noexcept {
    set(static_cast<std::size_t>(y) * width_ + x, value);
  }

  std::size_t count() const noexcept;
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  ValidityMask operator&(const ValidityMask& other) const;

  friend bool operator==(const ValidityMask&, const ValidityMask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

template <class F>
struct Warped {
  F field;
  ValidityMask valid;
};

namespace detail {
Warped<Field> warp_field(const Field& field, const FlowField& flow);
}

/// Backward bilinear warp: output(x) = field(x + flow(x)). Sample points
/// outside [0, w-1] x [0, h-1] are invalid and filled with zero. Integer
/// sample positions reproduce the source value exactly.
template <class F>
Warped<F> warp(const F& field, const FlowField& flow) {
  auto result = detail::warp_field(field, flow);
  return {F(std::move(result.field)), std::move(result.valid)};
}

/// Chains two flows: result = f_ab + warp(f_bc, f_ab).
Warped<FlowField> compose_flow(const FlowField& f_ab, const FlowField& f_bc);

/// 3x3 projective transform in pixel coordinates, normalised so h22 = 1.
class Homography {
 public:
  Homography();  // identity
  explicit Homography(const std::array<double, 9>& row_major);

  static Homography translation(double tx, double ty);

  const std::array<double, 9>& matrix() const noexcept { return m_; }
  double operator()(int row, int col) const noexcept { return m_[row * 3 + col]; }

  double determinant() const noexcept;
  Homography inverse() const;

  /// Maps (x, y) and returns the projective denominator through `w_out`.
  std::array<double, 2> project(double x, double y, double* w_out = nullptr) const noexcept;

  Homography operator*(const Homography& rhs) const;

 private:
  std::array<double, 9> m_;
};

/// flow(x) = project(h, x) - x.
FlowField homography_to_flow(const Homography& h, int height, int width);

/// Homography moving the four image corners by independent uniform offsets
/// of at most strength * (min(h, w) - 1) / 2 per coordinate. strength is in
/// (0, 0.5]; within that bound the corner quadrilateral stays convex.
Homography sample_homography(std::uint64_t seed, double strength, int height, int width);

/// Exact homography mapping src[i] onto dst[i].
Homography homography_from_points(const std::array<std::array<double, 2>, 4>& src,
                                  const std::array<std::array<double, 2>, 4>& dst);

}  // namespace refign
