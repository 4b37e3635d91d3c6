#pragma once

// RFTN tensor container.
//
//   offset  size     field
//   0       4        magic "RFTN"
//   4       1        version (1)
//   5       1        dtype: 0 = f32, 1 = u16, 2 = u8 boolean
//   6       1        ndim
//   7       8*ndim   dims, u64 little-endian
//   ...     0-15     zero padding up to the next multiple of 16 bytes
//   ...              payload, row-major, little-endian
//
// The payload length must equal product(dims) * sizeof(dtype) exactly.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "refign/grid.hpp"
#include "refign/metrics.hpp"
#include "refign/refine.hpp"
#include "refign/toy_model.hpp"
#include "refign/uncertainty.hpp"

namespace refign {

enum class DType : std::uint8_t { kF32 = 0, kU16 = 1, kBool = 2 };

std::size_t dtype_size(DType dtype) noexcept;

class Tensor {
 public:
  Tensor() = default;

  /// `payload` holds the little-endian bytes exactly as stored on disk.
  Tensor(DType dtype, std::vector<std::uint64_t> dims, std::vector<std::uint8_t> payload);

  static Tensor from_f32(std::vector<std::uint64_t> dims, std::span<const float> values);
  static Tensor from_u16(std::vector<std::uint64_t> dims, std::span<const std::uint16_t> values);
  static Tensor from_bool(std::vector<std::uint64_t> dims, std::span<const std::uint8_t> values);

  DType dtype() const noexcept { return dtype_; }
  const std::vector<std::uint64_t>& dims() const noexcept { return dims_; }
  std::uint64_t element_count() const noexcept;
  const std::vector<std::uint8_t>& payload() const noexcept { return payload_; }

  std::vector<float> to_f32() const;
  std::vector<std::uint16_t> to_u16() const;
  std::vector<std::uint8_t> to_bool() const;

  void write(std::ostream& out) const;
  static Tensor read(std::istream& in);

  void save(const std::filesystem::path& path) const;
  static Tensor load(const std::filesystem::path& path);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  DType dtype_ = DType::kF32;
  std::vector<std::uint64_t> dims_;
  std::vector<std::uint8_t> payload_;
};

// Domain conversions. Shapes: flow [h, w, 2]; scalar [h, w]; image and
// probability maps [h, w, c]; labels u16 [h, w]; masks bool [h, w];
// Gaussian flow [h, w, 4] = (u, v, log-variance, validity 0/1);
// model parameters [features + 1, classes] with the bias as the last row
// (stored as f32); match predictions [n, 3] = (u, v, variance) and match
// ground truth [n, 2].

Tensor to_tensor(const Field& field);
Tensor to_tensor(const ScalarField& field);
Tensor to_tensor(const LabelMap& labels);
Tensor to_tensor(const ValidityMask& mask);
Tensor to_tensor(const GaussianFlow& flow);
Tensor to_tensor(const ToyModelParams& params);

FlowField flow_from(const Tensor& t);
ScalarField scalar_from(const Tensor& t);
ProbMap probs_from(const Tensor& t);
ImageField image_from(const Tensor& t);
LabelMap labels_from(const Tensor& t);
ValidityMask mask_from(const Tensor& t);
GaussianFlow gaussian_from(const Tensor& t);

Tensor match_predictions_to_tensor(const MatchSet& ms);
Tensor match_truth_to_tensor(const MatchSet& ms);
MatchSet matches_from(const Tensor& predicted, const Tensor& truth);

}  // namespace refign
