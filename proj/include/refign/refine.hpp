#pragma once

// Adaptive label correction: the target prediction is fused with the aligned
// reference prediction through element-wise convex weights
//
//   refined = (1 - alpha) * q_t + alpha * q_r_aligned,
//   alpha   = s(q_t) * max(P_R, M),
//
// where s is the trust score (mean normalised entropy of q_t raised to gamma),
// P_R the warp confidence broadcast over channels and M the large-static mask.

#include <cstdint>
#include <optional>
#include <vector>

#include "refign/grid.hpp"
#include "refign/uncertainty.hpp"

namespace refign {

inline constexpr std::uint16_t kIgnoreLabel = 0xFFFF;

class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int height, int width, std::uint16_t fill = kIgnoreLabel);
  LabelMap(int height, int width, std::vector<std::uint16_t> labels);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t pixel_count() const noexcept { return labels_.size(); }

  std::uint16_t operator()(int y, int x) const noexcept {
    return labels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint16_t& operator()(int y, int x) noexcept {
    return labels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint16_t at(std::size_t p) const noexcept { return labels_[p]; }
  std::uint16_t& at(std::size_t p) noexcept { return labels_[p]; }

  const std::vector<std::uint16_t>& labels() const noexcept { return labels_; }

  /// Every entry is below `classes` or the ignore sentinel.
  bool valid_for(int classes) const noexcept;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint16_t> labels_;
};

/// Partition of the classes into large static, small static and dynamic.
class ClassTaxonomy {
 public:
  ClassTaxonomy(int classes, std::vector<int> large_static, std::vector<int> small_static,
                std::vector<int> dynamic);

  int classes() const noexcept { return classes_; }
  const std::vector<int>& large_static() const noexcept { return large_static_; }
  const std::vector<int>& small_static() const noexcept { return small_static_; }
  const std::vector<int>& dynamic() const noexcept { return dynamic_; }

  bool is_large_static(std::uint16_t label) const noexcept {
    return label < classes_ && large_flag_[label];
  }

 private:
  int classes_;
  std::vector<int> large_static_;
  std::vector<int> small_static_;
  std::vector<int> dynamic_;
  std::vector<bool> large_flag_;
};

struct RefineConfig {
  double gamma = 0.25;
  bool enable_mask_m = true;
  bool enable_trust = true;
  std::optional<double> fixed_alpha;  // replaces alpha everywhere when set

  void validate() const;
};

/// h x w x c binary tensor.
class ChannelMask {
 public:
  ChannelMask(int height, int width, int channels);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }

  bool operator()(int y, int x, int k) const noexcept { return bits_[index(y, x, k)] != 0; }
  bool at(std::size_t i) const noexcept { return bits_[i] != 0; }
  void set(int y, int x, int k, bool v) noexcept { bits_[index(y, x, k)] = v ? 1 : 0; }

  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

 private:
  std::size_t index(int y, int x, int k) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + k;
  }

  int height_, width_, channels_;
  std::vector<std::uint8_t> bits_;
};

/// Per-pixel entropy of q divided by ln(c), clamped to [0, 1]. 0 ln 0 is 0.
ScalarField normalized_entropy(const ProbMap& q);

/// (mean normalised entropy)^gamma. The optional mask selects the pixels that
/// enter the mean; an empty selection yields 0.
double trust_score(const ProbMap& q_t, double gamma);
double trust_score(const ProbMap& q_t, double gamma, const ValidityMask& include);

/// m(y, x, k) = 1 iff k, z_t(y, x) and z_r(y, x) are all large static classes.
ChannelMask static_mask(const LabelMap& z_t, const LabelMap& z_r, const ClassTaxonomy& tax);

struct Refinement {
  ProbMap refined;  // not renormalised when alpha varies across channels
  Field alpha;      // h x w x c weights actually applied
  double trust = 1.0;
};

/// Fuses q_t with the aligned reference q_r_aligned. Pixels where the aligned
/// reference is all zero (outside the warp) carry no reference label.
Refinement refine(const ProbMap& q_t, const ProbMap& q_r_aligned, const ConfidenceMap& p_r,
                  const ClassTaxonomy& tax, const RefineConfig& cfg);

/// Per-pixel argmax, lowest index on ties. With a threshold, pixels whose
/// maximum falls below it become kIgnoreLabel.
LabelMap pseudo_label(const Field& q, std::optional<double> threshold = std::nullopt);

/// Normalised entropy of the label histogram (ignore labels excluded).
double diversity_index(const LabelMap& labels, int classes);

}  // namespace refign
