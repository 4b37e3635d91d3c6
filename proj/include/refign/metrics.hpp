#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "refign/refine.hpp"

namespace refign {

/// Rows are ground truth, columns are predictions. Ignore labels on either
/// side are skipped.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes);

  int classes() const noexcept { return classes_; }

  void add(std::uint16_t truth, std::uint16_t predicted, std::uint64_t count = 1);
  void accumulate(const LabelMap& truth, const LabelMap& predicted);
  void merge(const ConfusionMatrix& other);

  std::uint64_t operator()(int truth, int predicted) const noexcept {
    return counts_[static_cast<std::size_t>(truth) * classes_ + predicted];
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int classes_;
  std::vector<std::uint64_t> counts_;
};

struct IouReport {
  std::vector<std::optional<double>> per_class;  // nullopt: class absent in truth and prediction
  double mean = 0.0;
};

/// IoU_k = tp / (tp + fp + fn); classes with a zero denominator are left out
/// of the mean. Throws kEmptyInput when every class is absent.
IouReport miou(const ConfusionMatrix& cm);

struct Match {
  std::array<double, 2> truth;
  std::array<double, 2> predicted;
  double variance = 0.0;

  double error() const noexcept;
};

using MatchSet = std::vector<Match>;

/// Percentage of matches with end-point error <= threshold.
double pck(const MatchSet& ms, double threshold);

/// Average end-point error.
double aepe(const MatchSet& ms);

/// Removal fractions 0, 0.05, ..., 0.95.
std::vector<double> default_sparsification_grid();

struct SparsificationCurves {
  std::vector<double> fractions;
  std::vector<double> by_uncertainty;  // remaining AEPE / full AEPE
  std::vector<double> by_error;        // oracle ordering
};

/// Removes the floor(f * n) most uncertain (largest variance; earlier input
/// first on ties) or most erroneous matches for every fraction f.
SparsificationCurves sparsification(const MatchSet& ms, const std::vector<double>& fractions);

/// Trapezoidal area between the uncertainty and oracle curves. 0 when the full
/// set has zero AEPE.
double ause(const MatchSet& ms, const std::vector<double>& fractions = default_sparsification_grid());

}  // namespace refign
