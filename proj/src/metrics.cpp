#include "refign/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace refign {

ConfusionMatrix::ConfusionMatrix(int classes)
    : classes_(classes), counts_(static_cast<std::size_t>(classes) * classes, 0) {
  require(classes >= 1, "confusion matrix needs at least one class");
}

void ConfusionMatrix::add(std::uint16_t truth, std::uint16_t predicted, std::uint64_t count) {
  if (truth == kIgnoreLabel || predicted == kIgnoreLabel) return;
  require(truth < classes_ && predicted < classes_, "confusion matrix label out of range");
  counts_[static_cast<std::size_t>(truth) * classes_ + predicted] += count;
}

void ConfusionMatrix::accumulate(const LabelMap& truth, const LabelMap& predicted) {
  require(truth.height() == predicted.height() && truth.width() == predicted.width(),
          "confusion matrix: label maps differ in size");
  for (std::size_t p = 0; p < truth.pixel_count(); ++p) add(truth.at(p), predicted.at(p));
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  require(other.classes_ == classes_, "confusion matrix: class count mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

IouReport miou(const ConfusionMatrix& cm) {
  const int c = cm.classes();
  IouReport report;
  report.per_class.resize(c);
  double sum = 0.0;
  int present = 0;
  for (int k = 0; k < c; ++k) {
    std::uint64_t row = 0, col = 0;
    for (int j = 0; j < c; ++j) {
      row += cm(k, j);
      col += cm(j, k);
    }
    const std::uint64_t tp = cm(k, k);
    const std::uint64_t denom = row + col - tp;
    if (denom == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(denom);
    report.per_class[k] = iou;
    sum += iou;
    ++present;
  }
  if (present == 0) fail(ErrorCode::kEmptyInput, "miou: every class is absent");
  report.mean = sum / present;
  return report;
}

double Match::error() const noexcept {
  return std::hypot(truth[0] - predicted[0], truth[1] - predicted[1]);
}

double pck(const MatchSet& ms, double threshold) {
  if (ms.empty()) fail(ErrorCode::kEmptyInput, "pck: empty match set");
  require(threshold > 0.0, "pck threshold must be positive");
  const auto hits = std::count_if(ms.begin(), ms.end(),
                                  [threshold](const Match& m) { return m.error() <= threshold; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ms.size());
}

double aepe(const MatchSet& ms) {
  if (ms.empty()) fail(ErrorCode::kEmptyInput, "aepe: empty match set");
  double sum = 0.0;
  for (const auto& m : ms) sum += m.error();
  return sum / static_cast<double>(ms.size());
}

std::vector<double> default_sparsification_grid() {
  std::vector<double> grid(20);
  for (int i = 0; i < 20; ++i) grid[i] = 0.05 * i;
  return grid;
}

namespace {

// Mean error of what remains after dropping the first `removed` entries of
// `order`, via suffix sums.
std::vector<double> remaining_means(const std::vector<double>& errors,
                                    const std::vector<std::size_t>& order,
                                    const std::vector<std::size_t>& removed) {
  const std::size_t n = errors.size();
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + errors[order[i]];
  std::vector<double> out;
  out.reserve(removed.size());
  for (auto k : removed) out.push_back(suffix[k] / static_cast<double>(n - k));
  return out;
}

}  // namespace

SparsificationCurves sparsification(const MatchSet& ms, const std::vector<double>& fractions) {
  if (ms.empty()) fail(ErrorCode::kEmptyInput, "sparsification: empty match set");
  const std::size_t n = ms.size();
  std::vector<double> errors(n);
  for (std::size_t i = 0; i < n; ++i) errors[i] = ms[i].error();

  std::vector<std::size_t> removed;
  for (double f : fractions) {
    require(f >= 0.0 && f < 1.0, "sparsification fractions must lie in [0, 1)");
    removed.push_back(std::min(n - 1, static_cast<std::size_t>(std::floor(f * n + 1e-9))));
  }

  std::vector<std::size_t> by_var(n), by_err(n);
  std::iota(by_var.begin(), by_var.end(), 0);
  std::iota(by_err.begin(), by_err.end(), 0);
  std::stable_sort(by_var.begin(), by_var.end(),
                   [&](std::size_t a, std::size_t b) { return ms[a].variance > ms[b].variance; });
  std::stable_sort(by_err.begin(), by_err.end(),
                   [&](std::size_t a, std::size_t b) { return errors[a] > errors[b]; });

  SparsificationCurves curves{fractions, remaining_means(errors, by_var, removed),
                              remaining_means(errors, by_err, removed)};
  const double full = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(n);
  if (full > 0.0) {
    for (auto& v : curves.by_uncertainty) v /= full;
    for (auto& v : curves.by_error) v /= full;
  }
  return curves;
}

double ause(const MatchSet& ms, const std::vector<double>& fractions) {
  if (ms.empty()) fail(ErrorCode::kEmptyInput, "ause: empty match set");
  if (aepe(ms) == 0.0) return 0.0;
  const auto curves = sparsification(ms, fractions);
  double area = 0.0;
  for (std::size_t i = 1; i < fractions.size(); ++i) {
    const double gap0 = curves.by_uncertainty[i - 1] - curves.by_error[i - 1];
    const double gap1 = curves.by_uncertainty[i] - curves.by_error[i];
    area += 0.5 * (gap0 + gap1) * (fractions[i] - fractions[i - 1]);
  }
  return area;
}

}  // namespace refign
