#include "refign/reports.hpp"

#include <algorithm>
#include <sstream>

#include "refign/format.hpp"

namespace refign {

namespace {

constexpr const char* kHeader = "metric,parameter,value\n";

}  // namespace

ConfusionMatrix confusion_from(const Tensor& predicted, const Tensor& truth, int classes) {
  if (predicted.dtype() != DType::kU16 || truth.dtype() != DType::kU16) {
    fail(ErrorCode::kFormat, "label tensors must be u16");
  }
  const auto rank = predicted.dims().size();
  if (rank < 2 || rank > 3) fail(ErrorCode::kFormat, "label tensors must be [h, w] or [n, h, w]");
  if (predicted.dims() != truth.dims()) {
    fail(ErrorCode::kContractViolation, "prediction and ground truth label shapes differ");
  }
  const auto pred = predicted.to_u16();
  const auto gt = truth.to_u16();
  if (pred.empty()) fail(ErrorCode::kEmptyInput, "label tensors are empty");
  if (classes <= 0) {
    int top = -1;
    for (auto v : pred) if (v != kIgnoreLabel) top = std::max<int>(top, v);
    for (auto v : gt) if (v != kIgnoreLabel) top = std::max<int>(top, v);
    if (top < 0) fail(ErrorCode::kEmptyInput, "every label is ignored");
    classes = top + 1;
  }
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < pred.size(); ++i) cm.add(gt[i], pred[i]);
  return cm;
}

std::string miou_report(const IouReport& report) {
  std::ostringstream os;
  os << kHeader;
  for (std::size_t k = 0; k < report.per_class.size(); ++k) {
    if (report.per_class[k]) os << "iou," << k << ',' << format_double(*report.per_class[k]) << '\n';
  }
  os << "miou,mean," << format_double(report.mean) << '\n';
  return os.str();
}

std::vector<double> default_pck_thresholds() { return {1.0, 3.0, 5.0}; }

std::string pck_report(const MatchSet& ms, const std::vector<double>& thresholds) {
  require(!thresholds.empty(), "pck needs at least one threshold");
  std::ostringstream os;
  os << kHeader;
  for (double t : thresholds) os << "pck," << format_double(t) << ',' << format_double(pck(ms, t)) << '\n';
  return os.str();
}

std::string aepe_report(const MatchSet& ms) {
  return std::string(kHeader) + "aepe,," + format_double(aepe(ms)) + "\n";
}

std::string ause_report(const MatchSet& ms) {
  return std::string(kHeader) + "ause,," + format_double(ause(ms)) + "\n";
}

}  // namespace refign
