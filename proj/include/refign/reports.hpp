#pragma once

// CSV evaluation reports with the header `metric,parameter,value`.

#include <string>
#include <vector>

#include "refign/container.hpp"
#include "refign/metrics.hpp"

namespace refign {

/// Accumulates u16 label tensors of shape [h, w] or [n, h, w]. With
/// classes <= 0 the class count is one more than the largest non-ignore label.
ConfusionMatrix confusion_from(const Tensor& predicted, const Tensor& truth, int classes);

/// One `iou,<k>,<value>` row per present class, then `miou,mean,<value>`.
std::string miou_report(const IouReport& report);
/// One `pck,<threshold>,<percent>` row per threshold.
std::string pck_report(const MatchSet& ms, const std::vector<double>& thresholds);
std::string aepe_report(const MatchSet& ms);
std::string ause_report(const MatchSet& ms);

std::vector<double> default_pck_thresholds();

}  // namespace refign
