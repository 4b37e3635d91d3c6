#pragma once

// Mean-teacher self-training with reference-guided pseudo-label refinement.
//
// Each iteration updates the EMA teacher, draws a triplet, always applies the
// supervised source loss, and then with probability 1/2 adapts to the target
// (teacher predictions on target and reference, alignment, refinement,
// pseudo-labels) or to the reference (teacher pseudo-labels on the reference
// image). The summed loss drives one gradient step on the student.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refign/refine.hpp"
#include "refign/scene.hpp"
#include "refign/toy_model.hpp"
#include "refign/uncertainty.hpp"

namespace refign {

struct AlignmentRequest {
  const ProbMap& reference_probs;
  const ImageField& reference;
  const ImageField& target;
  const SceneTriplet& triplet;
  std::uint64_t iteration;
};

struct Alignment {
  ProbMap reference_aligned;
  ConfidenceMap confidence;
};

/// Produces the aligned reference prediction and its warp confidence. An
/// empty result means alignment failed for this sample.
class AlignmentProvider {
 public:
  virtual ~AlignmentProvider() = default;
  virtual std::optional<Alignment> align(const AlignmentRequest& request) = 0;
};

/// Ground-truth homography flow corrupted by i.i.d. Gaussian noise of
/// `flow_noise` pixels per component. The predicted variance is flow_noise^2,
/// raised to `changed_variance` where the scene content differs between the
/// views (moved dynamic objects), as an ideal matcher would report.
class OracleAlignment final : public AlignmentProvider {
 public:
  OracleAlignment(double flow_noise, double changed_variance, double radius, std::uint64_t seed);
  std::optional<Alignment> align(const AlignmentRequest& request) override;

  /// The distribution used for a given request, exposed for inspection.
  GaussianFlow flow_for(const SceneTriplet& triplet, std::uint64_t iteration) const;

 private:
  double flow_noise_;
  double changed_variance_;
  double radius_;
  std::uint64_t seed_;
};

/// No spatial alignment: the reference prediction is used as is with full
/// confidence.
class IdentityAlignment final : public AlignmentProvider {
 public:
  std::optional<Alignment> align(const AlignmentRequest& request) override;
};

/// Warps with a fixed, externally supplied flow distribution.
class StoredFlowAlignment final : public AlignmentProvider {
 public:
  StoredFlowAlignment(GaussianFlow flow, double radius);
  std::optional<Alignment> align(const AlignmentRequest& request) override;

 private:
  GaussianFlow flow_;
  double radius_;
};

/// Warps `reference_probs` by `flow` and derives the confidence map.
Alignment align_with_flow(const ProbMap& reference_probs, const GaussianFlow& flow, double radius);

struct TestTimeRefinement {
  Refinement refinement;
  LabelMap labels;
};

/// Test-time refinement of one prediction pair with a given flow.
TestTimeRefinement refine_with_flow(const ProbMap& q_target, const ProbMap& q_reference,
                                    const GaussianFlow& flow, const ClassTaxonomy& tax,
                                    const RefineConfig& cfg, double radius,
                                    std::optional<double> threshold = std::nullopt);

struct TrainConfig {
  int iterations = 2000;
  double learning_rate = 1.0;
  double ema_momentum = 0.99;
  std::uint64_t rng_seed = 0;
  RefineConfig refine;
  bool reference_adaptation = true;
  std::optional<double> pseudo_threshold;
  /// Pseudo-labels come straight from the teacher's target prediction without
  /// running alignment or refinement.
  bool bypass_refinement = false;

  void validate() const;
};

enum class Branch { kTarget, kReference };

struct IterationRecord {
  int iteration = 0;
  Branch branch = Branch::kTarget;
  std::size_t sample = 0;
  double source_loss = 0.0;
  double adaptation_loss = 0.0;
  double total_loss = 0.0;
  std::optional<double> trust;  // target branch only
  bool aligned = false;
  double diversity = 0.0;       // of the student's target prediction
  std::optional<double> target_miou;
};

/// Called at the start of every iteration, after the teacher update, with the
/// student parameters that the iteration will differentiate.
using TrainObserver = std::function<void(int iteration, const ToyModelParams& student,
                                         const ToyModelParams& teacher)>;

struct TrainResult {
  ToyModelParams student;
  ToyModelParams teacher;
  std::vector<IterationRecord> log;
};

ToyModelParams initial_params(int image_channels, int classes);

TrainResult refign_train(std::span<const SceneTriplet> data, const ClassTaxonomy& tax,
                         const TrainConfig& cfg, AlignmentProvider& align,
                         const TrainObserver& observer = {});

/// Student gradient of source loss plus adaptation loss for fixed labels.
/// Teacher outputs enter only through `adaptation_labels`.
CrossEntropy combined_gradient(const ToyModelParams& student, const ImageField& source,
                               const LabelMap& source_labels, const ImageField& adaptation_image,
                               const LabelMap& adaptation_labels);

struct Evaluation {
  double miou = 0.0;
  double diversity = 0.0;
};

/// Pooled mIoU and prediction diversity of `params` on the targets.
Evaluation evaluate_targets(const ToyModelParams& params, std::span<const SceneTriplet> data,
                            int classes);

std::string metrics_csv(const std::vector<IterationRecord>& log);

}  // namespace refign
