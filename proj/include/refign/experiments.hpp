#pragma once

// Desk-scale experiments on synthetic triplets, from single runs up to the
// component ablation and trust-exponent sweep.

#include <cstdint>
#include <string>
#include <vector>

#include "refign/losses.hpp"
#include "refign/scene.hpp"
#include "refign/selftrain.hpp"

namespace refign {

enum class AlignmentMode { kOracle, kNone };

struct ExperimentConfig {
  SceneConfig scene;
  TrainConfig train;
  /// Carried for completeness of the run description; the oracle aligner does
  /// not train a matcher.
  LossConfig loss;
  AlignmentMode alignment = AlignmentMode::kOracle;
  double flow_noise = 0.5;
  double changed_variance = 25.0;
  double radius = 1.0;
  int train_scenes = 32;
  int eval_scenes = 8;

  void validate() const;
};

struct ScenePools {
  std::vector<SceneTriplet> train;
  std::vector<SceneTriplet> eval;
};

/// Training and held-out triplets derived from `seed`.
ScenePools make_pools(const ExperimentConfig& cfg, std::uint64_t seed);

struct RunOutcome {
  TrainResult train;
  Evaluation eval;
  double first_decile_trust = 0.0;  // NaN when no trust was logged
  double last_decile_trust = 0.0;
};

/// Trains with the configured alignment on the pools of `seed`; the training
/// RNG seed is overridden by `seed`.
RunOutcome run_experiment(const ExperimentConfig& cfg, std::uint64_t seed);
RunOutcome run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, const ScenePools& pools);

/// Mean logged trust over the iterations in [begin, end).
double mean_trust(const std::vector<IterationRecord>& log, int begin, int end);

struct AblationRow {
  int row = 0;
  bool align = false;
  bool confidence = false;
  bool mask_m = false;
  bool trust = false;
  bool reference_adaptation = false;
  Evaluation eval;
};

/// Row 1 is the naive baseline (no alignment, alpha = 1/2); rows 2 to 6 add
/// alignment, P_R, M, s and reference adaptation one at a time. Omitted
/// components default to P_R = 1/2, M = 0, s = 1.
std::vector<AblationRow> run_ablation(const ExperimentConfig& cfg, std::uint64_t seed);
std::string ablation_csv(const std::vector<AblationRow>& rows);

struct GammaRow {
  double gamma = 0.0;
  Evaluation eval;
  double first_decile_trust = 0.0;
  double last_decile_trust = 0.0;
};

std::vector<double> default_gamma_grid();
std::vector<GammaRow> run_gamma_sweep(const ExperimentConfig& cfg, std::uint64_t seed,
                                      const std::vector<double>& gammas);
std::string gamma_csv(const std::vector<GammaRow>& rows);

}  // namespace refign
