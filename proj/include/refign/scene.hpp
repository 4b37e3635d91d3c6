#pragma once

// Synthetic street-like scenes for desk-scale adaptation experiments.
//
// A scene layout lives in target pixel coordinates: sky / building / road
// bands (large static), thin poles (small static) and elliptical blobs
// (dynamic). The reference view renders the same layout through a homography
// with the blobs displaced; the target view is a darkened, noisy rendering of
// the undisplaced layout; the source is an unrelated clean scene with labels.

#include <cstdint>

#include "refign/grid.hpp"
#include "refign/refine.hpp"

namespace refign {

struct SceneConfig {
  int height = 64;
  int width = 64;
  int poles = 3;
  int blobs = 3;
  double corruption_strength = 0.8;   // 0 = clean target
  double homography_strength = 0.1;   // 0 = identity viewpoint change
  double dynamic_shift = 8.0;         // max blob displacement (pixels)

  void validate() const;
};

/// Six classes: sky, building, road (large static), pole (small static),
/// car, person (dynamic).
ClassTaxonomy scene_taxonomy();
inline constexpr int kSceneClasses = 6;
inline constexpr int kSceneChannels = 3;

struct SceneTriplet {
  ImageField source;
  LabelMap source_labels;
  ImageField target;
  LabelMap target_labels;  // evaluation only
  ImageField reference;
  LabelMap reference_labels;
  /// Maps reference pixel coordinates onto target pixel coordinates.
  Homography reference_to_target;
  /// True where the target pixel shows the same content as its reference
  /// correspondence (false on pixels touched by moved blobs).
  ValidityMask unchanged;
};

SceneTriplet generate_triplet(std::uint64_t seed, const SceneConfig& cfg);

/// Target -> reference flow implied by the triplet's homography.
FlowField true_target_to_reference_flow(const SceneTriplet& triplet);

}  // namespace refign
