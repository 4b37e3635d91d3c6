#include "refign/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "refign/rng.hpp"

namespace refign {

namespace {

enum SceneClass : std::uint16_t { kSky = 0, kBuilding = 1, kRoad = 2, kPole = 3, kCar = 4, kPerson = 5 };

constexpr std::array<std::array<double, 3>, kSceneClasses> kBaseColors{{
    {0.55, 0.72, 0.95},  // sky
    {0.62, 0.48, 0.40},  // building
    {0.38, 0.38, 0.42},  // road
    {0.92, 0.84, 0.20},  // pole
    {0.88, 0.18, 0.16},  // car
    {0.22, 0.70, 0.32},  // person
}};

struct Pole {
  double x, half_width;
};

struct Blob {
  double cx, cy, rx, ry;
  std::uint16_t cls;
};

struct Layout {
  double mid_x = 0.0;
  double horizon = 0.0, horizon_slope = 0.0;
  double kerb = 0.0, kerb_slope = 0.0;
  std::vector<Pole> poles;
  std::vector<Blob> blobs;
  std::array<double, kSceneClasses> phase{};

  double horizon_at(double x) const { return horizon + horizon_slope * (x - mid_x); }
  double kerb_at(double x) const { return kerb + kerb_slope * (x - mid_x); }

  std::uint16_t label_at(double x, double y) const {
    for (const auto& b : blobs) {
      const double dx = (x - b.cx) / b.rx, dy = (y - b.cy) / b.ry;
      if (dx * dx + dy * dy <= 1.0) return b.cls;
    }
    for (const auto& p : poles) {
      if (std::abs(x - p.x) <= p.half_width && y >= horizon_at(p.x) - 4.0 && y <= kerb_at(p.x) + 1.0)
        return kPole;
    }
    if (y < horizon_at(x)) return kSky;
    if (y > kerb_at(x)) return kRoad;
    return kBuilding;
  }

  std::array<double, 3> color_at(double x, double y, std::uint16_t cls) const {
    const double texture = 0.04 * std::sin(0.9 * x + 1.3 * y + phase[cls]) +
                           0.02 * std::sin(0.37 * x - 0.81 * y + 2.0 * phase[cls]);
    std::array<double, 3> c{};
    for (int k = 0; k < 3; ++k) c[k] = std::clamp(kBaseColors[cls][k] + texture, 0.0, 1.0);
    return c;
  }
};

Layout sample_layout(Rng& rng, const SceneConfig& cfg) {
  const double h = cfg.height, w = cfg.width;
  Layout l;
  l.mid_x = 0.5 * (w - 1);
  l.horizon = h * (0.30 + 0.06 * rng.uniform(-1, 1));
  l.horizon_slope = 0.15 * rng.uniform(-1, 1);
  l.kerb = h * (0.66 + 0.05 * rng.uniform(-1, 1));
  l.kerb_slope = 0.15 * rng.uniform(-1, 1);
  for (auto& p : l.phase) p = rng.uniform(0.0, 6.283185307179586);
  for (int i = 0; i < cfg.poles; ++i) {
    l.poles.push_back({rng.uniform(0.08 * w, 0.92 * w), std::max(0.6, 0.02 * w)});
  }
  const double sx = w / 64.0, sy = h / 64.0;
  for (int i = 0; i < cfg.blobs; ++i) {
    Blob b;
    b.cx = rng.uniform(0.12 * w, 0.88 * w);
    b.cy = rng.uniform(0.58 * h, 0.88 * h);
    b.rx = rng.uniform(4.0, 8.0) * sx;
    b.ry = rng.uniform(3.0, 6.0) * sy;
    b.cls = (i % 2 == 0) ? kCar : kPerson;
    l.blobs.push_back(b);
  }
  return l;
}

// Renders `layout` seen through `view_to_layout` (pixel -> layout coords).
void render(const Layout& layout, const Homography& view_to_layout, ImageField& image,
            LabelMap& labels) {
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const auto s = view_to_layout.project(x, y);
      const auto cls = layout.label_at(s[0], s[1]);
      const auto color = layout.color_at(s[0], s[1], cls);
      labels(y, x) = cls;
      for (int k = 0; k < 3; ++k) image(y, x, k) = static_cast<float>(color[k]);
    }
  }
}

}  // namespace

void SceneConfig::validate() const {
  require(height >= 8 && width >= 8, "scene must be at least 8x8");
  require(poles >= 0 && blobs >= 0, "scene object counts must be non-negative");
  require(corruption_strength >= 0.0 && corruption_strength <= 1.0,
          "corruption strength must lie in [0, 1]");
  require(homography_strength >= 0.0 && homography_strength <= 0.5,
          "homography strength must lie in [0, 0.5]");
  require(dynamic_shift >= 0.0, "dynamic shift must be non-negative");
}

ClassTaxonomy scene_taxonomy() {
  return ClassTaxonomy(kSceneClasses, {kSky, kBuilding, kRoad}, {kPole}, {kCar, kPerson});
}

SceneTriplet generate_triplet(std::uint64_t seed, const SceneConfig& cfg) {
  cfg.validate();
  const int h = cfg.height, w = cfg.width;
  Rng layout_rng(mix_seed(seed, 0));
  Rng source_rng(mix_seed(seed, 1));
  Rng motion_rng(mix_seed(seed, 2));
  Rng noise_rng(mix_seed(seed, 3));

  const Layout scene = sample_layout(layout_rng, cfg);
  const Layout source_scene = sample_layout(source_rng, cfg);
  Layout moved = scene;
  for (auto& b : moved.blobs) {
    b.cx += cfg.dynamic_shift * motion_rng.uniform(-1, 1);
    b.cy += 0.3 * cfg.dynamic_shift * motion_rng.uniform(-1, 1);
  }

  const Homography target_to_reference =
      cfg.homography_strength > 0.0
          ? sample_homography(mix_seed(seed, 4), cfg.homography_strength, h, w)
          : Homography();

  SceneTriplet t{ImageField(h, w, kSceneChannels), LabelMap(h, w),
                 ImageField(h, w, kSceneChannels), LabelMap(h, w),
                 ImageField(h, w, kSceneChannels), LabelMap(h, w),
                 target_to_reference.inverse(), ValidityMask(h, w, true)};

  const Homography identity;
  render(source_scene, identity, t.source, t.source_labels);
  render(scene, identity, t.target, t.target_labels);
  render(moved, t.reference_to_target, t.reference, t.reference_labels);

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      t.unchanged.set(y, x, scene.label_at(x, y) == moved.label_at(x, y));

  // Adverse condition: darkened tones plus sensor noise.
  const double c = cfg.corruption_strength;
  if (c > 0.0) {
    const double gamma = 1.0 + 2.0 * c;
    const double gain = 1.0 - 0.5 * c;
    const double sigma = 0.05 * c;
    for (float& v : t.target.data()) {
      const double dark = gain * std::pow(static_cast<double>(v), gamma) + sigma * noise_rng.normal();
      v = static_cast<float>(std::clamp(dark, 0.0, 1.0));
    }
  }
  return t;
}

FlowField true_target_to_reference_flow(const SceneTriplet& triplet) {
  return homography_to_flow(triplet.reference_to_target.inverse(), triplet.target.height(),
                            triplet.target.width());
}

}  // namespace refign
