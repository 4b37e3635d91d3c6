#include "refign/refine.hpp"

#include <algorithm>
#include <cmath>

namespace refign {

LabelMap::LabelMap(int height, int width, std::uint16_t fill)
    : height_(height), width_(width), labels_(static_cast<std::size_t>(height) * width, fill) {
  require(height >= 0 && width >= 0, "label map dimensions must be non-negative");
}

LabelMap::LabelMap(int height, int width, std::vector<std::uint16_t> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
  require(height >= 0 && width >= 0, "label map dimensions must be non-negative");
  require(labels_.size() == static_cast<std::size_t>(height) * width,
          "label map data length does not match its dimensions");
}

bool LabelMap::valid_for(int classes) const noexcept {
  return std::all_of(labels_.begin(), labels_.end(), [classes](std::uint16_t l) {
    return l == kIgnoreLabel || l < classes;
  });
}

ClassTaxonomy::ClassTaxonomy(int classes, std::vector<int> large_static,
                             std::vector<int> small_static, std::vector<int> dynamic)
    : classes_(classes),
      large_static_(std::move(large_static)),
      small_static_(std::move(small_static)),
      dynamic_(std::move(dynamic)),
      large_flag_(classes > 0 ? classes : 0, false) {
  require(classes >= 1 && classes < kIgnoreLabel, "taxonomy needs a positive class count");
  std::vector<int> seen(classes, 0);
  for (const auto* set : {&large_static_, &small_static_, &dynamic_}) {
    for (int k : *set) {
      require(k >= 0 && k < classes, "taxonomy class index out of range");
      require(seen[k] == 0, "taxonomy lists class " + std::to_string(k) + " twice");
      seen[k] = 1;
    }
  }
  require(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }),
          "taxonomy sets do not cover every class");
  for (int k : large_static_) large_flag_[k] = true;
}

void RefineConfig::validate() const {
  require(gamma > 0.0, "gamma must be positive");
  if (fixed_alpha) require(*fixed_alpha >= 0.0 && *fixed_alpha <= 1.0, "fixed alpha must lie in [0, 1]");
}

ChannelMask::ChannelMask(int height, int width, int channels)
    : height_(height), width_(width), channels_(channels),
      bits_(static_cast<std::size_t>(height) * width * channels, 0) {}

ScalarField normalized_entropy(const ProbMap& q) {
  if (q.classes() < 2) {
    fail(ErrorCode::kDegenerateTaxonomy, "normalised entropy needs at least two classes");
  }
  const double h_max = std::log(static_cast<double>(q.classes()));
  ScalarField out(q.height(), q.width());
  for (std::size_t p = 0; p < q.pixel_count(); ++p) {
    double h = 0.0;
    for (float v : q.pixel(p)) {
      if (v > 0.0f) h -= static_cast<double>(v) * std::log(static_cast<double>(v));
    }
    out.data()[p] = static_cast<float>(std::clamp(h / h_max, 0.0, 1.0));
  }
  return out;
}

namespace {

double trust_from_mean(double mean, double gamma) {
  return std::clamp(std::pow(std::clamp(mean, 0.0, 1.0), gamma), 0.0, 1.0);
}

double mean_normalized_entropy(const ProbMap& q, const ValidityMask* include) {
  if (q.classes() < 2) {
    fail(ErrorCode::kDegenerateTaxonomy, "trust score needs at least two classes");
  }
  require(q.is_simplex(1e-5), "trust score needs a probability map");
  const double h_max = std::log(static_cast<double>(q.classes()));
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < q.pixel_count(); ++p) {
    if (include != nullptr && !include->at(p)) continue;
    double h = 0.0;
    for (float v : q.pixel(p)) {
      if (v > 0.0f) h -= static_cast<double>(v) * std::log(static_cast<double>(v));
    }
    sum += std::clamp(h / h_max, 0.0, 1.0);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::uint16_t argmax(std::span<const float> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] > values[best]) best = k;
  return static_cast<std::uint16_t>(best);
}

}  // namespace

double trust_score(const ProbMap& q_t, double gamma) {
  require(gamma > 0.0, "gamma must be positive");
  return trust_from_mean(mean_normalized_entropy(q_t, nullptr), gamma);
}

double trust_score(const ProbMap& q_t, double gamma, const ValidityMask& include) {
  require(gamma > 0.0, "gamma must be positive");
  require(include.height() == q_t.height() && include.width() == q_t.width(),
          "trust score mask dimension mismatch");
  return trust_from_mean(mean_normalized_entropy(q_t, &include), gamma);
}

ChannelMask static_mask(const LabelMap& z_t, const LabelMap& z_r, const ClassTaxonomy& tax) {
  require(z_t.height() == z_r.height() && z_t.width() == z_r.width(),
          "static_mask: label maps differ in size");
  const int c = tax.classes();
  ChannelMask m(z_t.height(), z_t.width(), c);
  for (int y = 0; y < z_t.height(); ++y) {
    for (int x = 0; x < z_t.width(); ++x) {
      if (!tax.is_large_static(z_t(y, x)) || !tax.is_large_static(z_r(y, x))) continue;
      for (int k : tax.large_static()) m.set(y, x, k, true);
    }
  }
  return m;
}

Refinement refine(const ProbMap& q_t, const ProbMap& q_r_aligned, const ConfidenceMap& p_r,
                  const ClassTaxonomy& tax, const RefineConfig& cfg) {
  cfg.validate();
  require(q_t.same_grid(q_r_aligned) && q_t.channels() == q_r_aligned.channels(),
          "refine: target and reference maps differ in shape");
  require(q_t.same_grid(p_r), "refine: confidence map differs in size");
  require(q_t.classes() == tax.classes(), "refine: class count differs from taxonomy");
  for (float p : p_r.data()) require(p >= 0.0f && p <= 1.0f, "refine: confidence outside [0, 1]");

  const int c = q_t.classes();
  const std::size_t n = q_t.pixel_count();
  Refinement out{ProbMap(q_t.height(), q_t.width(), c), Field(q_t.height(), q_t.width(), c), 1.0};

  if (cfg.fixed_alpha) {
    std::fill(out.alpha.data().begin(), out.alpha.data().end(), static_cast<float>(*cfg.fixed_alpha));
  } else {
    out.trust = cfg.enable_trust ? trust_score(q_t, cfg.gamma) : 1.0;
    std::optional<ChannelMask> m;
    if (cfg.enable_mask_m) {
      LabelMap z_t = pseudo_label(q_t);
      LabelMap z_r = pseudo_label(q_r_aligned);
      for (std::size_t p = 0; p < n; ++p) {
        const auto r = q_r_aligned.pixel(p);
        if (std::all_of(r.begin(), r.end(), [](float v) { return v == 0.0f; })) z_r.at(p) = kIgnoreLabel;
      }
      m = static_mask(z_t, z_r, tax);
    }
    for (std::size_t p = 0; p < n; ++p) {
      const double conf = p_r.data()[p];
      for (int k = 0; k < c; ++k) {
        const std::size_t i = p * c + k;
        const double gate = (m && m->at(i)) ? 1.0 : conf;
        out.alpha.data()[i] = static_cast<float>(out.trust * gate);
      }
    }
  }

  const auto qt = q_t.data();
  const auto qr = q_r_aligned.data();
  const auto a = out.alpha.data();
  auto dst = out.refined.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double w = a[i];
    dst[i] = static_cast<float>((1.0 - w) * qt[i] + w * qr[i]);
  }
  return out;
}

LabelMap pseudo_label(const Field& q, std::optional<double> threshold) {
  require(q.channels() < kIgnoreLabel, "pseudo_label: too many classes");
  LabelMap labels(q.height(), q.width(), 0);
  for (std::size_t p = 0; p < q.pixel_count(); ++p) {
    const auto values = q.pixel(p);
    const auto best = argmax(values);
    if (threshold && values[best] < *threshold) {
      labels.at(p) = kIgnoreLabel;
    } else {
      labels.at(p) = best;
    }
  }
  return labels;
}

double diversity_index(const LabelMap& labels, int classes) {
  if (classes < 2) fail(ErrorCode::kDegenerateTaxonomy, "diversity index needs at least two classes");
  require(labels.valid_for(classes), "diversity_index: label out of range");
  std::vector<std::size_t> hist(classes, 0);
  std::size_t total = 0;
  for (auto l : labels.labels()) {
    if (l == kIgnoreLabel) continue;
    ++hist[l];
    ++total;
  }
  if (total == 0) fail(ErrorCode::kEmptyInput, "diversity_index: no labelled pixels");
  double h = 0.0;
  for (auto count : hist) {
    if (count == 0) continue;
    const double f = static_cast<double>(count) / static_cast<double>(total);
    h -= f * std::log(f);
  }
  return h / std::log(static_cast<double>(classes));
}

}  // namespace refign
