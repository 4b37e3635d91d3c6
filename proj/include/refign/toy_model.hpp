#pragma once

// Per-pixel linear-softmax segmenter over handcrafted features: the pixel's
// channels, its normalised (x, y) position and the 3x3 mean intensity.

#include <vector>

#include "refign/grid.hpp"
#include "refign/refine.hpp"

namespace refign {

inline int feature_count(int image_channels) { return image_channels + 3; }

struct ToyModelParams {
  int features = 0;
  int classes = 0;
  std::vector<double> weight;  // features x classes, row-major
  std::vector<double> bias;    // classes

  ToyModelParams() = default;
  ToyModelParams(int features, int classes);

  double& w(int f, int k) { return weight[static_cast<std::size_t>(f) * classes + k]; }
  double w(int f, int k) const { return weight[static_cast<std::size_t>(f) * classes + k]; }

  bool same_shape(const ToyModelParams& o) const noexcept {
    return features == o.features && classes == o.classes;
  }
  double squared_norm() const noexcept;

  friend bool operator==(const ToyModelParams&, const ToyModelParams&) = default;
};

/// n x (channels + 3) feature matrix, row per pixel.
std::vector<double> extract_features(const ImageField& image);

/// Softmax probabilities in double precision, n x classes.
std::vector<double> predict(const ToyModelParams& params, const ImageField& image);

ProbMap forward(const ToyModelParams& params, const ImageField& image);

struct CrossEntropy {
  double loss = 0.0;             // pixel mean over labelled pixels
  std::size_t labelled = 0;
  ToyModelParams gradient;       // zero when nothing is labelled
};

CrossEntropy cross_entropy(const ToyModelParams& params, const ImageField& image,
                           const LabelMap& labels);

/// One gradient-descent step on the pixel-mean cross-entropy.
ToyModelParams supervised_step(const ToyModelParams& params, const ImageField& image,
                               const LabelMap& labels, double learning_rate);

/// teacher <- m * teacher + (1 - m) * student.
ToyModelParams ema_update(const ToyModelParams& teacher, const ToyModelParams& student,
                          double momentum);

/// params - lr * gradient.
ToyModelParams descend(const ToyModelParams& params, const ToyModelParams& gradient,
                       double learning_rate);

/// Element-wise sum of two gradients.
ToyModelParams add(const ToyModelParams& a, const ToyModelParams& b);

}  // namespace refign
