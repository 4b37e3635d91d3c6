#include "refign/toy_model.hpp"

#include <algorithm>
#include <cmath>

namespace refign {

ToyModelParams::ToyModelParams(int features_, int classes_)
    : features(features_), classes(classes_),
      weight(static_cast<std::size_t>(features_) * classes_, 0.0), bias(classes_, 0.0) {
  require(features_ >= 1 && classes_ >= 1, "model needs features and classes");
}

double ToyModelParams::squared_norm() const noexcept {
  double s = 0.0;
  for (double v : weight) s += v * v;
  for (double v : bias) s += v * v;
  return s;
}

std::vector<double> extract_features(const ImageField& image) {
  const int h = image.height(), w = image.width(), c = image.channels();
  const int f = feature_count(c);
  std::vector<double> intensity(image.pixel_count());
  for (std::size_t p = 0; p < intensity.size(); ++p) {
    double s = 0.0;
    for (float v : image.pixel(p)) s += v;
    intensity[p] = s / c;
  }
  std::vector<double> out(image.pixel_count() * f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      double* row = out.data() + p * f;
      for (int k = 0; k < c; ++k) row[k] = image(y, x, k);
      row[c] = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
      row[c + 1] = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
      double sum = 0.0;
      int n = 0;
      for (int yy = std::max(0, y - 1); yy <= std::min(h - 1, y + 1); ++yy)
        for (int xx = std::max(0, x - 1); xx <= std::min(w - 1, x + 1); ++xx) {
          sum += intensity[static_cast<std::size_t>(yy) * w + xx];
          ++n;
        }
      row[c + 2] = sum / n;
    }
  }
  return out;
}

namespace {

void check_image(const ToyModelParams& params, const ImageField& image) {
  require(params.features == feature_count(image.channels()),
          "model feature count does not match image channels");
}

std::vector<double> softmax_rows(const ToyModelParams& params, const std::vector<double>& features,
                                 std::size_t n) {
  const int f = params.features, c = params.classes;
  std::vector<double> probs(n * c);
  std::vector<double> logits(c);
  for (std::size_t p = 0; p < n; ++p) {
    const double* row = features.data() + p * f;
    for (int k = 0; k < c; ++k) {
      double z = params.bias[k];
      for (int j = 0; j < f; ++j) z += row[j] * params.w(j, k);
      logits[k] = z;
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (int k = 0; k < c; ++k) {
      logits[k] = std::exp(logits[k] - peak);
      total += logits[k];
    }
    for (int k = 0; k < c; ++k) probs[p * c + k] = logits[k] / total;
  }
  return probs;
}

}  // namespace

std::vector<double> predict(const ToyModelParams& params, const ImageField& image) {
  check_image(params, image);
  return softmax_rows(params, extract_features(image), image.pixel_count());
}

ProbMap forward(const ToyModelParams& params, const ImageField& image) {
  const auto probs = predict(params, image);
  ProbMap out(image.height(), image.width(), params.classes);
  std::transform(probs.begin(), probs.end(), out.data().begin(),
                 [](double v) { return static_cast<float>(v); });
  return out;
}

CrossEntropy cross_entropy(const ToyModelParams& params, const ImageField& image,
                           const LabelMap& labels) {
  check_image(params, image);
  require(labels.height() == image.height() && labels.width() == image.width(),
          "labels and image differ in size");
  require(labels.valid_for(params.classes), "label out of range for the model");
  const int f = params.features, c = params.classes;
  const std::size_t n = image.pixel_count();
  const auto features = extract_features(image);
  const auto probs = softmax_rows(params, features, n);

  CrossEntropy out{0.0, 0, ToyModelParams(f, c)};
  for (std::size_t p = 0; p < n; ++p)
    if (labels.at(p) != kIgnoreLabel) ++out.labelled;
  if (out.labelled == 0) return out;
  const double inv = 1.0 / static_cast<double>(out.labelled);

  for (std::size_t p = 0; p < n; ++p) {
    const auto y = labels.at(p);
    if (y == kIgnoreLabel) continue;
    out.loss -= std::log(std::max(probs[p * c + y], 1e-300)) * inv;
    const double* row = features.data() + p * f;
    for (int k = 0; k < c; ++k) {
      const double d = (probs[p * c + k] - (k == y ? 1.0 : 0.0)) * inv;
      out.gradient.bias[k] += d;
      for (int j = 0; j < f; ++j) out.gradient.w(j, k) += row[j] * d;
    }
  }
  return out;
}

ToyModelParams descend(const ToyModelParams& params, const ToyModelParams& gradient,
                       double learning_rate) {
  require(params.same_shape(gradient), "gradient shape mismatch");
  ToyModelParams out = params;
  for (std::size_t i = 0; i < out.weight.size(); ++i) out.weight[i] -= learning_rate * gradient.weight[i];
  for (std::size_t i = 0; i < out.bias.size(); ++i) out.bias[i] -= learning_rate * gradient.bias[i];
  return out;
}

ToyModelParams add(const ToyModelParams& a, const ToyModelParams& b) {
  require(a.same_shape(b), "gradient shape mismatch");
  ToyModelParams out = a;
  for (std::size_t i = 0; i < out.weight.size(); ++i) out.weight[i] += b.weight[i];
  for (std::size_t i = 0; i < out.bias.size(); ++i) out.bias[i] += b.bias[i];
  return out;
}

ToyModelParams supervised_step(const ToyModelParams& params, const ImageField& image,
                               const LabelMap& labels, double learning_rate) {
  const auto ce = cross_entropy(params, image, labels);
  if (ce.labelled == 0) return params;
  return descend(params, ce.gradient, learning_rate);
}

ToyModelParams ema_update(const ToyModelParams& teacher, const ToyModelParams& student,
                          double momentum) {
  require(teacher.same_shape(student), "ema_update: shape mismatch");
  require(momentum >= 0.0 && momentum <= 1.0, "ema momentum must lie in [0, 1]");
  ToyModelParams out = teacher;
  const double keep = momentum, take = 1.0 - momentum;
  for (std::size_t i = 0; i < out.weight.size(); ++i)
    out.weight[i] = keep * teacher.weight[i] + take * student.weight[i];
  for (std::size_t i = 0; i < out.bias.size(); ++i)
    out.bias[i] = keep * teacher.bias[i] + take * student.bias[i];
  return out;
}

}  // namespace refign
