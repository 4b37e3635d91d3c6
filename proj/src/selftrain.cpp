#include "refign/selftrain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "refign/format.hpp"
#include "refign/metrics.hpp"
#include "refign/rng.hpp"

namespace refign {

OracleAlignment::OracleAlignment(double flow_noise, double changed_variance, double radius,
                                 std::uint64_t seed)
    : flow_noise_(flow_noise), changed_variance_(changed_variance), radius_(radius), seed_(seed) {
  require(flow_noise >= 0.0, "oracle flow noise must be non-negative");
  require(changed_variance > 0.0, "oracle changed-content variance must be positive");
  require(radius > 0.0, "confidence radius must be positive");
}

GaussianFlow OracleAlignment::flow_for(const SceneTriplet& triplet, std::uint64_t iteration) const {
  FlowField mean = true_target_to_reference_flow(triplet);
  Rng rng(mix_seed(seed_, iteration));
  if (flow_noise_ > 0.0) {
    for (float& v : mean.data()) v += static_cast<float>(flow_noise_ * rng.normal());
  }
  const double base_var = std::max(flow_noise_ * flow_noise_, std::exp(double{kMinLogVariance}));
  ScalarField log_var(mean.height(), mean.width());
  for (std::size_t p = 0; p < log_var.pixel_count(); ++p) {
    const double var = triplet.unchanged.at(p) ? base_var : std::max(base_var, changed_variance_);
    log_var.data()[p] = static_cast<float>(std::log(var));
  }
  const auto valid = warp(ScalarField(mean.height(), mean.width()), mean).valid;
  return GaussianFlow(std::move(mean), std::move(log_var), valid);
}

std::optional<Alignment> OracleAlignment::align(const AlignmentRequest& request) {
  try {
    return align_with_flow(request.reference_probs, flow_for(request.triplet, request.iteration),
                           radius_);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<Alignment> IdentityAlignment::align(const AlignmentRequest& request) {
  const auto& q = request.reference_probs;
  return Alignment{q, ConfidenceMap(q.height(), q.width(), 1.0f)};
}

StoredFlowAlignment::StoredFlowAlignment(GaussianFlow flow, double radius)
    : flow_(std::move(flow)), radius_(radius) {
  require(radius > 0.0, "confidence radius must be positive");
}

std::optional<Alignment> StoredFlowAlignment::align(const AlignmentRequest& request) {
  if (request.reference_probs.height() != flow_.height() ||
      request.reference_probs.width() != flow_.width()) {
    return std::nullopt;
  }
  return align_with_flow(request.reference_probs, flow_, radius_);
}

Alignment align_with_flow(const ProbMap& reference_probs, const GaussianFlow& flow, double radius) {
  auto warped = warp(reference_probs, flow.mean());
  const ValidityMask valid = warped.valid & flow.validity();
  // Pixels without a correspondence carry no reference prediction.
  for (std::size_t p = 0; p < valid.pixel_count(); ++p) {
    if (valid.at(p)) continue;
    for (float& v : warped.field.pixel(p)) v = 0.0f;
  }
  const GaussianFlow gated(flow.mean(), flow.log_variance(), valid);
  return Alignment{std::move(warped.field), confidence_map(gated, radius)};
}

TestTimeRefinement refine_with_flow(const ProbMap& q_target, const ProbMap& q_reference,
                                    const GaussianFlow& flow, const ClassTaxonomy& tax,
                                    const RefineConfig& cfg, double radius,
                                    std::optional<double> threshold) {
  require(q_reference.height() == flow.height() && q_reference.width() == flow.width(),
          "reference prediction and flow must share the grid");
  const auto aligned = align_with_flow(q_reference, flow, radius);
  auto refinement = refine(q_target, aligned.reference_aligned, aligned.confidence, tax, cfg);
  auto labels = pseudo_label(refinement.refined, threshold);
  return {std::move(refinement), std::move(labels)};
}

void TrainConfig::validate() const {
  require(iterations >= 1, "iterations must be at least 1");
  require(learning_rate > 0.0, "learning rate must be positive");
  require(ema_momentum >= 0.0 && ema_momentum <= 1.0, "ema momentum must lie in [0, 1]");
  refine.validate();
}

ToyModelParams initial_params(int image_channels, int classes) {
  return ToyModelParams(feature_count(image_channels), classes);
}

CrossEntropy combined_gradient(const ToyModelParams& student, const ImageField& source,
                               const LabelMap& source_labels, const ImageField& adaptation_image,
                               const LabelMap& adaptation_labels) {
  auto src = cross_entropy(student, source, source_labels);
  const auto adapt = cross_entropy(student, adaptation_image, adaptation_labels);
  return CrossEntropy{src.loss + adapt.loss, src.labelled + adapt.labelled,
                      add(src.gradient, adapt.gradient)};
}

namespace {

double single_miou(const LabelMap& truth, const LabelMap& predicted, int classes) {
  ConfusionMatrix cm(classes);
  cm.accumulate(truth, predicted);
  return miou(cm).mean;
}

}  // namespace

TrainResult refign_train(std::span<const SceneTriplet> data, const ClassTaxonomy& tax,
                         const TrainConfig& cfg, AlignmentProvider& align,
                         const TrainObserver& observer) {
  cfg.validate();
  require(!data.empty(), "training needs at least one triplet");
  const int c = tax.classes();
  const int channels = data.front().target.channels();

  Rng rng(cfg.rng_seed);
  TrainResult result{initial_params(channels, c), ToyModelParams(), {}};
  result.log.reserve(cfg.iterations);
  ToyModelParams& student = result.student;
  ToyModelParams& teacher = result.teacher;

  for (int i = 0; i < cfg.iterations; ++i) {
    teacher = (i == 0) ? student : ema_update(teacher, student, cfg.ema_momentum);
    if (observer) observer(i, student, teacher);

    IterationRecord rec;
    rec.iteration = i;
    rec.sample = static_cast<std::size_t>(rng.below(data.size()));
    const SceneTriplet& t = data[rec.sample];
    const bool adapt_target = !cfg.reference_adaptation || rng.uniform() < 0.5;
    rec.branch = adapt_target ? Branch::kTarget : Branch::kReference;

    LabelMap pseudo;
    const ImageField* adaptation_image = nullptr;
    if (adapt_target) {
      const ProbMap q_t = forward(teacher, t.target);
      rec.trust = trust_score(q_t, cfg.refine.gamma);
      if (cfg.bypass_refinement) {
        pseudo = pseudo_label(q_t, cfg.pseudo_threshold);
      } else {
        const ProbMap q_r = forward(teacher, t.reference);
        const auto aligned = align.align({q_r, t.reference, t.target, t, static_cast<std::uint64_t>(i)});
        rec.aligned = aligned.has_value();
        if (aligned) {
          const auto r = refine(q_t, aligned->reference_aligned, aligned->confidence, tax, cfg.refine);
          pseudo = pseudo_label(r.refined, cfg.pseudo_threshold);
        } else {
          pseudo = pseudo_label(q_t, cfg.pseudo_threshold);
        }
      }
      adaptation_image = &t.target;
    } else {
      pseudo = pseudo_label(forward(teacher, t.reference), cfg.pseudo_threshold);
      adaptation_image = &t.reference;
    }

    const auto src = cross_entropy(student, t.source, t.source_labels);
    const auto adapt = cross_entropy(student, *adaptation_image, pseudo);
    rec.source_loss = src.loss;
    rec.adaptation_loss = adapt.loss;
    rec.total_loss = src.loss + adapt.loss;

    const LabelMap prediction = pseudo_label(forward(student, t.target));
    rec.diversity = diversity_index(prediction, c);
    rec.target_miou = single_miou(t.target_labels, prediction, c);

    student = descend(student, add(src.gradient, adapt.gradient), cfg.learning_rate);
    result.log.push_back(rec);
  }
  return result;
}

Evaluation evaluate_targets(const ToyModelParams& params, std::span<const SceneTriplet> data,
                            int classes) {
  require(!data.empty(), "evaluation needs at least one triplet");
  ConfusionMatrix cm(classes);
  std::vector<std::uint16_t> pooled;
  for (const auto& t : data) {
    const auto prediction = pseudo_label(forward(params, t.target));
    cm.accumulate(t.target_labels, prediction);
    pooled.insert(pooled.end(), prediction.labels().begin(), prediction.labels().end());
  }
  const int total = static_cast<int>(pooled.size());
  const LabelMap all(1, total, std::move(pooled));
  return {miou(cm).mean, diversity_index(all, classes)};
}

std::string metrics_csv(const std::vector<IterationRecord>& log) {
  std::ostringstream out;
  out << "iteration,branch,sample,source_loss,adaptation_loss,total_loss,trust,aligned,diversity,"
         "target_miou\n";
  for (const auto& r : log) {
    out << r.iteration << ',' << (r.branch == Branch::kTarget ? "target" : "reference") << ','
        << r.sample << ',' << format_double(r.source_loss) << ','
        << format_double(r.adaptation_loss) << ',' << format_double(r.total_loss) << ','
        << (r.trust ? format_double(*r.trust) : "") << ',' << (r.aligned ? 1 : 0) << ','
        << format_double(r.diversity) << ','
        << (r.target_miou ? format_double(*r.target_miou) : "") << '\n';
  }
  return out.str();
}

}  // namespace refign
