#include "refign/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "refign/format.hpp"
#include "refign/rng.hpp"

namespace refign {

namespace {

std::unique_ptr<AlignmentProvider> make_provider(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.alignment == AlignmentMode::kNone) return std::make_unique<IdentityAlignment>();
  return std::make_unique<OracleAlignment>(cfg.flow_noise, cfg.changed_variance, cfg.radius, seed);
}

const char* flag(bool b) { return b ? "1" : "0"; }

}  // namespace

void ExperimentConfig::validate() const {
  scene.validate();
  train.validate();
  loss.validate();
  require(flow_noise >= 0.0 && std::isfinite(flow_noise), "flow_noise must be finite and >= 0");
  require(changed_variance > 0.0 && std::isfinite(changed_variance),
          "changed_variance must be finite and > 0");
  require(radius > 0.0 && std::isfinite(radius), "radius must be finite and > 0");
  require(train_scenes >= 1, "train_scenes must be >= 1");
  require(eval_scenes >= 1, "eval_scenes must be >= 1");
}

ScenePools make_pools(const ExperimentConfig& cfg, std::uint64_t seed) {
  ScenePools pools;
  pools.train.reserve(static_cast<std::size_t>(cfg.train_scenes));
  pools.eval.reserve(static_cast<std::size_t>(cfg.eval_scenes));
  for (int i = 0; i < cfg.train_scenes; ++i)
    pools.train.push_back(generate_triplet(mix_seed(seed, 100 + static_cast<std::uint64_t>(i)), cfg.scene));
  for (int i = 0; i < cfg.eval_scenes; ++i)
    pools.eval.push_back(generate_triplet(mix_seed(seed, 1000 + static_cast<std::uint64_t>(i)), cfg.scene));
  return pools;
}

double mean_trust(const std::vector<IterationRecord>& log, int begin, int end) {
  double sum = 0.0;
  int n = 0;
  for (const auto& rec : log) {
    if (rec.trust && rec.iteration >= begin && rec.iteration < end) {
      sum += *rec.trust;
      ++n;
    }
  }
  return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

RunOutcome run_experiment(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  return run_experiment(cfg, seed, make_pools(cfg, seed));
}

RunOutcome run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, const ScenePools& pools) {
  cfg.validate();
  TrainConfig train = cfg.train;
  train.rng_seed = seed;
  auto provider = make_provider(cfg, seed);
  const auto tax = scene_taxonomy();

  RunOutcome out;
  out.train = refign_train(pools.train, tax, train, *provider);
  out.eval = evaluate_targets(out.train.student, pools.eval, tax.classes());
  const int iters = train.iterations;
  const int decile = std::max(1, iters / 10);
  out.first_decile_trust = mean_trust(out.train.log, 0, decile);
  out.last_decile_trust = mean_trust(out.train.log, iters - decile, iters);
  return out;
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto pools = make_pools(cfg, seed);

  struct Setting {
    bool align, confidence, mask_m, trust, ref_ad;
  };
  const Setting settings[] = {
      {false, false, false, false, false}, {true, false, false, false, false},
      {true, true, false, false, false},   {true, true, true, false, false},
      {true, true, true, true, false},     {true, true, true, true, true},
  };

  std::vector<AblationRow> rows;
  int index = 1;
  for (const auto& s : settings) {
    ExperimentConfig run = cfg;
    run.alignment = s.align ? AlignmentMode::kOracle : AlignmentMode::kNone;
    run.train.bypass_refinement = false;
    run.train.reference_adaptation = s.ref_ad;
    run.train.refine.enable_mask_m = s.mask_m;
    run.train.refine.enable_trust = s.trust;
    if (s.confidence) {
      run.train.refine.fixed_alpha.reset();
    } else {
      // P_R = 1/2 with M = 0 and s = 1 gives a uniform alpha of 1/2.
      run.train.refine.fixed_alpha = 0.5;
    }
    AblationRow row;
    row.row = index++;
    row.align = s.align;
    row.confidence = s.confidence;
    row.mask_m = s.mask_m;
    row.trust = s.trust;
    row.reference_adaptation = s.ref_ad;
    row.eval = run_experiment(run, seed, pools).eval;
    rows.push_back(row);
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "row,align,confidence,mask_m,trust,reference_adaptation,target_miou,diversity\n";
  for (const auto& r : rows) {
    os << r.row << ',' << flag(r.align) << ',' << flag(r.confidence) << ',' << flag(r.mask_m) << ','
       << flag(r.trust) << ',' << flag(r.reference_adaptation) << ',' << format_double(r.eval.miou)
       << ',' << format_double(r.eval.diversity) << '\n';
  }
  return os.str();
}

std::vector<double> default_gamma_grid() { return {1.0, 0.5, 0.25, 0.125, 0.0625}; }

std::vector<GammaRow> run_gamma_sweep(const ExperimentConfig& cfg, std::uint64_t seed,
                                      const std::vector<double>& gammas) {
  cfg.validate();
  require(!gammas.empty(), "gamma sweep needs at least one value");
  const auto pools = make_pools(cfg, seed);
  std::vector<GammaRow> rows;
  for (double g : gammas) {
    ExperimentConfig run = cfg;
    run.train.refine.gamma = g;
    const auto out = run_experiment(run, seed, pools);
    rows.push_back({g, out.eval, out.first_decile_trust, out.last_decile_trust});
  }
  return rows;
}

std::string gamma_csv(const std::vector<GammaRow>& rows) {
  std::ostringstream os;
  os << "gamma,target_miou,diversity,first_decile_trust,last_decile_trust\n";
  for (const auto& r : rows) {
    os << format_double(r.gamma) << ',' << format_double(r.eval.miou) << ','
       << format_double(r.eval.diversity) << ',' << format_double(r.first_decile_trust) << ','
       << format_double(r.last_decile_trust) << '\n';
  }
  return os.str();
}

}  // namespace refign
