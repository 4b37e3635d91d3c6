// Command-line front end. Talks to the library only through the C interface.
//
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "refign/refign.h"

namespace {

constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(refign_status status, const std::string& context) {
  if (status != REFIGN_OK) {
    throw Failure(context + ": " + refign_status_name(status) + ": " + refign_last_error());
  }
}

struct TensorDeleter {
  void operator()(refign_tensor* t) const { refign_tensor_free(t); }
};
struct TaxonomyDeleter {
  void operator()(refign_taxonomy* t) const { refign_taxonomy_free(t); }
};
struct ConfigDeleter {
  void operator()(refign_config* c) const { refign_config_free(c); }
};
struct RunDeleter {
  void operator()(refign_run* r) const { refign_run_free(r); }
};
struct StringDeleter {
  void operator()(char* s) const { refign_string_free(s); }
};

using Tensor = std::unique_ptr<refign_tensor, TensorDeleter>;
using Taxonomy = std::unique_ptr<refign_taxonomy, TaxonomyDeleter>;
using Config = std::unique_ptr<refign_config, ConfigDeleter>;
using Run = std::unique_ptr<refign_run, RunDeleter>;
using CString = std::unique_ptr<char, StringDeleter>;

Tensor load(const std::string& path) {
  refign_tensor* t = nullptr;
  check(refign_tensor_load(path.c_str(), &t), "reading " + path);
  return Tensor(t);
}

void save(const refign_tensor* t, const std::string& path) {
  check(refign_tensor_save(t, path.c_str()), "writing " + path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure("cannot open " + path + " for writing");
  out << text;
  if (!out) throw Failure("failed to write " + path);
}

void emit(const std::optional<std::string>& path, const std::string& text) {
  if (path) {
    write_text(*path, text);
  } else {
    std::cout << text;
  }
}

Config load_config(const std::optional<std::string>& path) {
  refign_config* c = nullptr;
  if (path) {
    check(refign_config_load(path->c_str(), &c), "reading " + *path);
  } else {
    check(refign_config_default(&c), "default config");
  }
  return Config(c);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw CLI::ValidationError("list", "'" + item + "' is not a number");
    }
    if (used != item.size()) throw CLI::ValidationError("list", "'" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("list", "expected at least one value");
  return out;
}

// ---- compose ---------------------------------------------------------------

struct ComposeArgs {
  std::string first, second, out;
};

void run_compose(const ComposeArgs& a) {
  const auto first = load(a.first);
  const auto second = load(a.second);
  refign_tensor* composed = nullptr;
  check(refign_compose_gaussian(first.get(), second.get(), &composed), "compose");
  const Tensor result(composed);
  save(result.get(), a.out);
}

// ---- refine ----------------------------------------------------------------

struct RefineArgs {
  std::string target, reference, flow, taxonomy, out_probs, out_labels;
  double gamma = 0.25;
  std::optional<double> fixed_alpha;
  std::optional<double> threshold;
  double radius = 1.0;
  bool no_mask = false;
  bool no_trust = false;
};

void run_refine(const RefineArgs& a) {
  const auto qt = load(a.target);
  const auto qr = load(a.reference);
  const auto flow = load(a.flow);
  refign_taxonomy* tax_raw = nullptr;
  check(refign_taxonomy_load(a.taxonomy.c_str(), &tax_raw), "reading " + a.taxonomy);
  const Taxonomy tax(tax_raw);

  refign_refine_options opts;
  refign_refine_options_default(&opts);
  opts.gamma = a.gamma;
  opts.enable_mask = a.no_mask ? 0 : 1;
  opts.enable_trust = a.no_trust ? 0 : 1;
  opts.has_fixed_alpha = a.fixed_alpha ? 1 : 0;
  opts.fixed_alpha = a.fixed_alpha.value_or(0.0);
  opts.has_threshold = a.threshold ? 1 : 0;
  opts.threshold = a.threshold.value_or(0.0);
  opts.radius = a.radius;

  refign_tensor* refined_raw = nullptr;
  refign_tensor* labels_raw = nullptr;
  double trust = 0.0;
  check(refign_refine(qt.get(), qr.get(), flow.get(), tax.get(), &opts, &refined_raw, &labels_raw, &trust),
        "refine");
  const Tensor refined(refined_raw);
  const Tensor labels(labels_raw);
  save(refined.get(), a.out_probs);
  save(labels.get(), a.out_labels);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", trust);
  std::cout << "trust " << buf << '\n';
}

// ---- selftrain -------------------------------------------------------------

struct SelftrainArgs {
  std::optional<std::string> config;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool ablate = false;
  std::optional<std::string> gamma_sweep;
};

void run_selftrain(const SelftrainArgs& a) {
  const auto cfg = load_config(a.config);
  const std::filesystem::path dir(a.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Failure("cannot create " + dir.string() + ": " + ec.message());

  if (a.ablate) {
    char* csv = nullptr;
    check(refign_ablation(cfg.get(), a.seed, &csv), "ablation");
    const CString owned(csv);
    write_text((dir / "ablation.csv").string(), owned.get());
    return;
  }
  if (a.gamma_sweep) {
    const auto gammas = parse_list(*a.gamma_sweep);
    char* csv = nullptr;
    check(refign_gamma_sweep(cfg.get(), a.seed, gammas.data(), gammas.size(), &csv), "gamma sweep");
    const CString owned(csv);
    write_text((dir / "gamma_sweep.csv").string(), owned.get());
    return;
  }

  refign_run* run_raw = nullptr;
  check(refign_selftrain(cfg.get(), a.seed, &run_raw), "selftrain");
  const Run run(run_raw);
  char* csv = nullptr;
  check(refign_run_metrics_csv(run.get(), &csv), "metrics");
  const CString metrics(csv);
  write_text((dir / "metrics.csv").string(), metrics.get());
  refign_tensor* params_raw = nullptr;
  check(refign_run_params(run.get(), &params_raw), "params");
  const Tensor params(params_raw);
  save(params.get(), (dir / "params.rftn").string());
  double miou = 0.0, diversity = 0.0;
  check(refign_run_evaluation(run.get(), &miou, &diversity), "evaluation");
  char buf[128];
  std::snprintf(buf, sizeof buf, "target_miou %.17g\ndiversity %.17g\n", miou, diversity);
  std::cout << buf;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string metric, pred, gt;
  int classes = 0;
  std::optional<std::string> thresholds;
  std::optional<std::string> out;
};

void run_eval(const EvalArgs& a) {
  const auto pred = load(a.pred);
  const auto gt = load(a.gt);
  char* csv = nullptr;
  refign_status status = REFIGN_OK;
  if (a.metric == "miou") {
    status = refign_eval_miou(pred.get(), gt.get(), a.classes, &csv);
  } else if (a.metric == "pck") {
    std::vector<double> t;
    if (a.thresholds) t = parse_list(*a.thresholds);
    status = refign_eval_pck(pred.get(), gt.get(), t.data(), t.size(), &csv);
  } else if (a.metric == "aepe") {
    status = refign_eval_aepe(pred.get(), gt.get(), &csv);
  } else {
    status = refign_eval_ause(pred.get(), gt.get(), &csv);
  }
  check(status, a.metric);
  const CString owned(csv);
  emit(a.out, owned.get());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference-guided pseudo-label refinement toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", refign_version());

  ComposeArgs compose;
  auto* c = app.add_subcommand("compose", "Chain two Gaussian flow containers");
  c->add_option("first", compose.first, "First leg, f32 [h, w, 4]")->required();
  c->add_option("second", compose.second, "Second leg, f32 [h, w, 4]")->required();
  c->add_option("-o,--out", compose.out, "Output container")->required();

  RefineArgs refine;
  auto* r = app.add_subcommand("refine", "Refine a target prediction with an aligned reference prediction");
  r->add_option("--target", refine.target, "Target probabilities, f32 [h, w, c]")->required();
  r->add_option("--reference", refine.reference, "Reference probabilities, f32 [h, w, c]")->required();
  r->add_option("--flow", refine.flow, "Target-to-reference Gaussian flow, f32 [h, w, 4]")->required();
  r->add_option("--taxonomy", refine.taxonomy, "Class taxonomy file")->required();
  r->add_option("--out-probs", refine.out_probs, "Refined probabilities output")->required();
  r->add_option("--out-labels", refine.out_labels, "Pseudo-label output")->required();
  r->add_option("--gamma", refine.gamma, "Trust exponent")->capture_default_str();
  r->add_option("--fixed-alpha", refine.fixed_alpha, "Use this mixing weight everywhere");
  r->add_option("--threshold", refine.threshold, "Ignore pixels whose top probability is lower");
  r->add_option("--radius", refine.radius, "Confidence radius in pixels")->capture_default_str();
  r->add_flag("--no-mask", refine.no_mask, "Disable the large-static mask");
  r->add_flag("--no-trust", refine.no_trust, "Disable the trust score");

  SelftrainArgs selftrain;
  auto* s = app.add_subcommand("selftrain", "Self-train on synthetic triplets");
  s->add_option("--config", selftrain.config, "key = value configuration file");
  s->add_option("--seed", selftrain.seed, "Seed for every random draw")->required();
  s->add_option("--out", selftrain.out_dir, "Output directory")->required();
  auto* ablate = s->add_flag("--ablate", selftrain.ablate, "Run the component ablation");
  auto* sweep = s->add_option("--gamma-sweep", selftrain.gamma_sweep,
                              "Comma-separated trust exponents, e.g. 1,0.5,0.25,0.125,0.0625");
  ablate->excludes(sweep);

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  e->add_option("--metric", eval.metric, "miou, pck, aepe or ause")
      ->required()
      ->check(CLI::IsMember({"miou", "pck", "aepe", "ause"}));
  e->add_option("--pred", eval.pred, "Prediction container")->required();
  e->add_option("--gt", eval.gt, "Ground-truth container")->required();
  e->add_option("--classes", eval.classes, "Class count for miou (0 infers it)")->capture_default_str();
  e->add_option("--thresholds", eval.thresholds, "Comma-separated PCK thresholds (default 1,3,5)");
  e->add_option("-o,--out", eval.out, "Write the CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (c->parsed()) run_compose(compose);
    else if (r->parsed()) run_refine(refine);
    else if (s->parsed()) run_selftrain(selftrain);
    else if (e->parsed()) run_eval(eval);
  } catch (const CLI::ValidationError& err) {
    std::cerr << "usage error: " << err.what() << '\n';
    return kUsageError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
