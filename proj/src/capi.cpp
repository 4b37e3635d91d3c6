#include "refign/refign.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "refign/container.hpp"
#include "refign/experiments.hpp"
#include "refign/reports.hpp"
#include "refign/run_config.hpp"
#include "refign/selftrain.hpp"

struct refign_tensor {
  refign::Tensor tensor;
};

struct refign_taxonomy {
  refign::ClassTaxonomy taxonomy;
};

struct refign_config {
  refign::ExperimentConfig config;
};

struct refign_run {
  refign::RunOutcome outcome;
};

namespace {

thread_local std::string g_last_error;

struct NullArgument {
  const char* name;
};

template <class T>
T* need(T* p, const char* name) {
  if (p == nullptr) throw NullArgument{name};
  return p;
}

refign_status status_for(refign::ErrorCode code) {
  switch (code) {
    case refign::ErrorCode::kContractViolation: return REFIGN_ERR_INVALID_ARGUMENT;
    case refign::ErrorCode::kDegenerateHomography:
    case refign::ErrorCode::kDegenerateTaxonomy: return REFIGN_ERR_DEGENERATE;
    case refign::ErrorCode::kEmptyInput: return REFIGN_ERR_EMPTY_INPUT;
    case refign::ErrorCode::kFormat: return REFIGN_ERR_FORMAT;
    case refign::ErrorCode::kIo: return REFIGN_ERR_IO;
    case refign::ErrorCode::kConfig: return REFIGN_ERR_CONFIG;
  }
  return REFIGN_ERR_INTERNAL;
}

refign_status record(refign_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class F>
refign_status guarded(F&& body) noexcept {
  try {
    body();
    return REFIGN_OK;
  } catch (const NullArgument& e) {
    return record(REFIGN_ERR_NULL_ARGUMENT, std::string("null argument: ") + e.name);
  } catch (const refign::Error& e) {
    return record(status_for(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return record(REFIGN_ERR_OUT_OF_MEMORY, "out of memory");
  } catch (const std::exception& e) {
    return record(REFIGN_ERR_INTERNAL, e.what());
  } catch (...) {
    return record(REFIGN_ERR_INTERNAL, "unknown failure");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

refign_tensor* wrap(refign::Tensor t) { return new refign_tensor{std::move(t)}; }

refign::MatchSet matches(const refign_tensor* pred, const refign_tensor* gt) {
  return refign::matches_from(need(pred, "pred")->tensor, need(gt, "gt")->tensor);
}

}  // namespace

extern "C" {

const char* refign_version(void) { return "0.1.0"; }

const char* refign_last_error(void) { return g_last_error.c_str(); }

const char* refign_status_name(refign_status status) {
  switch (status) {
    case REFIGN_OK: return "ok";
    case REFIGN_ERR_NULL_ARGUMENT: return "null argument";
    case REFIGN_ERR_INVALID_ARGUMENT: return "invalid argument";
    case REFIGN_ERR_DEGENERATE: return "degenerate input";
    case REFIGN_ERR_EMPTY_INPUT: return "empty input";
    case REFIGN_ERR_FORMAT: return "format error";
    case REFIGN_ERR_IO: return "i/o error";
    case REFIGN_ERR_CONFIG: return "configuration error";
    case REFIGN_ERR_OUT_OF_MEMORY: return "out of memory";
    case REFIGN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void refign_string_free(char* s) { std::free(s); }

refign_status refign_tensor_create(refign_dtype dtype, size_t ndim, const uint64_t* dims,
                                   const void* data, size_t data_bytes, refign_tensor** out) {
  return guarded([&] {
    need(out, "out");
    if (ndim > 0) need(dims, "dims");
    std::vector<std::uint64_t> shape(dims, dims + ndim);
    std::uint64_t count = 1;
    for (auto d : shape) count *= d;
    const auto d = static_cast<refign::DType>(dtype);
    const std::size_t elem = refign::dtype_size(d);
    if (elem == 0) refign::fail(refign::ErrorCode::kContractViolation, "unknown dtype");
    if (data_bytes != count * elem) {
      refign::fail(refign::ErrorCode::kContractViolation, "data size does not match dims");
    }
    if (count > 0) need(data, "data");
    refign::Tensor t;
    switch (d) {
      case refign::DType::kF32:
        t = refign::Tensor::from_f32(std::move(shape), {static_cast<const float*>(data), count});
        break;
      case refign::DType::kU16:
        t = refign::Tensor::from_u16(std::move(shape), {static_cast<const std::uint16_t*>(data), count});
        break;
      case refign::DType::kBool: {
        const auto* bytes = static_cast<const std::uint8_t*>(data);
        for (std::uint64_t i = 0; i < count; ++i) {
          if (bytes[i] > 1) refign::fail(refign::ErrorCode::kContractViolation, "booleans must be 0 or 1");
        }
        t = refign::Tensor::from_bool(std::move(shape), {bytes, count});
        break;
      }
    }
    *out = wrap(std::move(t));
  });
}

refign_status refign_tensor_load(const char* path, refign_tensor** out) {
  return guarded([&] {
    need(out, "out");
    *out = wrap(refign::Tensor::load(need(path, "path")));
  });
}

refign_status refign_tensor_save(const refign_tensor* t, const char* path) {
  return guarded([&] { need(t, "tensor")->tensor.save(need(path, "path")); });
}

void refign_tensor_free(refign_tensor* t) { delete t; }

refign_dtype refign_tensor_dtype(const refign_tensor* t) {
  return t ? static_cast<refign_dtype>(t->tensor.dtype()) : REFIGN_DTYPE_F32;
}

size_t refign_tensor_ndim(const refign_tensor* t) { return t ? t->tensor.dims().size() : 0; }

uint64_t refign_tensor_dim(const refign_tensor* t, size_t axis) {
  if (t == nullptr || axis >= t->tensor.dims().size()) return 0;
  return t->tensor.dims()[axis];
}

uint64_t refign_tensor_element_count(const refign_tensor* t) {
  return t ? t->tensor.element_count() : 0;
}

refign_status refign_tensor_copy_data(const refign_tensor* t, void* dst, size_t capacity) {
  return guarded([&] {
    const auto& tensor = need(t, "tensor")->tensor;
    const std::size_t bytes = tensor.payload().size();
    if (capacity < bytes) refign::fail(refign::ErrorCode::kContractViolation, "destination too small");
    if (bytes == 0) return;
    need(dst, "dst");
    switch (tensor.dtype()) {
      case refign::DType::kF32: {
        const auto v = tensor.to_f32();
        std::memcpy(dst, v.data(), bytes);
        break;
      }
      case refign::DType::kU16: {
        const auto v = tensor.to_u16();
        std::memcpy(dst, v.data(), bytes);
        break;
      }
      case refign::DType::kBool:
        std::memcpy(dst, tensor.payload().data(), bytes);
        break;
    }
  });
}

int refign_tensor_equal(const refign_tensor* a, const refign_tensor* b) {
  if (a == nullptr || b == nullptr) return 0;
  return a->tensor == b->tensor ? 1 : 0;
}

refign_status refign_taxonomy_create(int classes, const int* large_static, size_t n_large,
                                     const int* small_static, size_t n_small, const int* dynamic_classes,
                                     size_t n_dynamic, refign_taxonomy** out) {
  return guarded([&] {
    need(out, "out");
    if (n_large > 0) need(large_static, "large_static");
    if (n_small > 0) need(small_static, "small_static");
    if (n_dynamic > 0) need(dynamic_classes, "dynamic");
    refign::ClassTaxonomy tax(classes, {large_static, large_static + n_large},
                              {small_static, small_static + n_small},
                              {dynamic_classes, dynamic_classes + n_dynamic});
    *out = new refign_taxonomy{std::move(tax)};
  });
}

refign_status refign_taxonomy_load(const char* path, refign_taxonomy** out) {
  return guarded([&] {
    need(out, "out");
    *out = new refign_taxonomy{refign::load_taxonomy(need(path, "path"))};
  });
}

void refign_taxonomy_free(refign_taxonomy* tax) { delete tax; }

refign_status refign_config_default(refign_config** out) {
  return guarded([&] { *need(out, "out") = new refign_config{}; });
}

refign_status refign_config_parse(const char* text, refign_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new refign_config{refign::parse_run_config(need(text, "text"))};
  });
}

refign_status refign_config_load(const char* path, refign_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new refign_config{refign::load_run_config(need(path, "path"))};
  });
}

refign_status refign_config_text(const refign_config* cfg, char** out) {
  return guarded([&] {
    need(out, "out");
    *out = copy_string(refign::to_text(need(cfg, "config")->config));
  });
}

void refign_config_free(refign_config* cfg) { delete cfg; }

refign_status refign_compose_gaussian(const refign_tensor* first, const refign_tensor* second,
                                      refign_tensor** out) {
  return guarded([&] {
    need(out, "out");
    const auto a = refign::gaussian_from(need(first, "first")->tensor);
    const auto b = refign::gaussian_from(need(second, "second")->tensor);
    *out = wrap(refign::to_tensor(refign::compose_gaussian(a, b)));
  });
}

void refign_refine_options_default(refign_refine_options* opts) {
  if (opts == nullptr) return;
  const refign::RefineConfig defaults;
  opts->gamma = defaults.gamma;
  opts->enable_mask = defaults.enable_mask_m ? 1 : 0;
  opts->enable_trust = defaults.enable_trust ? 1 : 0;
  opts->has_fixed_alpha = 0;
  opts->fixed_alpha = 0.0;
  opts->has_threshold = 0;
  opts->threshold = 0.0;
  opts->radius = 1.0;
}

refign_status refign_refine(const refign_tensor* q_target, const refign_tensor* q_reference,
                            const refign_tensor* flow, const refign_taxonomy* tax,
                            const refign_refine_options* opts, refign_tensor** refined,
                            refign_tensor** labels, double* trust) {
  return guarded([&] {
    const auto& o = *need(opts, "options");
    refign::RefineConfig cfg;
    cfg.gamma = o.gamma;
    cfg.enable_mask_m = o.enable_mask != 0;
    cfg.enable_trust = o.enable_trust != 0;
    if (o.has_fixed_alpha) cfg.fixed_alpha = o.fixed_alpha;
    cfg.validate();
    std::optional<double> threshold;
    if (o.has_threshold) {
      refign::require(o.threshold >= 0.0 && o.threshold <= 1.0, "threshold must lie in [0, 1]");
      threshold = o.threshold;
    }
    const auto qt = refign::probs_from(need(q_target, "q_target")->tensor);
    const auto qr = refign::probs_from(need(q_reference, "q_reference")->tensor);
    const auto g = refign::gaussian_from(need(flow, "flow")->tensor);
    const auto result = refign::refine_with_flow(qt, qr, g, need(tax, "taxonomy")->taxonomy, cfg,
                                                 o.radius, threshold);
    // Build every output before publishing any of them.
    refign::Tensor refined_t = refign::to_tensor(static_cast<const refign::Field&>(result.refinement.refined));
    refign::Tensor labels_t = refign::to_tensor(result.labels);
    if (refined) *refined = wrap(std::move(refined_t));
    if (labels) *labels = wrap(std::move(labels_t));
    if (trust) *trust = result.refinement.trust;
  });
}

refign_status refign_eval_miou(const refign_tensor* pred, const refign_tensor* gt, int classes, char** csv) {
  return guarded([&] {
    need(csv, "csv");
    const auto cm = refign::confusion_from(need(pred, "pred")->tensor, need(gt, "gt")->tensor, classes);
    *csv = copy_string(refign::miou_report(refign::miou(cm)));
  });
}

refign_status refign_eval_pck(const refign_tensor* pred, const refign_tensor* gt, const double* thresholds,
                              size_t n_thresholds, char** csv) {
  return guarded([&] {
    need(csv, "csv");
    std::vector<double> t = refign::default_pck_thresholds();
    if (n_thresholds > 0) t.assign(need(thresholds, "thresholds"), thresholds + n_thresholds);
    *csv = copy_string(refign::pck_report(matches(pred, gt), t));
  });
}

refign_status refign_eval_aepe(const refign_tensor* pred, const refign_tensor* gt, char** csv) {
  return guarded([&] {
    need(csv, "csv");
    *csv = copy_string(refign::aepe_report(matches(pred, gt)));
  });
}

refign_status refign_eval_ause(const refign_tensor* pred, const refign_tensor* gt, char** csv) {
  return guarded([&] {
    need(csv, "csv");
    *csv = copy_string(refign::ause_report(matches(pred, gt)));
  });
}

refign_status refign_selftrain(const refign_config* cfg, uint64_t seed, refign_run** out) {
  return guarded([&] {
    need(out, "out");
    *out = new refign_run{refign::run_experiment(need(cfg, "config")->config, seed)};
  });
}

refign_status refign_run_metrics_csv(const refign_run* run, char** csv) {
  return guarded([&] {
    need(csv, "csv");
    *csv = copy_string(refign::metrics_csv(need(run, "run")->outcome.train.log));
  });
}

refign_status refign_run_params(const refign_run* run, refign_tensor** out) {
  return guarded([&] {
    need(out, "out");
    *out = wrap(refign::to_tensor(need(run, "run")->outcome.train.student));
  });
}

refign_status refign_run_evaluation(const refign_run* run, double* miou, double* diversity) {
  return guarded([&] {
    const auto& eval = need(run, "run")->outcome.eval;
    if (miou) *miou = eval.miou;
    if (diversity) *diversity = eval.diversity;
  });
}

void refign_run_free(refign_run* run) { delete run; }

refign_status refign_ablation(const refign_config* cfg, uint64_t seed, char** csv) {
  return guarded([&] {
    need(csv, "csv");
    *csv = copy_string(refign::ablation_csv(refign::run_ablation(need(cfg, "config")->config, seed)));
  });
}

refign_status refign_gamma_sweep(const refign_config* cfg, uint64_t seed, const double* gammas,
                                 size_t n_gammas, char** csv) {
  return guarded([&] {
    need(csv, "csv");
    std::vector<double> grid = refign::default_gamma_grid();
    if (n_gammas > 0) grid.assign(need(gammas, "gammas"), gammas + n_gammas);
    *csv = copy_string(refign::gamma_csv(refign::run_gamma_sweep(need(cfg, "config")->config, seed, grid)));
  });
}

}  // extern "C"
