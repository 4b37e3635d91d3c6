#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "refign/refign.h"

namespace {

refign_tensor* f32(std::vector<uint64_t> dims, const std::vector<float>& values) {
  refign_tensor* t = nullptr;
  REQUIRE(refign_tensor_create(REFIGN_DTYPE_F32, dims.size(), dims.data(), values.data(),
                               values.size() * sizeof(float), &t) == REFIGN_OK);
  return t;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  refign_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("library identity and status names") {
  CHECK(std::strlen(refign_version()) > 0);
  CHECK(std::string(refign_status_name(REFIGN_OK)) == "ok");
  CHECK(std::string(refign_status_name(REFIGN_ERR_FORMAT)) == "format error");
  CHECK(std::strlen(refign_status_name(static_cast<refign_status>(99))) > 0);
}

TEST_CASE("tensor handles") {
  const std::vector<float> v{1, 2, 3, 4, 5, 6};
  refign_tensor* t = f32({2, 3}, v);
  CHECK(refign_tensor_dtype(t) == REFIGN_DTYPE_F32);
  CHECK(refign_tensor_ndim(t) == 2);
  CHECK(refign_tensor_dim(t, 1) == 3);
  CHECK(refign_tensor_element_count(t) == 6);
  std::vector<float> back(6);
  CHECK(refign_tensor_copy_data(t, back.data(), back.size() * sizeof(float)) == REFIGN_OK);
  CHECK(back == v);
  CHECK(refign_tensor_copy_data(t, back.data(), 4) == REFIGN_ERR_INVALID_ARGUMENT);

  const auto path = (std::filesystem::temp_directory_path() / "refign_capi.rftn").string();
  CHECK(refign_tensor_save(t, path.c_str()) == REFIGN_OK);
  refign_tensor* loaded = nullptr;
  CHECK(refign_tensor_load(path.c_str(), &loaded) == REFIGN_OK);
  CHECK(refign_tensor_equal(t, loaded) == 1);
  refign_tensor_free(loaded);

  { std::ofstream(path, std::ios::binary) << "not a tensor"; }
  loaded = nullptr;
  CHECK(refign_tensor_load(path.c_str(), &loaded) == REFIGN_ERR_FORMAT);
  CHECK(loaded == nullptr);
  CHECK(std::strlen(refign_last_error()) > 0);
  std::filesystem::remove(path);
  CHECK(refign_tensor_load(path.c_str(), &loaded) == REFIGN_ERR_IO);

  const uint64_t dims[1] = {3};
  const uint8_t flags[3] = {0, 1, 2};
  refign_tensor* b = nullptr;
  CHECK(refign_tensor_create(REFIGN_DTYPE_BOOL, 1, dims, flags, 3, &b) == REFIGN_ERR_INVALID_ARGUMENT);
  CHECK(refign_tensor_create(REFIGN_DTYPE_F32, 1, dims, v.data(), 8, &b) == REFIGN_ERR_INVALID_ARGUMENT);
  refign_tensor_free(t);
  refign_tensor_free(nullptr);
}

TEST_CASE("null arguments") {
  refign_tensor* t = nullptr;
  CHECK(refign_tensor_load(nullptr, &t) == REFIGN_ERR_NULL_ARGUMENT);
  CHECK(refign_tensor_load("x", nullptr) == REFIGN_ERR_NULL_ARGUMENT);
  CHECK(refign_config_parse(nullptr, nullptr) == REFIGN_ERR_NULL_ARGUMENT);
  CHECK(refign_compose_gaussian(nullptr, nullptr, &t) == REFIGN_ERR_NULL_ARGUMENT);
  CHECK(std::strlen(refign_last_error()) > 0);
}

TEST_CASE("configuration handles") {
  refign_config* cfg = nullptr;
  CHECK(refign_config_parse("iterations = 7\nheight = 16\n", &cfg) == REFIGN_OK);
  char* text = nullptr;
  CHECK(refign_config_text(cfg, &text) == REFIGN_OK);
  CHECK(take(text).find("iterations = 7") != std::string::npos);
  refign_config_free(cfg);

  cfg = nullptr;
  CHECK(refign_config_parse("iterations = x\nfoo = 1\n", &cfg) == REFIGN_ERR_CONFIG);
  const std::string msg = refign_last_error();
  CHECK(msg.find("line 1") != std::string::npos);
  CHECK(msg.find("line 2") != std::string::npos);
}

TEST_CASE("taxonomy and refinement status codes") {
  const int large[] = {0}, small[] = {1}, dyn[] = {2};
  refign_taxonomy* tax = nullptr;
  CHECK(refign_taxonomy_create(3, large, 1, small, 1, small, 1, &tax) == REFIGN_ERR_INVALID_ARGUMENT);
  REQUIRE(refign_taxonomy_create(3, large, 1, small, 1, dyn, 1, &tax) == REFIGN_OK);

  // One pixel, three classes; identity flow with tiny variance.
  refign_tensor* qt = f32({1, 1, 3}, {0.6f, 0.3f, 0.1f});
  refign_tensor* qr = f32({1, 1, 3}, {0.2f, 0.7f, 0.1f});
  refign_tensor* flow = f32({1, 1, 4}, {0, 0, -10, 1});
  refign_refine_options opts;
  refign_refine_options_default(&opts);
  opts.has_fixed_alpha = 1;
  opts.fixed_alpha = 0.5;
  refign_tensor *refined = nullptr, *labels = nullptr;
  double trust = -1;
  REQUIRE(refign_refine(qt, qr, flow, tax, &opts, &refined, &labels, &trust) == REFIGN_OK);
  std::vector<float> r(3);
  CHECK(refign_tensor_copy_data(refined, r.data(), sizeof(float) * 3) == REFIGN_OK);
  CHECK(r[0] == doctest::Approx(0.4));
  CHECK(r[1] == doctest::Approx(0.5));
  uint16_t label = 99;
  CHECK(refign_tensor_copy_data(labels, &label, 2) == REFIGN_OK);
  CHECK(label == 1);
  CHECK(trust == 1.0);
  refign_tensor_free(refined);
  refign_tensor_free(labels);

  refign_tensor* wrong = f32({1, 2, 3}, {0.5f, 0.5f, 0, 0.5f, 0.5f, 0});
  CHECK(refign_refine(qt, wrong, flow, tax, &opts, nullptr, nullptr, nullptr) == REFIGN_ERR_INVALID_ARGUMENT);
  refign_tensor_free(wrong);

  refign_taxonomy* single = nullptr;
  REQUIRE(refign_taxonomy_create(1, large, 1, nullptr, 0, nullptr, 0, &single) == REFIGN_OK);
  refign_tensor* one = f32({1, 1, 1}, {1.0f});
  refign_refine_options_default(&opts);
  CHECK(refign_refine(one, one, flow, single, &opts, nullptr, nullptr, &trust) == REFIGN_ERR_DEGENERATE);
  refign_tensor_free(one);
  refign_taxonomy_free(single);

  refign_tensor_free(qt);
  refign_tensor_free(qr);
  refign_tensor_free(flow);
  refign_taxonomy_free(tax);
}

TEST_CASE("evaluation reports") {
  refign_tensor* pred = f32({2, 3}, {3, 0, 1, 0, 4, 1});
  refign_tensor* gt = f32({2, 2}, {0, 0, 0, 0});
  char* csv = nullptr;
  CHECK(refign_eval_aepe(pred, gt, &csv) == REFIGN_OK);
  CHECK(take(csv) == "metric,parameter,value\naepe,,3.5\n");
  const double t[] = {3.5};
  CHECK(refign_eval_pck(pred, gt, t, 1, &csv) == REFIGN_OK);
  CHECK(take(csv) == "metric,parameter,value\npck,3.5,50\n");
  refign_tensor_free(pred);
  refign_tensor_free(gt);

  refign_tensor* empty_pred = f32({0, 3}, {});
  refign_tensor* empty_gt = f32({0, 2}, {});
  CHECK(refign_eval_aepe(empty_pred, empty_gt, &csv) == REFIGN_ERR_EMPTY_INPUT);
  refign_tensor_free(empty_pred);
  refign_tensor_free(empty_gt);
}

TEST_CASE("self-training through the C API is deterministic") {
  refign_config* cfg = nullptr;
  REQUIRE(refign_config_parse("iterations = 12\nheight = 16\nwidth = 16\ntrain_scenes = 3\neval_scenes = 2\n",
                              &cfg) == REFIGN_OK);
  refign_run *a = nullptr, *b = nullptr;
  REQUIRE(refign_selftrain(cfg, 4, &a) == REFIGN_OK);
  REQUIRE(refign_selftrain(cfg, 4, &b) == REFIGN_OK);
  char *ca = nullptr, *cb = nullptr;
  CHECK(refign_run_metrics_csv(a, &ca) == REFIGN_OK);
  CHECK(refign_run_metrics_csv(b, &cb) == REFIGN_OK);
  const std::string sa = take(ca), sb = take(cb);
  CHECK(sa == sb);
  CHECK(std::count(sa.begin(), sa.end(), '\n') == 13);
  refign_tensor *pa = nullptr, *pb = nullptr;
  CHECK(refign_run_params(a, &pa) == REFIGN_OK);
  CHECK(refign_run_params(b, &pb) == REFIGN_OK);
  CHECK(refign_tensor_equal(pa, pb) == 1);
  CHECK(refign_tensor_dim(pa, 1) == 6);
  double miou = -1, diversity = -1;
  CHECK(refign_run_evaluation(a, &miou, &diversity) == REFIGN_OK);
  CHECK(miou >= 0.0);
  CHECK(miou <= 1.0);
  CHECK(diversity >= 0.0);
  CHECK(diversity <= 1.0);
  refign_tensor_free(pa);
  refign_tensor_free(pb);
  refign_run_free(a);
  refign_run_free(b);
  refign_config_free(cfg);
}
