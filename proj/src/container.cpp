#include "refign/container.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>

namespace refign {

namespace {

constexpr std::array<char, 4> kMagic{'R', 'F', 'T', 'N'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kMaxDims = 16;

std::size_t padded_header_size(std::size_t ndim) {
  const std::size_t raw = 7 + 8 * ndim;
  return (raw + 15) / 16 * 16;
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t checked_count(const std::vector<std::uint64_t>& dims) {
  std::uint64_t n = 1;
  for (auto d : dims) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
      fail(ErrorCode::kFormat, "tensor dimensions overflow");
    }
    n *= d;
  }
  return n;
}

void expect(const Tensor& t, DType dtype, std::size_t ndim, const char* what) {
  if (t.dtype() != dtype || t.dims().size() != ndim) {
    fail(ErrorCode::kFormat, std::string(what) + ": unexpected tensor dtype or rank");
  }
}

int as_int(std::uint64_t d) {
  if (d > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
    fail(ErrorCode::kFormat, "tensor dimension too large");
  }
  return static_cast<int>(d);
}

std::vector<std::uint64_t> grid_dims(const Field& f, bool with_channels) {
  std::vector<std::uint64_t> dims{static_cast<std::uint64_t>(f.height()),
                                  static_cast<std::uint64_t>(f.width())};
  if (with_channels) dims.push_back(static_cast<std::uint64_t>(f.channels()));
  return dims;
}

}  // namespace

std::size_t dtype_size(DType dtype) noexcept {
  switch (dtype) {
    case DType::kF32: return 4;
    case DType::kU16: return 2;
    case DType::kBool: return 1;
  }
  return 0;
}

Tensor::Tensor(DType dtype, std::vector<std::uint64_t> dims, std::vector<std::uint8_t> payload)
    : dtype_(dtype), dims_(std::move(dims)), payload_(std::move(payload)) {
  if (dtype_size(dtype_) == 0) fail(ErrorCode::kFormat, "unknown tensor dtype");
  if (dims_.size() > kMaxDims) fail(ErrorCode::kFormat, "tensor rank too large");
  const auto n = checked_count(dims_);
  if (n > std::numeric_limits<std::uint64_t>::max() / dtype_size(dtype_) ||
      payload_.size() != n * dtype_size(dtype_)) {
    fail(ErrorCode::kFormat, "tensor payload length does not match its dimensions");
  }
  if (dtype_ == DType::kBool &&
      std::any_of(payload_.begin(), payload_.end(), [](std::uint8_t b) { return b > 1; })) {
    fail(ErrorCode::kFormat, "boolean tensor holds a value other than 0 or 1");
  }
}

Tensor Tensor::from_f32(std::vector<std::uint64_t> dims, std::span<const float> values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 4);
  for (float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return Tensor(DType::kF32, std::move(dims), std::move(bytes));
}

Tensor Tensor::from_u16(std::vector<std::uint64_t> dims, std::span<const std::uint16_t> values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 2);
  for (auto v : values) {
    bytes.push_back(static_cast<std::uint8_t>(v & 0xFF));
    bytes.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  return Tensor(DType::kU16, std::move(dims), std::move(bytes));
}

Tensor Tensor::from_bool(std::vector<std::uint64_t> dims, std::span<const std::uint8_t> values) {
  std::vector<std::uint8_t> bytes(values.begin(), values.end());
  for (auto& b : bytes) b = b != 0 ? 1 : 0;
  return Tensor(DType::kBool, std::move(dims), std::move(bytes));
}

std::uint64_t Tensor::element_count() const noexcept {
  std::uint64_t n = 1;
  for (auto d : dims_) n *= d;
  return n;
}

std::vector<float> Tensor::to_f32() const {
  if (dtype_ != DType::kF32) fail(ErrorCode::kFormat, "tensor is not f32");
  std::vector<float> out(payload_.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(payload_[4 * i + b]) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

std::vector<std::uint16_t> Tensor::to_u16() const {
  if (dtype_ != DType::kU16) fail(ErrorCode::kFormat, "tensor is not u16");
  std::vector<std::uint16_t> out(payload_.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint16_t>(payload_[2 * i] | (payload_[2 * i + 1] << 8));
  return out;
}

std::vector<std::uint8_t> Tensor::to_bool() const {
  if (dtype_ != DType::kBool) fail(ErrorCode::kFormat, "tensor is not boolean");
  return payload_;
}

void Tensor::write(std::ostream& out) const {
  std::vector<std::uint8_t> header(kMagic.begin(), kMagic.end());
  header.push_back(kVersion);
  header.push_back(static_cast<std::uint8_t>(dtype_));
  header.push_back(static_cast<std::uint8_t>(dims_.size()));
  for (auto d : dims_) put_u64(header, d);
  header.resize(padded_header_size(dims_.size()), 0);
  out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload_.data()),
            static_cast<std::streamsize>(payload_.size()));
  if (!out) fail(ErrorCode::kIo, "failed to write tensor");
}

Tensor Tensor::read(std::istream& in) {
  std::array<std::uint8_t, 7> fixed{};
  if (!in.read(reinterpret_cast<char*>(fixed.data()), fixed.size())) {
    fail(ErrorCode::kFormat, "truncated tensor header");
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), fixed.begin())) {
    fail(ErrorCode::kFormat, "bad tensor magic");
  }
  if (fixed[4] != kVersion) fail(ErrorCode::kFormat, "unsupported tensor version");
  if (fixed[5] > 2) fail(ErrorCode::kFormat, "unknown tensor dtype");
  const auto dtype = static_cast<DType>(fixed[5]);
  const std::size_t ndim = fixed[6];
  if (ndim > kMaxDims) fail(ErrorCode::kFormat, "tensor rank too large");

  std::vector<std::uint8_t> rest(padded_header_size(ndim) - 7);
  if (!in.read(reinterpret_cast<char*>(rest.data()), static_cast<std::streamsize>(rest.size()))) {
    fail(ErrorCode::kFormat, "truncated tensor header");
  }
  std::vector<std::uint64_t> dims(ndim);
  for (std::size_t i = 0; i < ndim; ++i) dims[i] = get_u64(rest.data() + 8 * i);
  if (std::any_of(rest.begin() + 8 * ndim, rest.end(), [](std::uint8_t b) { return b != 0; })) {
    fail(ErrorCode::kFormat, "non-zero tensor header padding");
  }

  const auto n = checked_count(dims);
  if (n > (std::uint64_t{1} << 40) / dtype_size(dtype)) fail(ErrorCode::kFormat, "tensor too large");
  std::vector<std::uint8_t> payload(n * dtype_size(dtype));
  if (!in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()))) {
    fail(ErrorCode::kFormat, "truncated tensor payload");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    fail(ErrorCode::kFormat, "trailing bytes after tensor payload");
  }
  return Tensor(dtype, std::move(dims), std::move(payload));
}

void Tensor::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  write(out);
}

Tensor Tensor::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return read(in);
}

Tensor to_tensor(const Field& field) {
  return Tensor::from_f32(grid_dims(field, true), field.data());
}

Tensor to_tensor(const ScalarField& field) {
  return Tensor::from_f32(grid_dims(field, false), field.data());
}

Tensor to_tensor(const LabelMap& labels) {
  return Tensor::from_u16({static_cast<std::uint64_t>(labels.height()),
                           static_cast<std::uint64_t>(labels.width())},
                          labels.labels());
}

Tensor to_tensor(const ValidityMask& mask) {
  return Tensor::from_bool({static_cast<std::uint64_t>(mask.height()),
                            static_cast<std::uint64_t>(mask.width())},
                           mask.bits());
}

Tensor to_tensor(const GaussianFlow& flow) {
  const std::size_t n = flow.mean().pixel_count();
  std::vector<float> values(n * 4);
  for (std::size_t p = 0; p < n; ++p) {
    values[4 * p] = flow.mean().data()[2 * p];
    values[4 * p + 1] = flow.mean().data()[2 * p + 1];
    values[4 * p + 2] = flow.log_variance().data()[p];
    values[4 * p + 3] = flow.validity().at(p) ? 1.0f : 0.0f;
  }
  return Tensor::from_f32({static_cast<std::uint64_t>(flow.height()),
                           static_cast<std::uint64_t>(flow.width()), 4},
                          values);
}

Tensor to_tensor(const ToyModelParams& params) {
  std::vector<float> values;
  values.reserve(params.weight.size() + params.bias.size());
  for (double v : params.weight) values.push_back(static_cast<float>(v));
  for (double v : params.bias) values.push_back(static_cast<float>(v));
  return Tensor::from_f32({static_cast<std::uint64_t>(params.features) + 1,
                           static_cast<std::uint64_t>(params.classes)},
                          values);
}

FlowField flow_from(const Tensor& t) {
  expect(t, DType::kF32, 3, "flow");
  if (t.dims()[2] != 2) fail(ErrorCode::kFormat, "flow tensor needs 2 channels");
  return FlowField(Field(as_int(t.dims()[0]), as_int(t.dims()[1]), 2, t.to_f32()));
}

ScalarField scalar_from(const Tensor& t) {
  expect(t, DType::kF32, 2, "scalar field");
  return ScalarField(as_int(t.dims()[0]), as_int(t.dims()[1]), t.to_f32());
}

ProbMap probs_from(const Tensor& t) {
  expect(t, DType::kF32, 3, "probability map");
  if (t.dims()[2] == 0) fail(ErrorCode::kFormat, "probability map needs channels");
  return ProbMap(Field(as_int(t.dims()[0]), as_int(t.dims()[1]), as_int(t.dims()[2]), t.to_f32()));
}

ImageField image_from(const Tensor& t) {
  expect(t, DType::kF32, 3, "image");
  if (t.dims()[2] == 0) fail(ErrorCode::kFormat, "image needs channels");
  return ImageField(Field(as_int(t.dims()[0]), as_int(t.dims()[1]), as_int(t.dims()[2]), t.to_f32()));
}

LabelMap labels_from(const Tensor& t) {
  expect(t, DType::kU16, 2, "label map");
  return LabelMap(as_int(t.dims()[0]), as_int(t.dims()[1]), t.to_u16());
}

ValidityMask mask_from(const Tensor& t) {
  expect(t, DType::kBool, 2, "validity mask");
  ValidityMask mask(as_int(t.dims()[0]), as_int(t.dims()[1]), false);
  const auto bits = t.to_bool();
  for (std::size_t p = 0; p < bits.size(); ++p) mask.set(p, bits[p] != 0);
  return mask;
}

GaussianFlow gaussian_from(const Tensor& t) {
  expect(t, DType::kF32, 3, "gaussian flow");
  if (t.dims()[2] != 4) fail(ErrorCode::kFormat, "gaussian flow tensor needs 4 channels");
  const int h = as_int(t.dims()[0]), w = as_int(t.dims()[1]);
  const auto values = t.to_f32();
  FlowField mean(h, w);
  ScalarField log_var(h, w);
  ValidityMask valid(h, w, false);
  for (std::size_t p = 0; p < mean.pixel_count(); ++p) {
    mean.data()[2 * p] = values[4 * p];
    mean.data()[2 * p + 1] = values[4 * p + 1];
    log_var.data()[p] = values[4 * p + 2];
    const float v = values[4 * p + 3];
    if (v != 0.0f && v != 1.0f) fail(ErrorCode::kFormat, "gaussian flow validity must be 0 or 1");
    valid.set(p, v == 1.0f);
  }
  if (!mean.all_finite() || !log_var.all_finite()) {
    fail(ErrorCode::kFormat, "gaussian flow holds non-finite values");
  }
  return GaussianFlow(std::move(mean), std::move(log_var), std::move(valid));
}

Tensor match_predictions_to_tensor(const MatchSet& ms) {
  std::vector<float> values;
  for (const auto& m : ms) {
    values.push_back(static_cast<float>(m.predicted[0]));
    values.push_back(static_cast<float>(m.predicted[1]));
    values.push_back(static_cast<float>(m.variance));
  }
  return Tensor::from_f32({ms.size(), 3}, values);
}

Tensor match_truth_to_tensor(const MatchSet& ms) {
  std::vector<float> values;
  for (const auto& m : ms) {
    values.push_back(static_cast<float>(m.truth[0]));
    values.push_back(static_cast<float>(m.truth[1]));
  }
  return Tensor::from_f32({ms.size(), 2}, values);
}

MatchSet matches_from(const Tensor& predicted, const Tensor& truth) {
  expect(predicted, DType::kF32, 2, "match predictions");
  expect(truth, DType::kF32, 2, "match ground truth");
  if (predicted.dims()[1] != 3 || truth.dims()[1] != 2 || predicted.dims()[0] != truth.dims()[0]) {
    fail(ErrorCode::kFormat, "match tensors must be [n, 3] and [n, 2]");
  }
  const auto p = predicted.to_f32();
  const auto g = truth.to_f32();
  MatchSet ms(predicted.dims()[0]);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    ms[i].predicted = {p[3 * i], p[3 * i + 1]};
    ms[i].variance = p[3 * i + 2];
    ms[i].truth = {g[2 * i], g[2 * i + 1]};
    const bool finite = std::isfinite(ms[i].predicted[0]) && std::isfinite(ms[i].predicted[1]) &&
                        std::isfinite(ms[i].variance) && std::isfinite(ms[i].truth[0]) &&
                        std::isfinite(ms[i].truth[1]);
    if (!finite) fail(ErrorCode::kFormat, "match set holds non-finite values");
  }
  return ms;
}

}  // namespace refign
