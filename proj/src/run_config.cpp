#include "refign/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "refign/format.hpp"

namespace refign {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long long> to_integer(std::string_view s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return v;
}

std::optional<bool> to_bool(std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  return std::nullopt;
}

struct Line {
  int number;
  std::string key;
  std::string value;
};

// Splits `text` into key/value lines, appending syntax problems to `errors`.
std::vector<Line> split_lines(std::string_view text, std::vector<std::string>& errors) {
  std::vector<Line> lines;
  std::set<std::string> seen;
  int number = 0;
  while (!text.empty()) {
    ++number;
    const auto nl = text.find('\n');
    auto raw = nl == std::string_view::npos ? text : text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    raw = trim(raw);
    if (raw.empty() || raw.front() == '#') continue;
    const auto eq = raw.find('=');
    if (eq == std::string_view::npos) {
      errors.push_back("line " + std::to_string(number) + ": expected key = value");
      continue;
    }
    std::string key(trim(raw.substr(0, eq)));
    std::string value(trim(raw.substr(eq + 1)));
    if (!seen.insert(key).second) {
      errors.push_back("line " + std::to_string(number) + ": duplicate key '" + key + "'");
      continue;
    }
    lines.push_back({number, std::move(key), std::move(value)});
  }
  return lines;
}

[[noreturn]] void throw_all(const std::vector<std::string>& errors) {
  std::string msg = "invalid configuration:";
  for (const auto& e : errors) msg += "\n  " + e;
  fail(ErrorCode::kConfig, msg);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A setter returns an empty string on success or a description of the problem.
using Setter = std::function<std::string(std::string_view)>;

Setter real(double& target, std::function<bool(double)> ok, const char* range) {
  return [&target, ok = std::move(ok), range](std::string_view v) -> std::string {
    const auto d = to_double(v);
    if (!d) return "expected a finite number";
    if (!ok(*d)) return std::string("must be ") + range;
    target = *d;
    return {};
  };
}

Setter integer(int& target, long long lo, long long hi) {
  return [&target, lo, hi](std::string_view v) -> std::string {
    const auto i = to_integer(v);
    if (!i) return "expected an integer";
    if (*i < lo || *i > hi) return "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
    target = static_cast<int>(*i);
    return {};
  };
}

Setter boolean(bool& target) {
  return [&target](std::string_view v) -> std::string {
    const auto b = to_bool(v);
    if (!b) return "expected true or false";
    target = *b;
    return {};
  };
}

Setter optional_unit(std::optional<double>& target) {
  return [&target](std::string_view v) -> std::string {
    if (v == "none") {
      target.reset();
      return {};
    }
    const auto d = to_double(v);
    if (!d) return "expected a number or none";
    if (*d < 0.0 || *d > 1.0) return "must lie in [0, 1]";
    target = *d;
    return {};
  };
}

std::map<std::string, Setter> setters(ExperimentConfig& c) {
  auto positive = [](double x) { return x > 0.0; };
  auto non_negative = [](double x) { return x >= 0.0; };
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  std::map<std::string, Setter> s;
  s["height"] = integer(c.scene.height, 8, 4096);
  s["width"] = integer(c.scene.width, 8, 4096);
  s["poles"] = integer(c.scene.poles, 0, 64);
  s["blobs"] = integer(c.scene.blobs, 0, 64);
  s["corruption"] = real(c.scene.corruption_strength, unit, "in [0, 1]");
  s["homography_strength"] =
      real(c.scene.homography_strength, [](double x) { return x >= 0.0 && x <= 0.5; }, "in [0, 0.5]");
  s["dynamic_shift"] = real(c.scene.dynamic_shift, non_negative, ">= 0");
  s["iterations"] = integer(c.train.iterations, 1, 100000000);
  s["learning_rate"] = real(c.train.learning_rate, positive, "> 0");
  s["ema_momentum"] = real(c.train.ema_momentum, unit, "in [0, 1]");
  s["reference_adaptation"] = boolean(c.train.reference_adaptation);
  s["pseudo_threshold"] = optional_unit(c.train.pseudo_threshold);
  s["bypass_refinement"] = boolean(c.train.bypass_refinement);
  s["gamma"] = real(c.train.refine.gamma, positive, "> 0");
  s["mask_m"] = boolean(c.train.refine.enable_mask_m);
  s["trust"] = boolean(c.train.refine.enable_trust);
  s["fixed_alpha"] = optional_unit(c.train.refine.fixed_alpha);
  s["alignment"] = [&c](std::string_view v) -> std::string {
    if (v == "oracle") c.alignment = AlignmentMode::kOracle;
    else if (v == "none") c.alignment = AlignmentMode::kNone;
    else return "expected oracle or none";
    return {};
  };
  s["flow_noise"] = real(c.flow_noise, non_negative, ">= 0");
  s["changed_variance"] = real(c.changed_variance, positive, "> 0");
  s["radius"] = real(c.radius, positive, "> 0");
  s["lambda"] = real(c.loss.lambda_weight, positive, "> 0");
  s["huber_delta"] = real(c.loss.huber_delta, positive, "> 0");
  s["alpha1"] = real(c.loss.alpha1, positive, "> 0");
  s["alpha2"] = real(c.loss.alpha2, positive, "> 0");
  s["train_scenes"] = integer(c.train_scenes, 1, 100000);
  s["eval_scenes"] = integer(c.eval_scenes, 1, 100000);
  return s;
}

std::vector<int> parse_int_list(std::string_view text, std::string& error) {
  std::vector<int> out;
  text = trim(text);
  if (text.empty()) return out;
  while (true) {
    const auto comma = text.find(',');
    const auto item = trim(comma == std::string_view::npos ? text : text.substr(0, comma));
    const auto i = to_integer(item);
    if (!i || *i < 0 || *i > 65534) {
      error = "expected a comma-separated list of class indices";
      return {};
    }
    out.push_back(static_cast<int>(*i));
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_run_config(std::string_view text) {
  std::vector<std::string> errors;
  const auto lines = split_lines(text, errors);
  ExperimentConfig cfg;
  auto table = setters(cfg);
  for (const auto& line : lines) {
    const auto it = table.find(line.key);
    if (it == table.end()) {
      errors.push_back("line " + std::to_string(line.number) + ": unknown key '" + line.key + "'");
      continue;
    }
    const auto problem = it->second(line.value);
    if (!problem.empty()) {
      errors.push_back("line " + std::to_string(line.number) + ": " + line.key + " " + problem);
    }
  }
  if (errors.empty()) {
    try {
      cfg.validate();
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) throw_all(errors);
  return cfg;
}

ExperimentConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path));
}

std::string to_text(const ExperimentConfig& c) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("none"); };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  std::ostringstream os;
  os << "height = " << c.scene.height << '\n'
     << "width = " << c.scene.width << '\n'
     << "poles = " << c.scene.poles << '\n'
     << "blobs = " << c.scene.blobs << '\n'
     << "corruption = " << format_double(c.scene.corruption_strength) << '\n'
     << "homography_strength = " << format_double(c.scene.homography_strength) << '\n'
     << "dynamic_shift = " << format_double(c.scene.dynamic_shift) << '\n'
     << "iterations = " << c.train.iterations << '\n'
     << "learning_rate = " << format_double(c.train.learning_rate) << '\n'
     << "ema_momentum = " << format_double(c.train.ema_momentum) << '\n'
     << "reference_adaptation = " << b(c.train.reference_adaptation) << '\n'
     << "pseudo_threshold = " << opt(c.train.pseudo_threshold) << '\n'
     << "bypass_refinement = " << b(c.train.bypass_refinement) << '\n'
     << "gamma = " << format_double(c.train.refine.gamma) << '\n'
     << "mask_m = " << b(c.train.refine.enable_mask_m) << '\n'
     << "trust = " << b(c.train.refine.enable_trust) << '\n'
     << "fixed_alpha = " << opt(c.train.refine.fixed_alpha) << '\n'
     << "alignment = " << (c.alignment == AlignmentMode::kOracle ? "oracle" : "none") << '\n'
     << "flow_noise = " << format_double(c.flow_noise) << '\n'
     << "changed_variance = " << format_double(c.changed_variance) << '\n'
     << "radius = " << format_double(c.radius) << '\n'
     << "lambda = " << format_double(c.loss.lambda_weight) << '\n'
     << "huber_delta = " << format_double(c.loss.huber_delta) << '\n'
     << "alpha1 = " << format_double(c.loss.alpha1) << '\n'
     << "alpha2 = " << format_double(c.loss.alpha2) << '\n'
     << "train_scenes = " << c.train_scenes << '\n'
     << "eval_scenes = " << c.eval_scenes << '\n';
  return os.str();
}

ClassTaxonomy parse_taxonomy(std::string_view text) {
  std::vector<std::string> errors;
  const auto lines = split_lines(text, errors);
  std::optional<int> classes;
  std::vector<int> large, small, dynamic;
  for (const auto& line : lines) {
    const std::string where = "line " + std::to_string(line.number) + ": ";
    std::string problem;
    if (line.key == "classes") {
      const auto c = to_integer(line.value);
      if (!c || *c < 1 || *c > 65535) problem = "classes must be an integer in [1, 65535]";
      else classes = static_cast<int>(*c);
    } else if (line.key == "large_static") {
      large = parse_int_list(line.value, problem);
    } else if (line.key == "small_static") {
      small = parse_int_list(line.value, problem);
    } else if (line.key == "dynamic") {
      dynamic = parse_int_list(line.value, problem);
    } else {
      problem = "unknown key '" + line.key + "'";
    }
    if (!problem.empty()) errors.push_back(where + problem);
  }
  if (!classes && errors.empty()) errors.push_back("missing key 'classes'");
  if (!errors.empty()) throw_all(errors);
  try {
    return ClassTaxonomy(*classes, large, small, dynamic);
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, std::string("invalid taxonomy: ") + e.what());
  }
}

ClassTaxonomy load_taxonomy(const std::filesystem::path& path) {
  return parse_taxonomy(read_file(path));
}

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  text = trim(text);
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = trim(comma == std::string_view::npos ? text : text.substr(0, comma));
    const auto d = to_double(item);
    if (!d) fail(ErrorCode::kConfig, "expected a comma-separated list of numbers");
    out.push_back(*d);
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  if (out.empty()) fail(ErrorCode::kConfig, "expected at least one number");
  return out;
}

}  // namespace refign
