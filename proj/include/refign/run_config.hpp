#pragma once

// Flat `key = value` run configuration. Blank lines and lines starting with
// '#' are skipped. Unknown keys, duplicate keys, malformed values and
// out-of-range values are all reported together in one kConfig error.
//
// Keys (defaults in brackets):
//   scene:  height [64] width [64] poles [3] blobs [3] corruption [0.8]
//           homography_strength [0.1] dynamic_shift [8]
//   train:  iterations [2000] learning_rate [1] ema_momentum [0.99]
//           reference_adaptation [true] pseudo_threshold [none]
//           bypass_refinement [false]
//   refine: gamma [0.25] mask_m [true] trust [true] fixed_alpha [none]
//   align:  alignment [oracle|none] flow_noise [0.5] changed_variance [25]
//           radius [1]
//   loss:   lambda [1] huber_delta [1] alpha1 [0.03] alpha2 [0.05]
//   data:   train_scenes [32] eval_scenes [8]
//
// The seed is deliberately not a config key; it comes from the command line.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "refign/experiments.hpp"
#include "refign/refine.hpp"

namespace refign {

ExperimentConfig parse_run_config(std::string_view text);
ExperimentConfig load_run_config(const std::filesystem::path& path);

/// Serialises every key, so that parse_run_config(to_text(c)) == c.
std::string to_text(const ExperimentConfig& cfg);

/// Taxonomy file with keys `classes`, `large_static`, `small_static` and
/// `dynamic`; the class lists are comma separated and may be empty.
ClassTaxonomy parse_taxonomy(std::string_view text);
ClassTaxonomy load_taxonomy(const std::filesystem::path& path);

/// Comma-separated list of finite doubles.
std::vector<double> parse_double_list(std::string_view text);

}  // namespace refign
