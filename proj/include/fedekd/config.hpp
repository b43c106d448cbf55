#pragma once

// Experiment configuration files.
//
// Grammar (one construct per line, surrounding whitespace ignored):
//   # comment            ; comment
//   [section]
//   key = value
// Keys are addressed as section.key.  Lists are comma separated.  Unknown
// keys, duplicate keys, and keys outside a section are errors.  The full key
// set with defaults is what render_config() prints.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedekd/federation.hpp"

namespace fedekd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  ExperimentConfig() { spec.partition.min_client_samples = 10; }

  ExperimentSpec spec;
  std::vector<Strategy> strategies{Strategy::fedekd};
  // "auto" picks kd_symkl for classification and regression_sq for regression.
  std::string energy = "auto";
  std::size_t num_seeds = 1;
  std::uint64_t seed = 0;
  std::string name = "experiment";
  std::filesystem::path output_dir;
};

// Parses config text; `overrides` are "section.key=value" strings applied
// after the file.  Throws ConfigError naming the offending key.
ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Canonical text listing every key; parse_config(render_config(c)) == c.
std::string render_config(const ExperimentConfig& cfg);

// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

// ExperimentSpec with the energy kind resolved for the task.
ExperimentSpec resolved_spec(const ExperimentConfig& cfg);

}  // namespace fedekd
