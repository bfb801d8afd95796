#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "confusable/evaluation.hpp"
#include "confusable/synthetic.hpp"
#include "confusable/training.hpp"

namespace confusable {

// Flat `section.key -> value` view of an INI file.
using ConfigMap = std::map<std::string, std::string>;

// Throws ParseError (with line) on malformed input.
ConfigMap parse_config(std::istream& in);
// Throws InputError when the file cannot be opened.
ConfigMap load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const ConfigMap& config);

// Applies `key=value`. Throws ConfigError when the key is unknown or the text
// has no '='.
void apply_override(ConfigMap& config, std::string_view assignment);
// Throws ConfigError naming the first unknown key.
void check_known_keys(const ConfigMap& config);
std::vector<std::string> known_keys();

// Typed readers. Missing keys keep the struct defaults; malformed values
// throw ConfigError naming the key.
SyntheticSpec synthetic_spec_from(const ConfigMap& config);
TrainConfig train_config_from(const ConfigMap& config);
std::vector<CmeBenchmarkConfig> bench_configs_from(const ConfigMap& config);
CmeBenchmarkOptions bench_options_from(const ConfigMap& config);

struct DataPaths {
  std::optional<std::filesystem::path> train;
  std::optional<std::filesystem::path> validation;
  std::optional<std::filesystem::path> test;
};
DataPaths data_paths_from(const ConfigMap& config);

// One swept hyperparameter, e.g. `rho=0,0.3,0.6`. Short names rho, n_d, n_te
// and n_tc map to their sections; full dotted keys are accepted too.
struct Sweep {
  std::string key;
  std::vector<std::string> values;
};
Sweep parse_sweep(std::string_view text);

}  // namespace confusable
