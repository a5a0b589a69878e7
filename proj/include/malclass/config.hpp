#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "malclass/evaluator.hpp"
#include "malclass/models.hpp"
#include "malclass/selector.hpp"
#include "malclass/synth.hpp"

namespace malclass {

struct PipelineConfig {
  std::filesystem::path workdir = "malclass-run";
  std::filesystem::path manifest;  ///< empty: <workdir>/corpus/manifest.csv
  std::uint64_t seed = 42;
  std::size_t threads = 0;

  CorpusScale scale = CorpusScale::Tiny;

  bool write_partitions = false;

  std::vector<int> ngram_sizes = {1};
  bool ngram_combined = false;
  std::size_t max_args = 2;
  bool reset_at_process = false;

  bool l2 = true;

  SelectionConfig selection;
  bool select_on_all = false;

  std::vector<ModelKind> models = {ModelKind::RandomForest};
  std::map<std::string, double> model_params;  ///< model.<key> overrides

  double train_ratio = 0.8;
  bool stratified = true;
  Averaging averaging = Averaging::Macro;

  std::filesystem::path manifest_path() const;
  SplitSpec split_spec() const;
  /// Parameters for `kind`: defaults plus the overrides that apply to it.
  HyperParams params_for(ModelKind kind) const;

  /// Throws Error(ConfigError).
  void validate() const;

  bool operator==(const PipelineConfig&) const = default;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

/// Every fixed key, in documentation order. Model hyperparameters use the open-ended
/// `model.<param>` namespace.
const std::vector<ConfigKey>& config_keys();

/// Sets one dotted key. Throws Error(ConfigError) for unknown keys or bad values.
void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value);

/// `key = value` lines; '#' starts a comment. Throws Error(ConfigError) / Error(MissingArtifact).
void apply_config_text(PipelineConfig& config, const std::string& text);
void apply_config_file(PipelineConfig& config, const std::filesystem::path& path);

/// Every key with its current value; parsing the result reproduces the config.
std::string config_to_text(const PipelineConfig& config);

}  // namespace malclass
