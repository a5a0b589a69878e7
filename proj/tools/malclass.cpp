// Command-line front end: one subcommand per pipeline stage plus `pipeline` for the chain.

#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "malclass/config.hpp"
#include "malclass/error.hpp"
#include "malclass/pipeline.hpp"

namespace {

using malclass::PipelineConfig;

struct Overrides {
  std::optional<std::string> config_file;
  std::map<std::string, std::string> keys;
  std::vector<std::string> model_params;
  std::vector<std::pair<std::string, std::string>> shorthands;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"API-call n-gram malware classification toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Overrides overrides;
  app.add_option("--config", overrides.config_file, "key = value config file (dotted keys)");

  std::string keys_help = "Config keys (each is also a --<key> flag):\n";
  for (const auto& key : malclass::config_keys()) {
    keys_help += "  " + key.name + ": " + key.help + " [default " + key.get(PipelineConfig{}) + "]\n";
    app.add_option("--" + key.name, overrides.keys[key.name], key.help);
  }
  keys_help += "  model.<param>: learner hyperparameter, e.g. model.n_trees = 100 (repeatable --model.param k=v)\n";
  app.footer(keys_help);
  app.add_option("--model.param", overrides.model_params, "learner hyperparameter as key=value");

  // Short aliases for the most common keys.
  auto alias = [&](const std::string& flag, const std::string& key, const std::string& help) {
    app.add_option_function<std::string>(
        flag, [&overrides, key](const std::string& v) { overrides.shorthands.emplace_back(key, v); }, help);
  };
  alias("--scale", "synth.scale", "alias of --synth.scale");
  alias("--model", "model.kind", "alias of --model.kind");
  alias("--target-ratio", "selection.target_ratio", "alias of --selection.target_ratio");
  alias("--manifest", "io.manifest", "alias of --io.manifest");
  alias("--ngram", "ngram.sizes", "alias of --ngram.sizes");
  auto flag = [&](const std::string& name, const std::string& key, const std::string& value, const std::string& help) {
    app.add_flag_callback(name, [&overrides, key, value] { overrides.shorthands.emplace_back(key, value); }, help);
  };
  flag("--no-lexical", "selection.lexical", "", "disable lexical filtering");
  flag("--no-frequency", "selection.frequency", "false", "disable the document-frequency filter");
  flag("--no-mi", "selection.mi", "false", "disable the MI top-k cut");
  flag("--no-correlation", "selection.correlation", "false", "disable correlation pruning");
  flag("--select-on-all", "selection.on_all", "true", "fit selection on all rows");
  flag("--reset-at-process", "ngram.reset_at_process", "true", "keep n-grams within one process");
  flag("--partitions", "ingest.write_partitions", "true", "write the four per-sample element files");

  using Stage = std::function<std::string(const PipelineConfig&)>;
  const std::vector<std::tuple<std::string, std::string, Stage>> stages = {
      {"synth", "generate a synthetic Cuckoo-style corpus and its manifest", malclass::run_synth},
      {"ingest", "parse reports listed in the manifest", malclass::run_ingest},
      {"featurize", "n-grams, stratified split, vocabulary and TF-IDF matrices", malclass::run_featurize},
      {"select", "hybrid feature selection on the training matrix", malclass::run_select},
      {"train", "fit the configured model(s) on the refined features", malclass::run_train},
      {"evaluate", "score saved models on the test split", malclass::run_evaluate},
      {"pipeline", "run every stage in order", malclass::run_pipeline},
      {"print-config", "print the effective configuration", [](const PipelineConfig& c) {
         return malclass::config_to_text(c);
       }},
  };
  Stage selected;
  for (const auto& [name, help, stage] : stages) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->callback([&selected, stage = stage] { selected = stage; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    PipelineConfig config;
    if (overrides.config_file) malclass::apply_config_file(config, *overrides.config_file);
    for (const auto& key : malclass::config_keys()) {
      if (app.count("--" + key.name) > 0) malclass::set_config_value(config, key.name, overrides.keys[key.name]);
    }
    for (const auto& [key, value] : overrides.shorthands) malclass::set_config_value(config, key, value);
    for (const auto& kv : overrides.model_params) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw malclass::Error(malclass::ErrorCode::ConfigError, "--model.param expects key=value, got '" + kv + "'");
      malclass::set_config_value(config, "model." + kv.substr(0, eq), kv.substr(eq + 1));
    }
    config.validate();
    std::cout << selected(config) << std::endl;
    return 0;
  } catch (const malclass::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << std::endl;
    return 3;
  }
}
