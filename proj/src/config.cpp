#include "malclass/config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "malclass/csv.hpp"
#include "malclass/error.hpp"
#include "malclass/report.hpp"

namespace malclass {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw Error(ErrorCode::ConfigError, key + ": expected a boolean, got '" + value + "'");
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    return csv::parse_double(value);
  } catch (const Error&) {
    throw Error(ErrorCode::ConfigError, key + ": expected a number, got '" + value + "'");
  }
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || end != value.data() + value.size())
    throw Error(ErrorCode::ConfigError, key + ": expected a non-negative integer, got '" + value + "'");
  return v;
}

std::string bool_text(bool v) { return v ? "true" : "false"; }

std::string real_text(double v) { return csv::format_double(v); }

ConfigKey boolean(std::string name, std::string help, bool PipelineConfig::*field) {
  return {name, std::move(help), [field](const PipelineConfig& c) { return bool_text(c.*field); },
          [field, name](PipelineConfig& c, const std::string& v) { c.*field = parse_bool(name, v); }};
}

template <typename Getter, typename Setter>
ConfigKey key(std::string name, std::string help, Getter get, Setter set) {
  return {std::move(name), std::move(help), get, set};
}

}  // namespace

std::filesystem::path PipelineConfig::manifest_path() const {
  return manifest.empty() ? workdir / "corpus" / "manifest.csv" : manifest;
}

SplitSpec PipelineConfig::split_spec() const { return {train_ratio, derive_seed(seed, 2), stratified}; }

HyperParams PipelineConfig::params_for(ModelKind kind) const {
  std::map<std::string, double> applicable;
  const auto specs = param_specs(kind);
  for (const auto& [k, v] : model_params) {
    if (std::any_of(specs.begin(), specs.end(), [&](const ParamSpec& s) { return s.key == k; })) applicable[k] = v;
  }
  return make_params(kind, applicable, derive_seed(seed, 3));
}

void PipelineConfig::validate() const {
  if (ngram_sizes.empty()) throw Error(ErrorCode::ConfigError, "ngram.sizes is empty");
  for (int n : ngram_sizes) {
    if (n < 1 || n > 3) throw Error(ErrorCode::ConfigError, "ngram.sizes entries must be 1, 2 or 3");
  }
  if (ngram_sizes.size() > 1 && !ngram_combined)
    throw Error(ErrorCode::ConfigError, "several ngram.sizes need ngram.combined = true for a single feature space");
  if (models.empty()) throw Error(ErrorCode::ConfigError, "model.kind selects no model");
  selection.validate();
  split_spec().validate();
  for (const auto& [k, v] : model_params) {
    bool known = false;
    for (auto kind : kAllModelKinds) {
      const auto specs = param_specs(kind);
      if (std::any_of(specs.begin(), specs.end(), [&](const ParamSpec& s) { return s.key == k; })) {
        known = true;
        if (std::find(models.begin(), models.end(), kind) != models.end()) make_params(kind, {{k, v}});
      }
    }
    if (!known) throw Error(ErrorCode::ConfigError, "unknown model parameter 'model." + k + "'");
  }
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    k.push_back(key("workdir", "directory holding every stage artifact",
                    [](const PipelineConfig& c) { return c.workdir.generic_string(); },
                    [](PipelineConfig& c, const std::string& v) { c.workdir = v; }));
    k.push_back(key("io.manifest", "corpus manifest (sample_id,label,path); empty = <workdir>/corpus/manifest.csv",
                    [](const PipelineConfig& c) { return c.manifest.generic_string(); },
                    [](PipelineConfig& c, const std::string& v) { c.manifest = v; }));
    k.push_back(key("seed", "master seed; every random choice derives from it",
                    [](const PipelineConfig& c) { return std::to_string(c.seed); },
                    [](PipelineConfig& c, const std::string& v) { c.seed = parse_count("seed", v); }));
    k.push_back(key("threads", "worker threads (0 = all cores)",
                    [](const PipelineConfig& c) { return std::to_string(c.threads); },
                    [](PipelineConfig& c, const std::string& v) { c.threads = parse_count("threads", v); }));
    k.push_back(key("synth.scale", "synthetic corpus size: tiny (8x20) or desk (8x100)",
                    [](const PipelineConfig& c) { return std::string(c.scale == CorpusScale::Tiny ? "tiny" : "desk"); },
                    [](PipelineConfig& c, const std::string& v) { c.scale = parse_scale(v); }));
    k.push_back(boolean("ingest.write_partitions", "also write per-sample category/name/argument/return text files",
                        &PipelineConfig::write_partitions));
    k.push_back(key("ngram.sizes", "comma-separated n-gram sizes (1-3)",
                    [](const PipelineConfig& c) {
                      std::string out;
                      for (std::size_t i = 0; i < c.ngram_sizes.size(); ++i)
                        out += (i ? "," : "") + std::to_string(c.ngram_sizes[i]);
                      return out;
                    },
                    [](PipelineConfig& c, const std::string& v) {
                      c.ngram_sizes.clear();
                      for (const auto& item : split_list(v))
                        c.ngram_sizes.push_back(static_cast<int>(parse_count("ngram.sizes", item)));
                    }));
    k.push_back(boolean("ngram.combined", "merge all n-gram sizes into one vocabulary", &PipelineConfig::ngram_combined));
    k.push_back(key("ngram.max_args", "arguments kept per token",
                    [](const PipelineConfig& c) { return std::to_string(c.max_args); },
                    [](PipelineConfig& c, const std::string& v) { c.max_args = parse_count("ngram.max_args", v); }));
    k.push_back(boolean("ngram.reset_at_process", "do not let n-gram windows cross process boundaries",
                        &PipelineConfig::reset_at_process));
    k.push_back(boolean("vectorizer.l2", "L2-normalize TF-IDF rows", &PipelineConfig::l2));
    k.push_back(key("selection.lexical", "comma-separated lexical rules (digit, special, hex, numeric); empty disables",
                    [](const PipelineConfig& c) {
                      std::string out;
                      for (auto rule : c.selection.lexical_filters) out += (out.empty() ? "" : ",") + std::string(rule_name(rule));
                      return out;
                    },
                    [](PipelineConfig& c, const std::string& v) {
                      c.selection.lexical_filters.clear();
                      for (const auto& item : split_list(v)) c.selection.lexical_filters.insert(parse_rule(item));
                    }));
    k.push_back(key("selection.frequency", "enable the document-frequency filter",
                    [](const PipelineConfig& c) { return bool_text(c.selection.frequency_enabled); },
                    [](PipelineConfig& c, const std::string& v) { c.selection.frequency_enabled = parse_bool("selection.frequency", v); }));
    k.push_back(key("selection.min_df", "minimum document frequency",
                    [](const PipelineConfig& c) { return std::to_string(c.selection.min_df); },
                    [](PipelineConfig& c, const std::string& v) { c.selection.min_df = parse_count("selection.min_df", v); }));
    k.push_back(key("selection.max_df_ratio", "maximum document frequency as a fraction of documents",
                    [](const PipelineConfig& c) { return real_text(c.selection.max_df_ratio); },
                    [](PipelineConfig& c, const std::string& v) { c.selection.max_df_ratio = parse_real("selection.max_df_ratio", v); }));
    k.push_back(key("selection.mi", "enable the mutual-information top-k cut",
                    [](const PipelineConfig& c) { return bool_text(c.selection.mi_enabled); },
                    [](PipelineConfig& c, const std::string& v) { c.selection.mi_enabled = parse_bool("selection.mi", v); }));
    k.push_back(key("selection.mi_top_ratio", "fraction of the vocabulary kept by MI ranking",
                    [](const PipelineConfig& c) { return real_text(c.selection.mi_top_ratio); },
                    [](PipelineConfig& c, const std::string& v) { c.selection.mi_top_ratio = parse_real("selection.mi_top_ratio", v); }));
    k.push_back(key("selection.correlation", "enable correlation pruning",
                    [](const PipelineConfig& c) { return bool_text(c.selection.correlation_enabled); },
                    [](PipelineConfig& c, const std::string& v) { c.selection.correlation_enabled = parse_bool("selection.correlation", v); }));
    k.push_back(key("selection.corr_threshold", "Pearson correlation above which a feature is redundant",
                    [](const PipelineConfig& c) { return real_text(c.selection.corr_threshold); },
                    [](PipelineConfig& c, const std::string& v) { c.selection.corr_threshold = parse_real("selection.corr_threshold", v); }));
    k.push_back(key("selection.target_ratio", "final fraction of the vocabulary retained",
                    [](const PipelineConfig& c) { return real_text(c.selection.target_ratio); },
                    [](PipelineConfig& c, const std::string& v) { c.selection.target_ratio = parse_real("selection.target_ratio", v); }));
    k.push_back(boolean("selection.on_all", "fit selection on train and test rows together", &PipelineConfig::select_on_all));
    k.push_back(key("model.kind", "comma-separated model kinds, or 'all'",
                    [](const PipelineConfig& c) {
                      std::string out;
                      for (auto kind : c.models) out += (out.empty() ? "" : ",") + std::string(kind_name(kind));
                      return out;
                    },
                    [](PipelineConfig& c, const std::string& v) {
                      c.models.clear();
                      if (trim(v) == "all") {
                        c.models.assign(kAllModelKinds.begin(), kAllModelKinds.end());
                        return;
                      }
                      for (const auto& item : split_list(v)) {
                        const auto kind = parse_kind(item);
                        if (std::find(c.models.begin(), c.models.end(), kind) == c.models.end()) c.models.push_back(kind);
                      }
                    }));
    k.push_back(key("split.train_ratio", "fraction of each class used for training",
                    [](const PipelineConfig& c) { return real_text(c.train_ratio); },
                    [](PipelineConfig& c, const std::string& v) { c.train_ratio = parse_real("split.train_ratio", v); }));
    k.push_back(boolean("split.stratified", "split each class separately", &PipelineConfig::stratified));
    k.push_back(key("eval.averaging", "macro or weighted averaging of precision/recall/F1",
                    [](const PipelineConfig& c) { return std::string(c.averaging == Averaging::Macro ? "macro" : "weighted"); },
                    [](PipelineConfig& c, const std::string& v) {
                      if (v == "macro") c.averaging = Averaging::Macro;
                      else if (v == "weighted") c.averaging = Averaging::Weighted;
                      else throw Error(ErrorCode::ConfigError, "eval.averaging must be macro or weighted");
                    }));
    return k;
  }();
  return keys;
}

void set_config_value(PipelineConfig& config, const std::string& name, const std::string& value) {
  for (const auto& k : config_keys()) {
    if (k.name == name) {
      k.set(config, trim(value));
      return;
    }
  }
  constexpr std::string_view kModelPrefix = "model.";
  if (name.starts_with(kModelPrefix) && name.size() > kModelPrefix.size()) {
    config.model_params[name.substr(kModelPrefix.size())] = parse_real(name, trim(value));
    return;
  }
  throw Error(ErrorCode::ConfigError, "unknown config key '" + name + "'");
}

void apply_config_text(PipelineConfig& config, const std::string& text) {
  std::stringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(number) + ": expected 'key = value'");
    set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void apply_config_file(PipelineConfig& config, const std::filesystem::path& path) {
  apply_config_text(config, read_text_file(path));
}

std::string config_to_text(const PipelineConfig& config) {
  std::string out;
  for (const auto& k : config_keys()) out += k.name + " = " + k.get(config) + "\n";
  for (const auto& [name, value] : config.model_params) out += "model." + name + " = " + real_text(value) + "\n";
  return out;
}

}  // namespace malclass
