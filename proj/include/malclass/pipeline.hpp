#pragma once

#include <filesystem>
#include <string>

#include "malclass/config.hpp"

namespace malclass {

/// Artifact locations under the work directory.
struct ArtifactPaths {
  std::filesystem::path root;

  std::filesystem::path corpus_dir() const { return root / "corpus"; }
  std::filesystem::path ingest_dir() const { return root / "ingest"; }
  std::filesystem::path reports_jsonl() const { return ingest_dir() / "reports.jsonl"; }
  std::filesystem::path partitions_dir() const { return ingest_dir() / "partitions"; }
  std::filesystem::path features_dir() const { return root / "features"; }
  std::filesystem::path ngram_csv(int n) const { return features_dir() / ("ngrams_" + std::to_string(n) + ".csv"); }
  std::filesystem::path split_csv() const { return features_dir() / "split.csv"; }
  std::filesystem::path vocabulary_csv() const { return features_dir() / "vocabulary.csv"; }
  std::filesystem::path meta_csv() const { return features_dir() / "meta.csv"; }
  std::filesystem::path matrix_csv(const std::string& part, const std::string& kind) const {
    return features_dir() / (part + "." + kind + ".csv");
  }
  std::filesystem::path labels_csv(const std::string& part) const { return features_dir() / (part + ".labels.csv"); }
  std::filesystem::path selection_dir() const { return root / "selection"; }
  std::filesystem::path selection_report() const { return selection_dir() / "report.csv"; }
  std::filesystem::path mask_csv() const { return selection_dir() / "mask.csv"; }
  std::filesystem::path models_dir() const { return root / "models"; }
  std::filesystem::path model_file(const std::string& kind) const { return models_dir() / (kind + ".json"); }
  std::filesystem::path eval_dir() const { return root / "eval"; }
  std::filesystem::path metrics_csv() const { return eval_dir() / "metrics.csv"; }
};

/// Each stage reads its inputs from the work directory, writes its outputs there and
/// returns a one-line summary. Missing inputs raise Error(MissingArtifact).
std::string run_synth(const PipelineConfig& config);
std::string run_ingest(const PipelineConfig& config);
std::string run_featurize(const PipelineConfig& config);
std::string run_select(const PipelineConfig& config);
std::string run_train(const PipelineConfig& config);
std::string run_evaluate(const PipelineConfig& config);

/// synth (only when io.manifest is unset) -> ingest -> featurize -> select -> train -> evaluate.
std::string run_pipeline(const PipelineConfig& config);

}  // namespace malclass
