#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "malclass/labels.hpp"
#include "malclass/tree.hpp"
#include "malclass/vectorizer.hpp"

namespace malclass {

enum class ModelKind {
  DecisionTree,
  RandomForest,
  GradientBoostedTrees,
  KNearestNeighbors,
  MultinomialNaiveBayes,
  LinearSVM,
};

inline constexpr std::array<ModelKind, 6> kAllModelKinds = {
    ModelKind::DecisionTree,      ModelKind::RandomForest,          ModelKind::GradientBoostedTrees,
    ModelKind::KNearestNeighbors, ModelKind::MultinomialNaiveBayes, ModelKind::LinearSVM,
};

/// snake_case identifier used in config files and model files ("random_forest").
std::string_view kind_name(ModelKind kind) noexcept;
/// Human-readable name used in metrics tables ("Random Forest").
std::string_view kind_display_name(ModelKind kind) noexcept;
/// Accepts kind_name values plus a few aliases ("rf", "gbt", "xgboost", "svm", ...).
/// Throws Error(ConfigError).
ModelKind parse_kind(std::string_view name);

struct ParamSpec {
  std::string_view key;
  double default_value;
  double min;
  double max;
  bool integer;
  std::string_view help;
};

std::span<const ParamSpec> param_specs(ModelKind kind);

/// Per-kind key/value settings plus the training seed.
struct HyperParams {
  std::map<std::string, double> values;
  std::uint64_t seed = 42;

  double get(std::string_view key) const;  // throws Error(ConfigError) for unknown keys

  bool operator==(const HyperParams&) const = default;
};

/// Defaults for `kind` with `overrides` applied. Throws Error(ConfigError) on unknown keys or
/// out-of-range values.
HyperParams make_params(ModelKind kind, const std::map<std::string, double>& overrides = {},
                        std::uint64_t seed = 42);

struct ClassDistribution {
  std::array<double, kNumClasses> probabilities{};

  ClassLabel argmax() const;
};

struct DecisionTreeModel {
  Tree tree;
};

struct RandomForestModel {
  std::vector<Tree> trees;
};

struct GradientBoostedModel {
  std::array<double, kNumClasses> base_score{};
  /// rounds[r][c] is the tree for class c in round r; its leaves are scaled by step[r].
  std::vector<std::vector<Tree>> rounds;
  std::vector<double> step;
  /// Mean training log-loss before the first round and after every round.
  std::vector<double> training_loss;
};

struct KNearestNeighborsModel {
  std::size_t k = 5;
  std::vector<SparseRow> rows;  ///< unit-normalized training rows (empty rows stay empty)
  std::vector<ClassLabel> labels;
};

struct NaiveBayesModel {
  std::array<double, kNumClasses> log_prior{};
  std::vector<std::vector<double>> log_likelihood;  ///< [class][feature]
};

struct LinearSvmModel {
  std::vector<std::vector<double>> weights;  ///< [class][feature]
  std::array<double, kNumClasses> bias{};
};

using ModelPayload = std::variant<DecisionTreeModel, RandomForestModel, GradientBoostedModel,
                                  KNearestNeighborsModel, NaiveBayesModel, LinearSvmModel>;

/// An immutable trained classifier over the fixed 8-class roster.
struct TrainedModel {
  ModelKind kind = ModelKind::DecisionTree;
  std::size_t dim = 0;
  HyperParams params;
  /// FNV-1a over the training rows and labels in order; pairs with params.seed.
  std::string data_fingerprint;
  std::size_t training_rows = 0;
  ModelPayload payload;

  /// Throws Error(DimensionMismatch) if the row references a column >= dim.
  ClassLabel predict(const SparseRow& row) const;
  /// Throws Error(Unsupported) for LinearSVM and Error(DimensionMismatch).
  ClassDistribution predict_proba(const SparseRow& row) const;
  /// One score per class: probabilities, or margins for LinearSVM.
  std::array<double, kNumClasses> decision_scores(const SparseRow& row) const;
};

/// Throws Error(DegenerateData) when rows are empty, dim is 0 or fewer than two classes are
/// present, and Error(NonFiniteInput) on NaN/inf weights.
TrainedModel train(ModelKind kind, const FeatureMatrix& matrix, const HyperParams& params);

std::string fingerprint(const FeatureMatrix& matrix);

inline constexpr int kModelFormatVersion = 1;

/// JSON container: {format_version, kind, dim, classes, hyperparams, seed, data_fingerprint,
/// training_rows, payload}. Throws Error(IoFailure).
void save_model(const TrainedModel& model, const std::filesystem::path& path);
/// Throws Error(VersionMismatch), Error(CorruptModel) or Error(MissingArtifact).
TrainedModel load_model(const std::filesystem::path& path);

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

}  // namespace malclass
