#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "malclass/labels.hpp"
#include "malclass/vectorizer.hpp"
#include "malclass/vocabulary.hpp"

namespace malclass {

/// Rules applied to the argument segments of each token (never to the API name).
enum class LexicalRule {
  ContainsDigit,    ///< any 0-9
  ContainsSpecial,  ///< any character outside [A-Za-z0-9._-]
  HexAddress,       ///< 0x followed by hex digits
  PureNumeric,      ///< optional sign then decimal digits only
};

std::string_view rule_name(LexicalRule rule) noexcept;
LexicalRule parse_rule(std::string_view name);  // throws Error(ConfigError)

struct SelectionConfig {
  std::set<LexicalRule> lexical_filters = {LexicalRule::ContainsSpecial, LexicalRule::HexAddress,
                                           LexicalRule::PureNumeric};
  bool frequency_enabled = true;
  std::size_t min_df = 2;
  double max_df_ratio = 0.95;
  bool mi_enabled = true;
  double mi_top_ratio = 0.05;
  bool correlation_enabled = true;
  double corr_threshold = 0.95;
  double target_ratio = 0.016;

  /// Throws Error(ConfigError) when a knob is outside its legal range.
  void validate() const;

  /// Every stage off and no truncation.
  static SelectionConfig identity();

  bool operator==(const SelectionConfig&) const = default;
};

struct StageCount {
  std::string stage;
  std::size_t features_in = 0;
  std::size_t features_out = 0;

  bool operator==(const StageCount&) const = default;
};

struct SelectionMask {
  std::vector<std::size_t> kept;  ///< sorted original column indices
  std::vector<double> scores;     ///< MI score per original column (0 when never scored)
  std::vector<StageCount> provenance;

  bool operator==(const SelectionMask&) const = default;
};

SelectionMask identity_mask(std::size_t dim);

/// True when no argument segment of any token in `ngram` matches an enabled rule.
bool passes_lexical(std::string_view ngram, const std::set<LexicalRule>& rules);

/// Throws Error(AllFeaturesRemoved).
SelectionMask lexical_filter(const Vocabulary& vocab, const std::set<LexicalRule>& rules);

/// Keeps min_df <= df <= max_df_ratio * N, with df and N taken from the count matrix.
/// Throws Error(AllFeaturesRemoved).
SelectionMask frequency_filter(const FeatureMatrix& freq, const Vocabulary& vocab, std::size_t min_df,
                               double max_df_ratio);

/// Mutual information (nats) between presence of `feature` and the class label.
double mutual_information(const FeatureMatrix& matrix, std::span<const ClassLabel> labels, std::size_t feature);

/// MI for every column in one pass over the non-zeros.
std::vector<double> mutual_information_all(const FeatureMatrix& matrix, std::span<const ClassLabel> labels);

/// Pearson correlation of two columns over all rows (implicit zeros included); 0 if either
/// column is constant.
double pearson(const FeatureMatrix& matrix, std::size_t a, std::size_t b);

/// Greedy pass in descending score order (ties: lower index first). A candidate is dropped
/// when its correlation with an already kept column exceeds `threshold` (clamped to 1, at
/// which point only exact duplicates are dropped).
SelectionMask correlation_prune(const FeatureMatrix& matrix, const SelectionMask& candidates, double threshold);

/// lexical -> frequency -> MI top-k -> correlation -> truncate to max(1, floor(target_ratio * V)).
/// With target_ratio = 1 the MI and correlation stages are skipped.
/// Throws Error(AllFeaturesRemoved).
SelectionMask hybrid_select(const FeatureMatrix& tfidf, const FeatureMatrix& freq, const Vocabulary& vocab,
                            const SelectionConfig& config);

/// `stage,features_in,features_out`
void write_selection_report(const std::filesystem::path& path, const SelectionMask& mask);
/// `kept_index,ngram,mi_score`
void write_mask(const std::filesystem::path& path, const SelectionMask& mask, const Vocabulary& vocab);
std::vector<std::size_t> read_mask(const std::filesystem::path& path);

}  // namespace malclass
