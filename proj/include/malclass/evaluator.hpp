#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "malclass/labels.hpp"
#include "malclass/models.hpp"
#include "malclass/vectorizer.hpp"

namespace malclass {

struct SplitSpec {
  double train_ratio = 0.8;
  std::uint64_t seed = 42;
  bool stratified = true;

  void validate() const;  // throws Error(ConfigError)
};

struct SplitIndices {
  std::vector<std::size_t> train;  ///< ascending
  std::vector<std::size_t> test;   ///< ascending
};

/// Per class, round_half_up(train_ratio * m) samples (clamped to [1, m-1]) go to train after
/// a seeded shuffle; the rest go to test. Throws Error(ClassTooSmall) when a present class
/// has fewer than two samples.
SplitIndices stratified_split(std::span<const ClassLabel> labels, const SplitSpec& spec);

using ConfusionMatrix = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;  ///< [true][predicted]

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class Averaging { Macro, Weighted };

struct EvalReport {
  ConfusionMatrix confusion{};
  double accuracy = 0.0;
  std::array<ClassMetrics, kNumClasses> per_class{};
  ClassMetrics macro;
  ClassMetrics weighted;
  std::array<std::size_t, kNumClasses> support{};

  std::size_t total() const;
  const ClassMetrics& averaged(Averaging averaging) const { return averaging == Averaging::Macro ? macro : weighted; }
};

/// Derives every metric from the confusion counts. Undefined ratios (no predictions or no
/// support) are 0. Throws Error(EmptyTestSet) when the matrix is all zeros.
EvalReport report_from_confusion(const ConfusionMatrix& confusion);

/// Throws Error(EmptyTestSet) or Error(DimensionMismatch).
EvalReport evaluate(const TrainedModel& model, const FeatureMatrix& test);

/// `<name>,<accuracy>,<f1>,<recall>,<precision>` as percentages with two decimals.
std::string format_metrics_row(std::string_view classifier, double accuracy, double f1, double recall,
                               double precision);

/// `classifier,accuracy,f1,recall,precision`, one row per classifier.
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, EvalReport>>& results, Averaging averaging);

/// Header `label,<8 class names>`; one row per true class.
void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& confusion);
ConfusionMatrix read_confusion_csv(const std::filesystem::path& path);

/// Heatmap with one <rect class="cell"> per entry, shaded by row-normalized count, and the
/// class names on both axes (<text class="axis-label">).
std::string confusion_svg(const ConfusionMatrix& confusion, std::string_view title);
void write_confusion_svg(const std::filesystem::path& path, const ConfusionMatrix& confusion, std::string_view title);

}  // namespace malclass
