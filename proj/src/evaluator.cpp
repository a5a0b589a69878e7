#include "malclass/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "malclass/csv.hpp"
#include "malclass/error.hpp"
#include "malclass/parallel.hpp"
#include "malclass/rng.hpp"

namespace malclass {

void SplitSpec::validate() const {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw Error(ErrorCode::ConfigError, "split.train_ratio must be in (0, 1)");
}

SplitIndices stratified_split(std::span<const ClassLabel> labels, const SplitSpec& spec) {
  spec.validate();
  SplitIndices split;
  auto take = [&](std::vector<std::size_t> members, std::uint64_t stream) {
    const std::size_t m = members.size();
    if (m == 0) return;
    if (m < 2) throw Error(ErrorCode::ClassTooSmall, "a class needs at least two samples to be split");
    Rng rng(derive_seed(spec.seed, stream));
    rng.shuffle(std::span<std::size_t>(members));
    auto n_train = static_cast<std::size_t>(std::floor(spec.train_ratio * static_cast<double>(m) + 0.5));
    n_train = std::clamp<std::size_t>(n_train, 1, m - 1);
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  };

  if (spec.stratified) {
    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[ordinal(labels[i])].push_back(i);
    for (std::size_t c = 0; c < kNumClasses; ++c) take(std::move(by_class[c]), c);
  } else {
    std::vector<std::size_t> all(labels.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    take(std::move(all), kNumClasses);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::size_t EvalReport::total() const {
  std::size_t n = 0;
  for (const auto& row : confusion) n += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return n;
}

EvalReport report_from_confusion(const ConfusionMatrix& confusion) {
  EvalReport report;
  report.confusion = confusion;
  const std::size_t total = report.total();
  if (total == 0) throw Error(ErrorCode::EmptyTestSet, "no test samples");

  std::size_t correct = 0;
  std::array<std::size_t, kNumClasses> predicted{};
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    correct += confusion[t][t];
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      report.support[t] += confusion[t][p];
      predicted[p] += confusion[t][p];
    }
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(total);

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& m = report.per_class[c];
    const double tp = static_cast<double>(confusion[c][c]);
    m.precision = predicted[c] ? tp / static_cast<double>(predicted[c]) : 0.0;
    m.recall = report.support[c] ? tp / static_cast<double>(report.support[c]) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;

    const double share = static_cast<double>(report.support[c]) / static_cast<double>(total);
    report.macro.precision += m.precision / kNumClasses;
    report.macro.recall += m.recall / kNumClasses;
    report.macro.f1 += m.f1 / kNumClasses;
    report.weighted.precision += m.precision * share;
    report.weighted.recall += m.recall * share;
    report.weighted.f1 += m.f1 * share;
  }
  return report;
}

EvalReport evaluate(const TrainedModel& model, const FeatureMatrix& test) {
  if (test.n_rows() == 0) throw Error(ErrorCode::EmptyTestSet, "no test samples");
  if (test.dim != model.dim)
    throw Error(ErrorCode::DimensionMismatch, "test matrix has " + std::to_string(test.dim) +
                                                  " columns, model expects " + std::to_string(model.dim));
  if (test.labels.size() != test.n_rows()) throw Error(ErrorCode::DimensionMismatch, "labels not aligned with rows");
  std::vector<ClassLabel> predictions(test.n_rows());
  parallel_for(test.n_rows(), [&](std::size_t r) { predictions[r] = model.predict(test.rows[r]); });
  ConfusionMatrix confusion{};
  for (std::size_t r = 0; r < test.n_rows(); ++r) ++confusion[ordinal(test.labels[r])][ordinal(predictions[r])];
  return report_from_confusion(confusion);
}

std::string format_metrics_row(std::string_view classifier, double accuracy, double f1, double recall,
                               double precision) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.2f,%.2f", 100.0 * accuracy, 100.0 * f1, 100.0 * recall,
                100.0 * precision);
  return csv::escape(classifier) + "," + buf;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, EvalReport>>& results, Averaging averaging) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "classifier,accuracy,f1,recall,precision\n";
  for (const auto& [name, report] : results) {
    const auto& m = report.averaged(averaging);
    out << format_metrics_row(name, report.accuracy, m.f1, m.recall, m.precision) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

namespace {

csv::Row confusion_header() {
  csv::Row header{"label"};
  for (auto l : kAllLabels) header.emplace_back(label_name(l));
  return header;
}

}  // namespace

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& confusion) {
  std::vector<csv::Row> rows;
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    csv::Row row{std::string(label_name(kAllLabels[t]))};
    for (std::size_t p = 0; p < kNumClasses; ++p) row.push_back(std::to_string(confusion[t][p]));
    rows.push_back(std::move(row));
  }
  csv::write_file(path, confusion_header(), rows);
}

ConfusionMatrix read_confusion_csv(const std::filesystem::path& path) {
  const auto table = csv::read_file(path, confusion_header());
  if (table.rows.size() != kNumClasses) throw Error(ErrorCode::IoFailure, "confusion matrix must have 8 rows");
  ConfusionMatrix confusion{};
  for (std::size_t t = 0; t < kNumClasses; ++t) {
    const auto& row = table.rows[t];
    if (row.size() != kNumClasses + 1 || row[0] != label_name(kAllLabels[t]))
      throw Error(ErrorCode::IoFailure, "malformed confusion row " + std::to_string(t));
    for (std::size_t p = 0; p < kNumClasses; ++p) confusion[t][p] = static_cast<std::size_t>(csv::parse_int(row[p + 1]));
  }
  return confusion;
}

std::string confusion_svg(const ConfusionMatrix& confusion, std::string_view title) {
  constexpr int kCell = 56;
  constexpr int kLeft = 110;
  constexpr int kTop = 120;
  constexpr int kSize = kLeft + kCell * static_cast<int>(kNumClasses) + 20;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize + 30
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<text class=\"title\" x=\"" << kSize / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
      << title << "</text>\n";
  svg << "<text class=\"axis-title\" x=\"" << kLeft + kCell * 4 << "\" y=\"40\" text-anchor=\"middle\">Predicted</text>\n";
  svg << "<text class=\"axis-title\" x=\"14\" y=\"" << kTop + kCell * 4
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << kTop + kCell * 4 << ")\">True</text>\n";

  for (std::size_t t = 0; t < kNumClasses; ++t) {
    const std::size_t row_total = std::accumulate(confusion[t].begin(), confusion[t].end(), std::size_t{0});
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      const double intensity = row_total ? static_cast<double>(confusion[t][p]) / static_cast<double>(row_total) : 0.0;
      // White to dark blue.
      const int r = static_cast<int>(std::lround(255.0 - intensity * (255.0 - 8.0)));
      const int g = static_cast<int>(std::lround(255.0 - intensity * (255.0 - 48.0)));
      const int b = static_cast<int>(std::lround(255.0 - intensity * (255.0 - 107.0)));
      const int x = kLeft + static_cast<int>(p) * kCell;
      const int y = kTop + static_cast<int>(t) * kCell;
      svg << "<rect class=\"cell\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell << "\" height=\"" << kCell
          << "\" fill=\"rgb(" << r << "," << g << "," << b << ")\" stroke=\"#999\" data-count=\"" << confusion[t][p]
          << "\"/>\n";
      svg << "<text class=\"count\" x=\"" << x + kCell / 2 << "\" y=\"" << y + kCell / 2 + 4
          << "\" text-anchor=\"middle\" fill=\"" << (intensity > 0.5 ? "white" : "black") << "\">" << confusion[t][p]
          << "</text>\n";
    }
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto name = label_name(kAllLabels[c]);
    const int along = static_cast<int>(c) * kCell + kCell / 2;
    svg << "<text class=\"axis-label\" x=\"" << kLeft - 6 << "\" y=\"" << kTop + along + 4
        << "\" text-anchor=\"end\">" << name << "</text>\n";
    svg << "<text class=\"axis-label\" x=\"" << kLeft + along << "\" y=\"" << kTop - 6
        << "\" text-anchor=\"start\" transform=\"rotate(-45 " << kLeft + along << " " << kTop - 6 << ")\">" << name
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_confusion_svg(const std::filesystem::path& path, const ConfusionMatrix& confusion, std::string_view title) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << confusion_svg(confusion, title);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace malclass
