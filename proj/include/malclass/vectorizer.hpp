#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "malclass/labels.hpp"
#include "malclass/tokenizer.hpp"
#include "malclass/vocabulary.hpp"

namespace malclass {

struct SparseEntry {
  std::size_t index = 0;
  double weight = 0.0;

  bool operator==(const SparseEntry&) const = default;
};

/// Entries sorted by strictly increasing index; zero weights are never stored.
using SparseRow = std::vector<SparseEntry>;

/// Row-major sparse matrix with one class label (and sample id) per row.
struct FeatureMatrix {
  std::vector<SparseRow> rows;
  std::vector<ClassLabel> labels;
  std::vector<std::string> sample_ids;
  std::size_t dim = 0;
  bool normalized = false;

  std::size_t n_rows() const noexcept { return rows.size(); }

  /// Throws Error(InvalidArgument) if indices are unsorted/out of range, a stored weight is
  /// zero, or labels/sample ids are misaligned.
  void validate() const;

  bool operator==(const FeatureMatrix&) const = default;
};

/// Relative term frequency count/total. Throws Error(EmptyDocument) when total is 0.
double tf(std::size_t term_count, std::size_t doc_total);

/// log10(n_docs / df), no smoothing. Throws Error(ZeroDf) when df is 0.
double idf(std::size_t df, std::size_t n_docs);

/// TF-IDF weights over `vocab`. N-grams missing from the vocabulary are dropped but still
/// count toward the document total. Throws Error(EmptyCorpus).
FeatureMatrix tfidf_matrix(std::span<const TokenDocument> corpus, const Vocabulary& vocab, bool l2);

/// Raw n-gram counts over `vocab`. Throws Error(EmptyCorpus).
FeatureMatrix frequency_matrix(std::span<const TokenDocument> corpus, const Vocabulary& vocab);

void l2_normalize(FeatureMatrix& matrix);

/// Keeps the listed columns (sorted, unique) and renumbers them 0..k-1.
FeatureMatrix select_columns(const FeatureMatrix& matrix, std::span<const std::size_t> kept);

/// Concatenates rows; both matrices must have the same dim.
FeatureMatrix stack_rows(const FeatureMatrix& top, const FeatureMatrix& bottom);

std::vector<double> densify(const SparseRow& row, std::size_t dim);

/// Column-major view of the non-zeros, used by split search and correlation.
struct ColumnIndex {
  struct Entry {
    std::size_t row;
    double value;
  };
  std::vector<std::vector<Entry>> columns;
};
ColumnIndex build_column_index(const FeatureMatrix& matrix);

/// Writes `row,col,weight` triplets and a `row,sample_id,label` sidecar.
void write_matrix(const std::filesystem::path& triplets, const std::filesystem::path& labels,
                  const FeatureMatrix& matrix);
FeatureMatrix read_matrix(const std::filesystem::path& triplets, const std::filesystem::path& labels,
                          std::size_t dim, bool normalized);

}  // namespace malclass
