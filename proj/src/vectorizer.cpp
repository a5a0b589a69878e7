#include "malclass/vectorizer.hpp"

#include <cmath>

#include "malclass/csv.hpp"
#include "malclass/error.hpp"
#include "malclass/parallel.hpp"

namespace malclass {

void FeatureMatrix::validate() const {
  if (labels.size() != rows.size()) throw Error(ErrorCode::InvalidArgument, "labels not aligned with rows");
  if (!sample_ids.empty() && sample_ids.size() != rows.size())
    throw Error(ErrorCode::InvalidArgument, "sample ids not aligned with rows");
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k].index >= dim) throw Error(ErrorCode::InvalidArgument, "column index out of range");
      if (k > 0 && row[k - 1].index >= row[k].index)
        throw Error(ErrorCode::InvalidArgument, "row indices not strictly increasing");
      if (row[k].weight == 0.0) throw Error(ErrorCode::InvalidArgument, "explicit zero stored");
    }
  }
}

double tf(std::size_t term_count, std::size_t doc_total) {
  if (doc_total == 0) throw Error(ErrorCode::EmptyDocument, "document has no terms");
  return static_cast<double>(term_count) / static_cast<double>(doc_total);
}

double idf(std::size_t df, std::size_t n_docs) {
  if (df == 0) throw Error(ErrorCode::ZeroDf, "term does not occur in the corpus");
  return std::log10(static_cast<double>(n_docs) / static_cast<double>(df));
}

namespace {

template <typename Weight>
FeatureMatrix build_rows(std::span<const TokenDocument> corpus, const Vocabulary& vocab, Weight&& weight) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "no documents to vectorize");
  FeatureMatrix matrix;
  matrix.dim = vocab.size();
  matrix.rows.resize(corpus.size());
  matrix.labels.reserve(corpus.size());
  matrix.sample_ids.reserve(corpus.size());
  for (const auto& doc : corpus) {
    matrix.labels.push_back(doc.label);
    matrix.sample_ids.push_back(doc.sample_id);
  }
  parallel_for(corpus.size(), [&](std::size_t d) {
    const auto& doc = corpus[d];
    const std::size_t total = doc.total();
    SparseRow row;
    // ngrams iterate lexicographically, which is also vocabulary index order.
    for (const auto& [gram, count] : doc.ngrams) {
      const auto index = vocab.find(gram);
      if (!index || count == 0) continue;
      const double w = weight(count, total, *index);
      if (w != 0.0) row.push_back({*index, w});
    }
    matrix.rows[d] = std::move(row);
  });
  return matrix;
}

}  // namespace

FeatureMatrix tfidf_matrix(std::span<const TokenDocument> corpus, const Vocabulary& vocab, bool l2) {
  std::vector<double> idf_by_index(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) idf_by_index[i] = idf(vocab.df(i), vocab.n_docs());
  auto matrix = build_rows(corpus, vocab, [&](std::size_t count, std::size_t total, std::size_t index) {
    return tf(count, total) * idf_by_index[index];
  });
  if (l2) l2_normalize(matrix);
  return matrix;
}

FeatureMatrix frequency_matrix(std::span<const TokenDocument> corpus, const Vocabulary& vocab) {
  return build_rows(corpus, vocab,
                    [](std::size_t count, std::size_t, std::size_t) { return static_cast<double>(count); });
}

void l2_normalize(FeatureMatrix& matrix) {
  for (auto& row : matrix.rows) {
    double sum = 0.0;
    for (const auto& e : row) sum += e.weight * e.weight;
    if (sum == 0.0) continue;
    const double norm = std::sqrt(sum);
    for (auto& e : row) e.weight /= norm;
  }
  matrix.normalized = true;
}

FeatureMatrix select_columns(const FeatureMatrix& matrix, std::span<const std::size_t> kept) {
  constexpr std::size_t kDropped = static_cast<std::size_t>(-1);
  std::vector<std::size_t> remap(matrix.dim, kDropped);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (kept[k] >= matrix.dim || (k > 0 && kept[k - 1] >= kept[k]))
      throw Error(ErrorCode::InvalidArgument, "column selection must be sorted, unique and in range");
    remap[kept[k]] = k;
  }
  FeatureMatrix out;
  out.dim = kept.size();
  out.labels = matrix.labels;
  out.sample_ids = matrix.sample_ids;
  out.normalized = false;
  out.rows.reserve(matrix.rows.size());
  for (const auto& row : matrix.rows) {
    SparseRow projected;
    for (const auto& e : row) {
      if (remap[e.index] != kDropped) projected.push_back({remap[e.index], e.weight});
    }
    out.rows.push_back(std::move(projected));
  }
  return out;
}

FeatureMatrix stack_rows(const FeatureMatrix& top, const FeatureMatrix& bottom) {
  if (top.dim != bottom.dim) throw Error(ErrorCode::DimensionMismatch, "cannot stack matrices of different width");
  FeatureMatrix out = top;
  out.rows.insert(out.rows.end(), bottom.rows.begin(), bottom.rows.end());
  out.labels.insert(out.labels.end(), bottom.labels.begin(), bottom.labels.end());
  if (!top.sample_ids.empty() && !bottom.sample_ids.empty())
    out.sample_ids.insert(out.sample_ids.end(), bottom.sample_ids.begin(), bottom.sample_ids.end());
  else
    out.sample_ids.clear();
  out.normalized = top.normalized && bottom.normalized;
  return out;
}

std::vector<double> densify(const SparseRow& row, std::size_t dim) {
  std::vector<double> dense(dim, 0.0);
  for (const auto& e : row) dense.at(e.index) = e.weight;
  return dense;
}

ColumnIndex build_column_index(const FeatureMatrix& matrix) {
  ColumnIndex index;
  index.columns.resize(matrix.dim);
  for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
    for (const auto& e : matrix.rows[r]) index.columns[e.index].push_back({r, e.weight});
  }
  return index;
}

void write_matrix(const std::filesystem::path& triplets, const std::filesystem::path& labels,
                  const FeatureMatrix& matrix) {
  std::vector<csv::Row> cells;
  std::vector<csv::Row> label_rows;
  for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
    for (const auto& e : matrix.rows[r])
      cells.push_back({std::to_string(r), std::to_string(e.index), csv::format_double(e.weight)});
    label_rows.push_back({std::to_string(r), matrix.sample_ids.empty() ? std::to_string(r) : matrix.sample_ids[r],
                          std::string(label_name(matrix.labels[r]))});
  }
  csv::write_file(triplets, {"row", "col", "weight"}, cells);
  csv::write_file(labels, {"row", "sample_id", "label"}, label_rows);
}

FeatureMatrix read_matrix(const std::filesystem::path& triplets, const std::filesystem::path& labels,
                          std::size_t dim, bool normalized) {
  const auto label_table = csv::read_file(labels, {"row", "sample_id", "label"});
  FeatureMatrix matrix;
  matrix.dim = dim;
  matrix.normalized = normalized;
  for (const auto& row : label_table.rows) {
    if (row.size() != 3 || static_cast<std::size_t>(csv::parse_int(row[0])) != matrix.labels.size())
      throw Error(ErrorCode::IoFailure, "bad label row in " + labels.string());
    const auto label = parse_label(row[2]);
    if (!label) throw Error(ErrorCode::IoFailure, "unknown label '" + row[2] + "'");
    matrix.sample_ids.push_back(row[1]);
    matrix.labels.push_back(*label);
  }
  matrix.rows.resize(matrix.labels.size());
  const auto cell_table = csv::read_file(triplets, {"row", "col", "weight"});
  for (const auto& cell : cell_table.rows) {
    if (cell.size() != 3) throw Error(ErrorCode::IoFailure, "bad triplet in " + triplets.string());
    const auto r = static_cast<std::size_t>(csv::parse_int(cell[0]));
    if (r >= matrix.rows.size()) throw Error(ErrorCode::IoFailure, "triplet row out of range");
    matrix.rows[r].push_back({static_cast<std::size_t>(csv::parse_int(cell[1])), csv::parse_double(cell[2])});
  }
  try {
    matrix.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::IoFailure, std::string("inconsistent matrix file: ") + e.what());
  }
  return matrix;
}

}  // namespace malclass
