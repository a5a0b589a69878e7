#include "malclass/vocabulary.hpp"

#include "malclass/csv.hpp"
#include "malclass/error.hpp"

namespace malclass {

Vocabulary::Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> df, std::size_t n_docs)
    : terms_(std::move(terms)), df_(std::move(df)), n_docs_(n_docs) {
  if (terms_.size() != df_.size()) throw Error(ErrorCode::InvalidArgument, "vocabulary terms/df length mismatch");
  if (n_docs_ == 0) throw Error(ErrorCode::InvalidArgument, "vocabulary over zero documents");
  index_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (i > 0 && !(terms_[i - 1] < terms_[i]))
      throw Error(ErrorCode::InvalidArgument, "vocabulary terms not strictly increasing at " + terms_[i]);
    if (df_[i] < 1 || df_[i] > n_docs_)
      throw Error(ErrorCode::InvalidArgument, "document frequency out of range for " + terms_[i]);
    index_.emplace(terms_[i], i);
  }
}

std::optional<std::size_t> Vocabulary::find(std::string_view term) const {
  if (auto it = index_.find(term); it != index_.end()) return it->second;
  return std::nullopt;
}

void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::vector<csv::Row> rows;
  rows.reserve(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i)
    rows.push_back({std::to_string(i), vocab.term(i), std::to_string(vocab.df(i))});
  csv::write_file(path, {"index", "ngram", "df"}, rows);
}

Vocabulary read_vocabulary(const std::filesystem::path& path, std::size_t n_docs) {
  const auto table = csv::read_file(path, {"index", "ngram", "df"});
  std::vector<std::string> terms;
  std::vector<std::size_t> df;
  for (const auto& row : table.rows) {
    if (row.size() != 3) throw Error(ErrorCode::IoFailure, "bad vocabulary row in " + path.string());
    if (static_cast<std::size_t>(csv::parse_int(row[0])) != terms.size())
      throw Error(ErrorCode::IoFailure, "vocabulary indices not dense in " + path.string());
    terms.push_back(row[1]);
    df.push_back(static_cast<std::size_t>(csv::parse_int(row[2])));
  }
  return Vocabulary(std::move(terms), std::move(df), n_docs);
}

}  // namespace malclass
