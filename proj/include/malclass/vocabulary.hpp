#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace malclass {

/// Bijection between n-gram strings and dense column indices, with document frequencies.
/// Immutable once built; indices follow lexicographic order of the n-gram strings.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Validates sortedness, uniqueness and 1 <= df <= n_docs. Throws Error(InvalidArgument).
  Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> df, std::size_t n_docs);

  std::size_t size() const noexcept { return terms_.size(); }
  std::size_t n_docs() const noexcept { return n_docs_; }
  const std::string& term(std::size_t index) const { return terms_.at(index); }
  std::size_t df(std::size_t index) const { return df_.at(index); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }

  std::optional<std::size_t> find(std::string_view term) const;

  bool operator==(const Vocabulary& other) const {
    return terms_ == other.terms_ && df_ == other.df_ && n_docs_ == other.n_docs_;
  }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };

  std::vector<std::string> terms_;
  std::vector<std::size_t> df_;
  std::size_t n_docs_ = 0;
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
};

/// CSV `index,ngram,df`. The document count is not part of the file and is passed back in.
void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary read_vocabulary(const std::filesystem::path& path, std::size_t n_docs);

}  // namespace malclass
