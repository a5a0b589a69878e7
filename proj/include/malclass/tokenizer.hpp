#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "malclass/labels.hpp"
#include "malclass/report.hpp"
#include "malclass/vocabulary.hpp"

namespace malclass {

inline constexpr std::size_t kDefaultMaxArgs = 2;
inline constexpr int kMaxNgram = 3;

/// API name followed by its arguments, joined with underscores ("LdrLoadDll_urlmon_urlmon.dll").
/// Calls without arguments end in "_na".
struct CanonicalToken {
  std::string text;

  bool operator==(const CanonicalToken&) const = default;
};

/// Whitespace becomes '-', ',' becomes ';' and control characters are dropped, so a token
/// never breaks the comma-joined n-gram form or a CSV field.
std::string sanitize_segment(std::string_view raw);

CanonicalToken canonical_token(const ApiCallRecord& call, std::size_t max_args = kDefaultMaxArgs);

/// Multiset of n-gram strings (tokens joined by ',') with their counts.
using NGramCounts = std::map<std::string, std::size_t, std::less<>>;

/// Sliding window of width n, stride 1. Throws Error(InvalidN) unless 1 <= n <= 3.
NGramCounts extract_ngrams(std::span<const CanonicalToken> tokens, int n);

std::string join_ngram(std::span<const CanonicalToken> tokens);
std::vector<CanonicalToken> split_ngram(std::string_view ngram);

/// A sample's bag of n-grams.
struct TokenDocument {
  std::string sample_id;
  ClassLabel label = ClassLabel::Benign;
  NGramCounts ngrams;

  /// Total n-gram occurrences (the TF denominator).
  std::size_t total() const;
};

struct TokenizeOptions {
  std::size_t max_args = kDefaultMaxArgs;
  /// When set, n-gram windows never span two processes of the same sample.
  bool reset_at_process = false;
};

std::vector<CanonicalToken> tokenize_calls(const BehaviorReport& report, std::size_t max_args = kDefaultMaxArgs);

/// Bag of n-grams for the given window sizes; several sizes are merged into one bag.
TokenDocument make_document(const BehaviorReport& report, std::span<const int> sizes,
                            const TokenizeOptions& options = {});

/// Distinct n-gram strings in lexicographic order with document frequencies.
/// Throws Error(EmptyCorpus).
Vocabulary build_vocabulary(std::span<const TokenDocument> corpus);

/// CSV `sample_id,label,ngram,count`, one row per (document, distinct n-gram).
void write_ngram_csv(const std::filesystem::path& path, std::span<const TokenDocument> corpus);
std::vector<TokenDocument> read_ngram_csv(const std::filesystem::path& path);

}  // namespace malclass
