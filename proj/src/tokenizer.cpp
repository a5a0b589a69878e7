#include "malclass/tokenizer.hpp"

#include <algorithm>
#include <unordered_map>

#include "malclass/csv.hpp"
#include "malclass/error.hpp"

namespace malclass {

std::string sanitize_segment(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    const auto u = static_cast<unsigned char>(c);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      out.push_back('-');
    } else if (c == ',') {
      out.push_back(';');
    } else if (u < 0x20 || u == 0x7f) {
      continue;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

CanonicalToken canonical_token(const ApiCallRecord& call, std::size_t max_args) {
  CanonicalToken token{sanitize_segment(call.name)};
  const std::size_t used = std::min(max_args, call.arguments.size());
  if (used == 0) {
    token.text += "_na";
    return token;
  }
  for (std::size_t i = 0; i < used; ++i) {
    auto segment = sanitize_segment(call.arguments[i]);
    token.text.push_back('_');
    token.text += segment.empty() ? std::string("na") : segment;
  }
  return token;
}

std::string join_ngram(std::span<const CanonicalToken> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(',');
    out += tokens[i].text;
  }
  return out;
}

std::vector<CanonicalToken> split_ngram(std::string_view ngram) {
  std::vector<CanonicalToken> tokens;
  std::size_t start = 0;
  while (true) {
    const auto comma = ngram.find(',', start);
    tokens.push_back({std::string(ngram.substr(start, comma - start))});
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return tokens;
}

NGramCounts extract_ngrams(std::span<const CanonicalToken> tokens, int n) {
  if (n < 1 || n > kMaxNgram) throw Error(ErrorCode::InvalidN, "n-gram size " + std::to_string(n));
  NGramCounts counts;
  const auto width = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + width <= tokens.size(); ++i) ++counts[join_ngram(tokens.subspan(i, width))];
  return counts;
}

std::size_t TokenDocument::total() const {
  std::size_t sum = 0;
  for (const auto& [_, count] : ngrams) sum += count;
  return sum;
}

std::vector<CanonicalToken> tokenize_calls(const BehaviorReport& report, std::size_t max_args) {
  std::vector<CanonicalToken> tokens;
  tokens.reserve(report.calls.size());
  for (const auto& call : report.calls) tokens.push_back(canonical_token(call, max_args));
  return tokens;
}

TokenDocument make_document(const BehaviorReport& report, std::span<const int> sizes,
                            const TokenizeOptions& options) {
  const auto tokens = tokenize_calls(report, options.max_args);
  std::vector<std::span<const CanonicalToken>> segments;
  if (options.reset_at_process && !report.process_starts.empty()) {
    for (std::size_t p = 0; p < report.process_starts.size(); ++p) {
      const auto begin = report.process_starts[p];
      const auto end = p + 1 < report.process_starts.size() ? report.process_starts[p + 1] : tokens.size();
      segments.emplace_back(tokens.data() + begin, end - begin);
    }
  } else {
    segments.emplace_back(tokens);
  }

  TokenDocument doc{report.sample_id, report.label, {}};
  for (int n : sizes) {
    for (const auto& segment : segments) {
      for (auto& [gram, count] : extract_ngrams(segment, n)) doc.ngrams[gram] += count;
    }
  }
  return doc;
}

Vocabulary build_vocabulary(std::span<const TokenDocument> corpus) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot build a vocabulary from zero documents");
  std::unordered_map<std::string_view, std::size_t> df;
  for (const auto& doc : corpus) {
    for (const auto& [gram, count] : doc.ngrams) {
      if (count > 0) ++df[gram];
    }
  }
  std::vector<std::string_view> keys;
  keys.reserve(df.size());
  for (const auto& [gram, _] : df) keys.push_back(gram);
  std::sort(keys.begin(), keys.end());

  std::vector<std::string> terms;
  std::vector<std::size_t> freqs;
  terms.reserve(keys.size());
  freqs.reserve(keys.size());
  for (auto key : keys) {
    terms.emplace_back(key);
    freqs.push_back(df[key]);
  }
  return Vocabulary(std::move(terms), std::move(freqs), corpus.size());
}

void write_ngram_csv(const std::filesystem::path& path, std::span<const TokenDocument> corpus) {
  std::vector<csv::Row> rows;
  for (const auto& doc : corpus) {
    for (const auto& [gram, count] : doc.ngrams)
      rows.push_back({doc.sample_id, std::string(label_name(doc.label)), gram, std::to_string(count)});
  }
  csv::write_file(path, {"sample_id", "label", "ngram", "count"}, rows);
}

std::vector<TokenDocument> read_ngram_csv(const std::filesystem::path& path) {
  const auto table = csv::read_file(path, {"sample_id", "label", "ngram", "count"});
  std::vector<TokenDocument> docs;
  std::unordered_map<std::string, std::size_t> position;
  for (const auto& row : table.rows) {
    if (row.size() != 4) throw Error(ErrorCode::IoFailure, "bad n-gram row in " + path.string());
    const auto label = parse_label(row[1]);
    if (!label) throw Error(ErrorCode::IoFailure, "unknown label '" + row[1] + "'");
    auto [it, inserted] = position.try_emplace(row[0], docs.size());
    if (inserted) docs.push_back({row[0], *label, {}});
    docs[it->second].ngrams[row[2]] += static_cast<std::size_t>(csv::parse_int(row[3]));
  }
  return docs;
}

}  // namespace malclass
