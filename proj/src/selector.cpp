#include "malclass/selector.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>

#include "malclass/csv.hpp"
#include "malclass/error.hpp"
#include "malclass/parallel.hpp"
#include "malclass/tokenizer.hpp"

namespace malclass {

namespace {

constexpr double kDuplicateTolerance = 1e-12;

std::size_t ceil_count(double ratio, std::size_t total) {
  // Guard against 0.016 * 1000 landing a hair above 16.
  return static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(total) - 1e-9));
}

std::size_t floor_count(double ratio, std::size_t total) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(total) + 1e-9));
}

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool matches(std::string_view segment, LexicalRule rule) {
  switch (rule) {
    case LexicalRule::ContainsDigit:
      return std::any_of(segment.begin(), segment.end(), is_digit);
    case LexicalRule::ContainsSpecial:
      return std::any_of(segment.begin(), segment.end(), [](char c) {
        return !(is_alpha(c) || is_digit(c) || c == '.' || c == '_' || c == '-');
      });
    case LexicalRule::HexAddress:
      return segment.size() > 2 && segment[0] == '0' && (segment[1] == 'x' || segment[1] == 'X') &&
             std::all_of(segment.begin() + 2, segment.end(),
                         [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; });
    case LexicalRule::PureNumeric: {
      auto digits = segment;
      if (!digits.empty() && (digits[0] == '-' || digits[0] == '+')) digits.remove_prefix(1);
      return !digits.empty() && std::all_of(digits.begin(), digits.end(), is_digit);
    }
  }
  return false;
}

void keep_if(std::vector<std::size_t>& kept, auto&& predicate) {
  std::erase_if(kept, [&](std::size_t i) { return !predicate(i); });
}

/// Sorted by descending score, ties by ascending index.
std::vector<std::size_t> rank_by_score(std::span<const std::size_t> candidates, std::span<const double> scores) {
  std::vector<std::size_t> order(candidates.begin(), candidates.end());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return order;
}

void require_nonempty(const std::vector<std::size_t>& kept, std::string_view stage) {
  if (kept.empty()) throw Error(ErrorCode::AllFeaturesRemoved, std::string(stage) + " removed every feature");
}

struct ColumnMoments {
  double mean = 0.0;
  double centered_ss = 0.0;  // sum of squared deviations
};

ColumnMoments moments(const std::vector<ColumnIndex::Entry>& column, std::size_t n_rows) {
  ColumnMoments m;
  double sum = 0.0;
  for (const auto& e : column) sum += e.value;
  m.mean = sum / static_cast<double>(n_rows);
  double ss = 0.0;
  for (const auto& e : column) ss += (e.value - m.mean) * (e.value - m.mean);
  ss += static_cast<double>(n_rows - column.size()) * m.mean * m.mean;
  m.centered_ss = ss;
  return m;
}

/// Pearson r given one column scattered densely and the other sparse.
double correlation(std::span<const double> dense_a, const ColumnMoments& ma,
                   const std::vector<ColumnIndex::Entry>& b, const ColumnMoments& mb) {
  if (ma.centered_ss == 0.0 || mb.centered_ss == 0.0) return 0.0;
  // cov = sum_r (a_r - ma)(b_r - mb) = sum_{r in nz(b)} (a_r - ma) * b_r - mb * sum_r (a_r - ma)
  // and sum_r (a_r - ma) is zero, so only b's non-zeros matter.
  double cov = 0.0;
  for (const auto& e : b) cov += (dense_a[e.row] - ma.mean) * e.value;
  return cov / std::sqrt(ma.centered_ss * mb.centered_ss);
}

}  // namespace

std::string_view rule_name(LexicalRule rule) noexcept {
  switch (rule) {
    case LexicalRule::ContainsDigit: return "digit";
    case LexicalRule::ContainsSpecial: return "special";
    case LexicalRule::HexAddress: return "hex";
    case LexicalRule::PureNumeric: return "numeric";
  }
  return "?";
}

LexicalRule parse_rule(std::string_view name) {
  for (auto rule : {LexicalRule::ContainsDigit, LexicalRule::ContainsSpecial, LexicalRule::HexAddress,
                    LexicalRule::PureNumeric}) {
    if (rule_name(rule) == name) return rule;
  }
  throw Error(ErrorCode::ConfigError, "unknown lexical rule '" + std::string(name) + "'");
}

void SelectionConfig::validate() const {
  if (min_df < 1) throw Error(ErrorCode::ConfigError, "selection.min_df must be >= 1");
  auto unit = [](double v, const char* key) {
    if (!(v > 0.0 && v <= 1.0)) throw Error(ErrorCode::ConfigError, std::string(key) + " must be in (0, 1]");
  };
  unit(max_df_ratio, "selection.max_df_ratio");
  unit(mi_top_ratio, "selection.mi_top_ratio");
  unit(target_ratio, "selection.target_ratio");
  if (!(corr_threshold > 0.0)) throw Error(ErrorCode::ConfigError, "selection.corr_threshold must be > 0");
}

SelectionConfig SelectionConfig::identity() {
  SelectionConfig c;
  c.lexical_filters.clear();
  c.frequency_enabled = false;
  c.mi_enabled = false;
  c.correlation_enabled = false;
  c.target_ratio = 1.0;
  return c;
}

SelectionMask identity_mask(std::size_t dim) {
  SelectionMask mask;
  mask.kept.resize(dim);
  std::iota(mask.kept.begin(), mask.kept.end(), std::size_t{0});
  mask.scores.assign(dim, 0.0);
  return mask;
}

bool passes_lexical(std::string_view ngram, const std::set<LexicalRule>& rules) {
  if (rules.empty()) return true;
  for (const auto& token : split_ngram(ngram)) {
    std::string_view text = token.text;
    auto underscore = text.find('_');
    // The first segment is the API name.
    while (underscore != std::string_view::npos) {
      text.remove_prefix(underscore + 1);
      underscore = text.find('_');
      const auto segment = text.substr(0, underscore);
      for (auto rule : rules) {
        if (matches(segment, rule)) return false;
      }
    }
  }
  return true;
}

SelectionMask lexical_filter(const Vocabulary& vocab, const std::set<LexicalRule>& rules) {
  auto mask = identity_mask(vocab.size());
  keep_if(mask.kept, [&](std::size_t i) { return passes_lexical(vocab.term(i), rules); });
  require_nonempty(mask.kept, "lexical filter");
  mask.provenance.push_back({"lexical", vocab.size(), mask.kept.size()});
  return mask;
}

SelectionMask frequency_filter(const FeatureMatrix& freq, const Vocabulary& vocab, std::size_t min_df,
                               double max_df_ratio) {
  if (freq.dim != vocab.size()) throw Error(ErrorCode::DimensionMismatch, "count matrix does not match vocabulary");
  std::vector<std::size_t> df(freq.dim, 0);
  for (const auto& row : freq.rows) {
    for (const auto& e : row) ++df[e.index];
  }
  const double upper = max_df_ratio * static_cast<double>(freq.n_rows());
  auto mask = identity_mask(freq.dim);
  keep_if(mask.kept, [&](std::size_t i) {
    return df[i] >= min_df && static_cast<double>(df[i]) <= upper + 1e-9;
  });
  require_nonempty(mask.kept, "frequency filter");
  mask.provenance.push_back({"frequency", freq.dim, mask.kept.size()});
  return mask;
}

namespace {

struct ClassTotals {
  std::array<double, kNumClasses> count{};
  double n = 0.0;
};

ClassTotals class_totals(std::span<const ClassLabel> labels) {
  ClassTotals t;
  for (auto label : labels) t.count[ordinal(label)] += 1.0;
  t.n = static_cast<double>(labels.size());
  return t;
}

double mi_from_counts(const std::array<double, kNumClasses>& present, const ClassTotals& totals) {
  if (totals.n == 0.0) return 0.0;
  double n_present = 0.0;
  for (double c : present) n_present += c;
  const double n_absent = totals.n - n_present;
  double mi = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (totals.count[c] == 0.0) continue;
    const double joint[2] = {totals.count[c] - present[c], present[c]};
    const double marginal[2] = {n_absent, n_present};
    for (int v = 0; v < 2; ++v) {
      if (joint[v] == 0.0) continue;
      mi += joint[v] / totals.n * std::log(joint[v] * totals.n / (marginal[v] * totals.count[c]));
    }
  }
  return std::max(0.0, mi);
}

}  // namespace

double mutual_information(const FeatureMatrix& matrix, std::span<const ClassLabel> labels, std::size_t feature) {
  if (labels.size() != matrix.n_rows()) throw Error(ErrorCode::DimensionMismatch, "labels not aligned with rows");
  if (feature >= matrix.dim) throw Error(ErrorCode::InvalidArgument, "feature out of range");
  std::array<double, kNumClasses> present{};
  for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
    const auto& row = matrix.rows[r];
    auto it = std::lower_bound(row.begin(), row.end(), feature,
                               [](const SparseEntry& e, std::size_t f) { return e.index < f; });
    if (it != row.end() && it->index == feature && it->weight != 0.0) present[ordinal(labels[r])] += 1.0;
  }
  return mi_from_counts(present, class_totals(labels));
}

std::vector<double> mutual_information_all(const FeatureMatrix& matrix, std::span<const ClassLabel> labels) {
  if (labels.size() != matrix.n_rows()) throw Error(ErrorCode::DimensionMismatch, "labels not aligned with rows");
  std::vector<std::array<double, kNumClasses>> present(matrix.dim);
  for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
    for (const auto& e : matrix.rows[r]) {
      if (e.weight != 0.0) present[e.index][ordinal(labels[r])] += 1.0;
    }
  }
  const auto totals = class_totals(labels);
  std::vector<double> scores(matrix.dim);
  parallel_for(matrix.dim, [&](std::size_t f) { scores[f] = mi_from_counts(present[f], totals); });
  return scores;
}

double pearson(const FeatureMatrix& matrix, std::size_t a, std::size_t b) {
  if (a >= matrix.dim || b >= matrix.dim) throw Error(ErrorCode::InvalidArgument, "feature out of range");
  const std::size_t n = matrix.n_rows();
  if (n == 0) return 0.0;
  std::vector<ColumnIndex::Entry> col_a, col_b;
  std::vector<double> dense_a(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (const auto& e : matrix.rows[r]) {
      if (e.index == a) {
        col_a.push_back({r, e.weight});
        dense_a[r] = e.weight;
      }
      if (e.index == b) col_b.push_back({r, e.weight});
    }
  }
  return correlation(dense_a, moments(col_a, n), col_b, moments(col_b, n));
}

SelectionMask correlation_prune(const FeatureMatrix& matrix, const SelectionMask& candidates, double threshold) {
  const double limit = std::min(threshold, 1.0);
  const std::size_t n = matrix.n_rows();
  std::vector<double> scores = candidates.scores;
  scores.resize(matrix.dim, 0.0);

  const auto columns = build_column_index(matrix);
  std::vector<ColumnMoments> stats(matrix.dim);
  for (auto i : candidates.kept) stats[i] = moments(columns.columns[i], n);

  std::vector<std::size_t> kept;
  std::vector<double> dense(n, 0.0);
  for (auto candidate : rank_by_score(candidates.kept, scores)) {
    for (const auto& e : columns.columns[candidate]) dense[e.row] = e.value;
    bool redundant = false;
    for (auto other : kept) {
      const double r = correlation(dense, stats[candidate], columns.columns[other], stats[other]);
      if (r > limit || r >= 1.0 - kDuplicateTolerance) {
        redundant = true;
        break;
      }
    }
    for (const auto& e : columns.columns[candidate]) dense[e.row] = 0.0;
    if (!redundant) kept.push_back(candidate);
  }
  std::sort(kept.begin(), kept.end());

  SelectionMask out;
  out.provenance = candidates.provenance;
  out.provenance.push_back({"correlation", candidates.kept.size(), kept.size()});
  out.kept = std::move(kept);
  out.scores = std::move(scores);
  return out;
}

SelectionMask hybrid_select(const FeatureMatrix& tfidf, const FeatureMatrix& freq, const Vocabulary& vocab,
                            const SelectionConfig& config) {
  config.validate();
  const std::size_t dim = vocab.size();
  if (tfidf.dim != dim || freq.dim != dim || tfidf.n_rows() != freq.n_rows())
    throw Error(ErrorCode::DimensionMismatch, "selection inputs do not share the vocabulary");

  SelectionMask mask = identity_mask(dim);
  auto record = [&](std::string stage, std::size_t before) {
    mask.provenance.push_back({std::move(stage), before, mask.kept.size()});
  };

  std::size_t before = mask.kept.size();
  keep_if(mask.kept, [&](std::size_t i) { return passes_lexical(vocab.term(i), config.lexical_filters); });
  require_nonempty(mask.kept, "lexical filter");
  record("lexical", before);

  before = mask.kept.size();
  if (config.frequency_enabled) {
    const auto surviving = frequency_filter(freq, vocab, config.min_df, config.max_df_ratio).kept;
    std::vector<std::size_t> both;
    std::set_intersection(mask.kept.begin(), mask.kept.end(), surviving.begin(), surviving.end(),
                          std::back_inserter(both));
    mask.kept = std::move(both);
    require_nonempty(mask.kept, "frequency filter");
  }
  record("frequency", before);

  // A target ratio of 1 asks for no reduction beyond the filters, so the ranking stages pass through.
  const bool reduce = config.target_ratio < 1.0;
  mask.scores = mutual_information_all(freq, freq.labels);
  before = mask.kept.size();
  if (config.mi_enabled && reduce) {
    auto ranked = rank_by_score(mask.kept, mask.scores);
    ranked.resize(std::min(ranked.size(), std::max<std::size_t>(1, ceil_count(config.mi_top_ratio, dim))));
    std::sort(ranked.begin(), ranked.end());
    mask.kept = std::move(ranked);
  }
  record("mutual_information", before);

  before = mask.kept.size();
  if (config.correlation_enabled && reduce) {
    auto pruned = correlation_prune(tfidf, mask, config.corr_threshold);
    mask.kept = std::move(pruned.kept);
  }
  record("correlation", before);

  before = mask.kept.size();
  const std::size_t target = std::max<std::size_t>(1, floor_count(config.target_ratio, dim));
  if (mask.kept.size() > target) {
    auto ranked = rank_by_score(mask.kept, mask.scores);
    ranked.resize(target);
    std::sort(ranked.begin(), ranked.end());
    mask.kept = std::move(ranked);
  }
  record("target_ratio", before);
  return mask;
}

void write_selection_report(const std::filesystem::path& path, const SelectionMask& mask) {
  std::vector<csv::Row> rows;
  for (const auto& stage : mask.provenance)
    rows.push_back({stage.stage, std::to_string(stage.features_in), std::to_string(stage.features_out)});
  csv::write_file(path, {"stage", "features_in", "features_out"}, rows);
}

void write_mask(const std::filesystem::path& path, const SelectionMask& mask, const Vocabulary& vocab) {
  std::vector<csv::Row> rows;
  rows.reserve(mask.kept.size());
  for (auto i : mask.kept) {
    const double score = i < mask.scores.size() ? mask.scores[i] : 0.0;
    rows.push_back({std::to_string(i), vocab.term(i), csv::format_double(score)});
  }
  csv::write_file(path, {"kept_index", "ngram", "mi_score"}, rows);
}

std::vector<std::size_t> read_mask(const std::filesystem::path& path) {
  const auto table = csv::read_file(path, {"kept_index", "ngram", "mi_score"});
  std::vector<std::size_t> kept;
  for (const auto& row : table.rows) {
    if (row.empty()) throw Error(ErrorCode::IoFailure, "bad mask row in " + path.string());
    kept.push_back(static_cast<std::size_t>(csv::parse_int(row[0])));
  }
  if (!std::is_sorted(kept.begin(), kept.end())) throw Error(ErrorCode::IoFailure, "mask indices not sorted");
  return kept;
}

}  // namespace malclass
