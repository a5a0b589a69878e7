// Randomized invariant checks, testsupport::kPropertyCases cases per property.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include <json.hpp>

#include "malclass/config.hpp"
#include "malclass/csv.hpp"
#include "malclass/error.hpp"
#include "malclass/evaluator.hpp"
#include "malclass/models.hpp"
#include "malclass/report.hpp"
#include "malclass/selector.hpp"
#include "malclass/synth.hpp"
#include "malclass/tokenizer.hpp"
#include "malclass/vectorizer.hpp"
#include "support.hpp"

using namespace malclass;
using namespace testsupport;

namespace {

std::string random_word(Engine& g) {
  static const char* words[] = {"urlmon", "ole32", "kernel32.dll", "SHELL32", "0x00401000", "1500", "C:\\a b",
                                "x,y",    "",      "na",           "Reg",     "\tTab"};
  return words[pick(g, 0, std::size(words) - 1)];
}

std::string random_report_json(Engine& g) {
  nlohmann::json procs = nlohmann::json::array();
  const auto n_procs = pick(g, 1, 4);
  for (std::size_t p = 0; p < n_procs; ++p) {
    nlohmann::json calls = nlohmann::json::array();
    const auto n_calls = pick(g, p == 0 ? 1 : 0, 12);
    for (std::size_t c = 0; c < n_calls; ++c) {
      nlohmann::json call;
      call[pick(g, 0, 1) ? "api" : "API"] = "Api" + std::to_string(pick(g, 0, 9));
      call["category"] = pick(g, 0, 1) ? "file" : "system";
      if (pick(g, 0, 1)) {
        nlohmann::json args = nlohmann::json::array();
        for (std::size_t a = pick(g, 0, 3); a > 0; --a) args.push_back(random_word(g));
        call["arguments"] = args;
      } else {
        nlohmann::json args = nlohmann::json::object();
        for (std::size_t a = pick(g, 0, 3); a > 0; --a) args["k" + std::to_string(a)] = random_word(g);
        if (pick(g, 0, 3) == 0) args["num"] = pick(g, 0, 100);
        call["arguments"] = args;
      }
      call["return_value"] = pick(g, 0, 1) ? nlohmann::json(0) : nlohmann::json("0xc0000034");
      call["extra"] = "ignored";
      calls.push_back(call);
    }
    procs.push_back({{"pid", p}, {"calls", calls}});
  }
  return nlohmann::json{{"behavior", {{"processes", procs}}}}.dump();
}

std::vector<CanonicalToken> random_tokens(Engine& g) {
  std::vector<CanonicalToken> out(pick(g, 0, 20));
  for (auto& t : out) t.text = "T" + std::to_string(pick(g, 0, 4));
  return out;
}

double gini(const std::array<double, kNumClasses>& counts) {
  double total = 0.0, sq = 0.0;
  for (double c : counts) total += c;
  if (total == 0.0) return 0.0;
  for (double c : counts) sq += (c / total) * (c / total);
  return 1.0 - sq;
}

/// Weighted Gini decrease of every internal node, from the training rows that reach it.
std::vector<double> split_gains(const Tree& tree, const FeatureMatrix& m) {
  std::vector<std::array<double, kNumClasses>> counts(tree.nodes.size());
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    int node = 0;
    while (true) {
      counts[static_cast<std::size_t>(node)][ordinal(m.labels[r])] += 1.0;
      const auto& n = tree.nodes[static_cast<std::size_t>(node)];
      if (n.is_leaf()) break;
      node = feature_value(m.rows[r], static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left : n.right;
    }
  }
  auto total = [](const std::array<double, kNumClasses>& c) { return std::accumulate(c.begin(), c.end(), 0.0); };
  std::vector<double> gains;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (n.is_leaf()) continue;
    const auto& l = counts[static_cast<std::size_t>(n.left)];
    const auto& r = counts[static_cast<std::size_t>(n.right)];
    gains.push_back(total(counts[i]) * gini(counts[i]) - total(l) * gini(l) - total(r) * gini(r));
  }
  return gains;
}

/// Rows with distinct continuous values, so no two identical rows disagree on the label.
FeatureMatrix distinct_rows(Engine& g, std::size_t max_rows, std::size_t dim) {
  auto m = random_matrix(g, pick(g, 2, max_rows), dim, 0.6, pick(g, 2, kNumClasses));
  for (std::size_t r = 0; r < m.n_rows(); ++r) m.rows[r].insert(m.rows[r].begin(), {0, 1.0 + static_cast<double>(r)});
  for (auto& row : m.rows)
    if (row.size() > 1 && row[1].index == 0) row.erase(row.begin() + 1);
  return m;
}

FeatureMatrix permute_rows(const FeatureMatrix& m, Engine& g) {
  std::vector<std::size_t> order(m.n_rows());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), g);
  FeatureMatrix out;
  out.dim = m.dim;
  for (auto i : order) {
    out.rows.push_back(m.rows[i]);
    out.labels.push_back(m.labels[i]);
    out.sample_ids.push_back(m.sample_ids[i]);
  }
  return out;
}

ConfusionMatrix random_confusion(Engine& g) {
  ConfusionMatrix c{};
  for (auto& row : c)
    for (auto& v : row) v = pick(g, 0, 3) == 0 ? 0 : pick(g, 0, 30);
  c[pick(g, 0, 7)][pick(g, 0, 7)] += 1;
  return c;
}

}  // namespace

// ---- report-ingest ----

TEST_CASE("property: element streams align and normalized json round trips") {
  Engine g(101);
  for (int i = 0; i < kPropertyCases; ++i) {
    const auto raw = random_report_json(g);
    auto r = parse_report(raw, any_label(g), "s" + std::to_string(i));
    auto s = partition_elements(r);
    REQUIRE(s.categories.size() == r.calls.size());
    REQUIRE(s.names.size() == r.calls.size());
    REQUIRE(s.arguments.size() == r.calls.size());
    REQUIRE(s.returns.size() == r.calls.size());
    REQUIRE(parse_report(raw, r.label, r.sample_id) == r);
    REQUIRE(from_normalized_json(to_normalized_json(r)) == r);
    REQUIRE(from_normalized_json(nlohmann::json::parse(to_normalized_json(r).dump())) == r);
  }
}

// ---- tokenizer ----

TEST_CASE("property: n-gram multiplicity equals window count") {
  Engine g(102);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto tokens = random_tokens(g);
    for (int n = 1; n <= kMaxNgram; ++n) {
      auto grams = extract_ngrams(tokens, n);
      std::size_t total = 0;
      for (const auto& [_, c] : grams) total += c;
      const auto expected = tokens.size() >= static_cast<std::size_t>(n) ? tokens.size() - n + 1 : 0;
      REQUIRE(total == expected);
    }
  }
}

TEST_CASE("property: vocabulary is an order-independent bijection with bounded df") {
  Engine g(103);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto docs = random_corpus(g, 12, 30);
    auto vocab = build_vocabulary(docs);
    for (std::size_t k = 0; k < vocab.size(); ++k) {
      REQUIRE(vocab.find(vocab.term(k)) == k);
      REQUIRE(vocab.df(k) >= 1);
      REQUIRE(vocab.df(k) <= docs.size());
      if (k > 0) REQUIRE(vocab.term(k - 1) < vocab.term(k));
    }
    std::shuffle(docs.begin(), docs.end(), g);
    REQUIRE(build_vocabulary(docs) == vocab);
  }
}

// ---- vectorizer ----

TEST_CASE("property: tf sums to one and idf is non-negative and monotone") {
  Engine g(104);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto docs = random_corpus(g, 10, 30);
    for (const auto& d : docs) {
      double sum = 0.0;
      for (const auto& [_, c] : d.ngrams) sum += tf(c, d.total());
      REQUIRE(std::abs(sum - 1.0) < 1e-9);
    }
    const auto n = pick(g, 1, 500);
    double prev = idf(1, n);
    REQUIRE(prev >= 0.0);
    for (std::size_t df = 2; df <= n; df += pick(g, 1, 40)) {
      const double cur = idf(df, n);
      REQUIRE(cur >= 0.0);
      REQUIRE(cur <= prev);
      prev = cur;
    }
  }
}

TEST_CASE("property: sparse tf-idf matches the dense oracle; zeros exactly where expected") {
  Engine g(105);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto docs = random_corpus(g, 20, 50);
    auto vocab = build_vocabulary(docs);
    auto m = tfidf_matrix(docs, vocab, false);
    m.validate();
    auto oracle = dense_tfidf(docs, vocab.terms());
    for (std::size_t d = 0; d < docs.size(); ++d) {
      auto dense = densify(m.rows[d], m.dim);
      for (std::size_t t = 0; t < vocab.size(); ++t) {
        REQUIRE(std::abs(dense[t] - oracle[d][t]) <= 1e-12);
        const bool absent = docs[d].ngrams.count(vocab.term(t)) == 0;
        REQUIRE((dense[t] == 0.0) == (absent || vocab.df(t) == docs.size()));
      }
    }
  }
}

TEST_CASE("property: l2 rows are unit norm and keep their argmax") {
  Engine g(106);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto docs = random_corpus(g, 15, 40);
    auto vocab = build_vocabulary(docs);
    auto raw = tfidf_matrix(docs, vocab, false);
    auto unit = tfidf_matrix(docs, vocab, true);
    REQUIRE(unit.normalized);
    for (std::size_t r = 0; r < raw.n_rows(); ++r) {
      REQUIRE(raw.rows[r].size() == unit.rows[r].size());
      if (raw.rows[r].empty()) continue;
      double sq = 0.0;
      for (const auto& e : unit.rows[r]) sq += e.weight * e.weight;
      REQUIRE(std::abs(std::sqrt(sq) - 1.0) < 1e-9);
      auto by_weight = [](const SparseEntry& a, const SparseEntry& b) { return a.weight < b.weight; };
      REQUIRE(std::max_element(raw.rows[r].begin(), raw.rows[r].end(), by_weight)->index ==
              std::max_element(unit.rows[r].begin(), unit.rows[r].end(), by_weight)->index);
    }
  }
}

// ---- selector ----

TEST_CASE("property: MI and Pearson match brute-force oracles") {
  Engine g(107);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto m = random_matrix(g, pick(g, 2, 60), pick(g, 2, 12), real(g, 0.05, 0.9));
    auto dense = to_dense(m);
    auto mi = mutual_information_all(m, m.labels);
    for (std::size_t a = 0; a < m.dim; ++a) {
      REQUIRE(mi[a] >= 0.0);
      REQUIRE(std::abs(mi[a] - brute_mi(dense, m.labels, a)) <= 1e-10);
      REQUIRE(std::abs(mutual_information(m, m.labels, a) - mi[a]) <= 1e-12);
      for (std::size_t b = 0; b < m.dim; ++b) REQUIRE(std::abs(pearson(m, a, b) - brute_pearson(dense, a, b)) <= 1e-10);
    }
  }
}

TEST_CASE("property: MI vanishes for label-independent features") {
  Engine g(108);
  for (int i = 0; i < kPropertyCases; ++i) {
    // Each class gets the same number of rows and the same present/absent pattern.
    const auto classes = pick(g, 2, kNumClasses);
    const auto per_class = pick(g, 1, 8);
    std::vector<bool> pattern(per_class);
    for (std::size_t k = 0; k < per_class; ++k) pattern[k] = pick(g, 0, 1) == 1;
    FeatureMatrix m;
    m.dim = 1;
    for (std::size_t c = 0; c < classes; ++c)
      for (std::size_t k = 0; k < per_class; ++k) {
        m.rows.push_back(pattern[k] ? SparseRow{{0, real(g, 0.1, 2.0)}} : SparseRow{});
        m.labels.push_back(label_from_ordinal(c));
        m.sample_ids.push_back("x");
      }
    REQUIRE(std::abs(mutual_information(m, m.labels, 0)) < 1e-12);
  }
}

TEST_CASE("property: selection cascade shrinks monotonically and is deterministic") {
  Engine g(109);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto docs = random_corpus(g, 20, 50);
    for (auto& d : docs)
      if (pick(g, 0, 2) == 0) d.ngrams["Api_0x" + std::to_string(pick(g, 10, 99))] = 1;
    auto vocab = build_vocabulary(docs);
    auto tfidf = tfidf_matrix(docs, vocab, true);
    auto freq = frequency_matrix(docs, vocab);
    SelectionConfig cfg;
    cfg.min_df = pick(g, 1, 2);
    cfg.max_df_ratio = 1.0;
    cfg.mi_top_ratio = real(g, 0.1, 1.0);
    cfg.corr_threshold = real(g, 0.5, 1.0);
    cfg.target_ratio = real(g, 0.01, 0.99);
    SelectionMask mask;
    try {
      mask = hybrid_select(tfidf, freq, vocab, cfg);
    } catch (const Error& e) {
      REQUIRE(e.code() == ErrorCode::AllFeaturesRemoved);
      continue;
    }
    REQUIRE(mask.provenance.size() == 5);
    REQUIRE(mask.provenance.front().features_in == vocab.size());
    for (std::size_t s = 0; s < mask.provenance.size(); ++s) {
      REQUIRE(mask.provenance[s].features_out <= mask.provenance[s].features_in);
      if (s > 0) REQUIRE(mask.provenance[s].features_in == mask.provenance[s - 1].features_out);
    }
    REQUIRE(mask.provenance.back().features_out == mask.kept.size());
    REQUIRE(std::is_sorted(mask.kept.begin(), mask.kept.end()));
    REQUIRE(std::adjacent_find(mask.kept.begin(), mask.kept.end()) == mask.kept.end());
    REQUIRE(static_cast<double>(mask.kept.size()) <= std::ceil(cfg.target_ratio * vocab.size()) + 1e-9);
    for (auto k : mask.kept) REQUIRE(passes_lexical(vocab.term(k), cfg.lexical_filters));
    REQUIRE(hybrid_select(tfidf, freq, vocab, cfg) == mask);
  }
}

// ---- models ----

TEST_CASE("property: decision tree splits strictly reduce impurity and memorize distinct rows") {
  Engine g(110);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto m = distinct_rows(g, 40, 6);
    auto model = train(ModelKind::DecisionTree, m, make_params(ModelKind::DecisionTree));
    const auto& tree = std::get<DecisionTreeModel>(model.payload).tree;
    for (double gain : split_gains(tree, m)) REQUIRE(gain > 0.0);
    REQUIRE(training_accuracy(model, m) == 1.0);
  }
}

TEST_CASE("property: one unbagged full-feature tree forest equals the decision tree") {
  Engine g(111);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto m = random_matrix(g, pick(g, 4, 40), pick(g, 1, 8), 0.5, pick(g, 2, kNumClasses));
    const double depth = static_cast<double>(pick(g, 0, 4));
    auto dt = train(ModelKind::DecisionTree, m, make_params(ModelKind::DecisionTree, {{"max_depth", depth}}));
    auto rf = train(ModelKind::RandomForest, m,
                    make_params(ModelKind::RandomForest, {{"n_trees", 1}, {"bootstrap", 0},
                                                          {"max_features", static_cast<double>(m.dim)},
                                                          {"max_depth", depth}},
                                g()));
    auto probe = random_matrix(g, 20, m.dim, 0.5);
    for (const auto& row : probe.rows) REQUIRE(dt.predict(row) == rf.predict(row));
    for (const auto& row : m.rows) REQUIRE(dt.predict(row) == rf.predict(row));
  }
}

TEST_CASE("property: boosting training loss never increases") {
  Engine g(112);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto m = random_matrix(g, pick(g, 4, 40), pick(g, 1, 8), 0.5, pick(g, 2, kNumClasses));
    auto model = train(ModelKind::GradientBoostedTrees, m,
                       make_params(ModelKind::GradientBoostedTrees,
                                   {{"rounds", 8}, {"learning_rate", real(g, 0.05, 0.3)},
                                    {"max_depth", static_cast<double>(pick(g, 1, 6))}},
                                   g()));
    const auto& loss = std::get<GradientBoostedModel>(model.payload).training_loss;
    REQUIRE(loss.size() == 9);
    for (std::size_t r = 1; r < loss.size(); ++r) REQUIRE(loss[r] <= loss[r - 1] + 1e-12);
  }
}

TEST_CASE("property: naive bayes argmax is scale invariant under uniform priors") {
  Engine g(113);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto m = random_matrix(g, pick(g, 8, 40), pick(g, 1, 10), 0.5);
    auto model = train(ModelKind::MultinomialNaiveBayes, m,
                       make_params(ModelKind::MultinomialNaiveBayes, {{"uniform_prior", 1}}));
    auto probe = random_matrix(g, 10, m.dim, 0.5);
    for (auto row : probe.rows) {
      const auto before = model.predict(row);
      const double k = real(g, 0.01, 100.0);
      for (auto& e : row) e.weight *= k;
      REQUIRE(model.predict(row) == before);
    }
  }
}

TEST_CASE("property: knn k=1 predicts its own label for unique training points") {
  Engine g(114);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto m = distinct_rows(g, 30, 5);
    // Cosine distance ignores scale, so the anchor column alone does not make rows unique.
    for (std::size_t r = 0; r < m.n_rows(); ++r) m.rows[r].push_back({m.dim, 1.0 / (1.0 + static_cast<double>(r))});
    ++m.dim;
    for (auto& row : m.rows)
      std::sort(row.begin(), row.end(), [](auto& a, auto& b) { return a.index < b.index; });
    auto model = train(ModelKind::KNearestNeighbors, m, make_params(ModelKind::KNearestNeighbors, {{"k", 1}}));
    REQUIRE(training_accuracy(model, m) == 1.0);
  }
}

TEST_CASE("property: linear svm separates separable fixtures") {
  Engine g(115);
  for (int i = 0; i < kPropertyCases; ++i) {
    const auto classes = pick(g, 2, kNumClasses);
    const auto noise_dim = pick(g, 0, 6);
    FeatureMatrix m;
    m.dim = classes + noise_dim;
    for (std::size_t r = 0; r < pick(g, classes, 40); ++r) {
      const auto c = r < classes ? r : pick(g, 0, classes - 1);
      SparseRow row{{c, real(g, 0.8, 1.2)}};
      for (std::size_t k = 0; k < noise_dim; ++k)
        if (pick(g, 0, 1)) row.push_back({classes + k, real(g, 0.0, 0.2)});
      m.rows.push_back(row);
      m.labels.push_back(label_from_ordinal(c));
      m.sample_ids.push_back(std::to_string(r));
    }
    auto model = train(ModelKind::LinearSVM, m, make_params(ModelKind::LinearSVM, {}, g()));
    REQUIRE(training_accuracy(model, m) == 1.0);
  }
}

TEST_CASE("property: tree and bayes models ignore row order; stochastic learners repeat given data and seed") {
  Engine g(116);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto m = distinct_rows(g, 30, 5);
    auto shuffled = permute_rows(m, g);
    auto dt1 = train(ModelKind::DecisionTree, m, make_params(ModelKind::DecisionTree));
    auto dt2 = train(ModelKind::DecisionTree, shuffled, make_params(ModelKind::DecisionTree));
    REQUIRE(std::get<DecisionTreeModel>(dt1.payload).tree == std::get<DecisionTreeModel>(dt2.payload).tree);
    auto nb1 = train(ModelKind::MultinomialNaiveBayes, m, make_params(ModelKind::MultinomialNaiveBayes));
    auto nb2 = train(ModelKind::MultinomialNaiveBayes, shuffled, make_params(ModelKind::MultinomialNaiveBayes));
    const auto& a = std::get<NaiveBayesModel>(nb1.payload);
    const auto& b = std::get<NaiveBayesModel>(nb2.payload);
    REQUIRE(a.log_prior == b.log_prior);
    for (std::size_t c = 0; c < kNumClasses; ++c)
      for (std::size_t f = 0; f < m.dim; ++f)
        REQUIRE(std::abs(a.log_likelihood[c][f] - b.log_likelihood[c][f]) <= 1e-12);

    const auto seed = g();
    for (auto kind : {ModelKind::RandomForest, ModelKind::GradientBoostedTrees, ModelKind::LinearSVM}) {
      std::map<std::string, double> small = kind == ModelKind::RandomForest ? std::map<std::string, double>{{"n_trees", 5}}
                                            : kind == ModelKind::GradientBoostedTrees
                                                ? std::map<std::string, double>{{"rounds", 3}}
                                                : std::map<std::string, double>{{"epochs", 3}};
      auto x = train(kind, m, make_params(kind, small, seed));
      auto y = train(kind, m, make_params(kind, small, seed));
      REQUIRE(model_to_json(x) == model_to_json(y));
      REQUIRE(model_to_json(x)["seed"] == seed);
      REQUIRE(model_to_json(x)["data_fingerprint"] == fingerprint(m));
    }
  }
}

TEST_CASE("property: model save and load round trip") {
  Engine g(117);
  auto path = std::filesystem::temp_directory_path() / "malclass_prop_model.json";
  for (int i = 0; i < kPropertyCases; ++i) {
    const auto kind = kAllModelKinds[static_cast<std::size_t>(i) % kAllModelKinds.size()];
    auto m = random_matrix(g, pick(g, 4, 30), pick(g, 1, 10), 0.5, pick(g, 2, kNumClasses));
    std::map<std::string, double> small;
    if (kind == ModelKind::RandomForest) small["n_trees"] = 5;
    if (kind == ModelKind::GradientBoostedTrees) small["rounds"] = 5;
    auto model = train(kind, m, make_params(kind, small, g()));
    save_model(model, path);
    auto back = load_model(path);
    REQUIRE(back.kind == model.kind);
    REQUIRE(back.dim == model.dim);
    auto probe = random_matrix(g, 20, m.dim, 0.5);
    for (const auto& row : probe.rows) {
      REQUIRE(back.predict(row) == model.predict(row));
      REQUIRE(back.decision_scores(row) == model.decision_scores(row));
      if (kind != ModelKind::LinearSVM) {
        auto p = model.predict_proba(row).probabilities;
        double sum = 0.0;
        for (double v : p) {
          REQUIRE(v >= 0.0);
          sum += v;
        }
        REQUIRE(std::abs(sum - 1.0) <= 1e-9);
        REQUIRE(model.predict_proba(row).argmax() == model.predict(row));
      }
    }
  }
  std::filesystem::remove(path);
}

// ---- evaluator ----

TEST_CASE("property: stratified split partitions and preserves class counts") {
  Engine g(118);
  for (int i = 0; i < kPropertyCases; ++i) {
    std::vector<ClassLabel> labels;
    std::array<std::size_t, kNumClasses> per_class{};
    for (auto label : kAllLabels) {
      if (pick(g, 0, 4) == 0) continue;
      const auto n = pick(g, 2, 40);
      for (std::size_t k = 0; k < n; ++k) labels.push_back(label);
      per_class[ordinal(label)] = n;
    }
    if (labels.empty()) labels = {ClassLabel::Worm, ClassLabel::Worm}, per_class[ordinal(ClassLabel::Worm)] = 2;
    std::shuffle(labels.begin(), labels.end(), g);
    SplitSpec spec{.train_ratio = real(g, 0.05, 0.95), .seed = g()};
    auto s = stratified_split(labels, spec);
    std::vector<int> seen(labels.size(), 0);
    for (auto t : s.train) ++seen[t];
    for (auto t : s.test) ++seen[t];
    for (int v : seen) REQUIRE(v == 1);
    std::array<std::size_t, kNumClasses> train_count{};
    for (auto t : s.train) ++train_count[ordinal(labels[t])];
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (per_class[c] == 0) continue;
      REQUIRE(std::abs(static_cast<double>(train_count[c]) - spec.train_ratio * per_class[c]) <= 1.0);
    }
    auto again = stratified_split(labels, spec);
    REQUIRE(again.train == s.train);
    REQUIRE(again.test == s.test);
    spec.seed = g();
    auto other = stratified_split(labels, spec);
    std::array<std::size_t, kNumClasses> other_count{};
    for (auto t : other.train) ++other_count[ordinal(labels[t])];
    REQUIRE(other_count == train_count);
  }
}

TEST_CASE("property: metrics are consistent with the confusion csv and bounded") {
  Engine g(119);
  auto path = std::filesystem::temp_directory_path() / "malclass_prop_confusion.csv";
  for (int i = 0; i < kPropertyCases; ++i) {
    auto c = random_confusion(g);
    auto r = report_from_confusion(c);
    write_confusion_csv(path, c);
    auto back = report_from_confusion(read_confusion_csv(path));
    REQUIRE(std::abs(back.accuracy - r.accuracy) <= 1e-9);
    REQUIRE(std::abs(back.macro.f1 - r.macro.f1) <= 1e-9);
    REQUIRE(std::abs(back.weighted.precision - r.weighted.precision) <= 1e-9);

    // Identities against hand-computed counts.
    double diag = 0.0, total = 0.0;
    for (std::size_t t = 0; t < kNumClasses; ++t)
      for (std::size_t p = 0; p < kNumClasses; ++p) {
        total += static_cast<double>(c[t][p]);
        if (t == p) diag += static_cast<double>(c[t][p]);
      }
    REQUIRE(std::abs(r.accuracy - diag / total) <= 1e-12);
    double lo = 1.0, hi = 0.0, mean = 0.0;
    for (const auto& m : r.per_class) {
      lo = std::min(lo, m.f1);
      hi = std::max(hi, m.f1);
      mean += m.f1 / kNumClasses;
    }
    REQUIRE(r.macro.f1 >= lo - 1e-12);
    REQUIRE(r.macro.f1 <= hi + 1e-12);
    REQUIRE(std::abs(r.macro.f1 - mean) <= 1e-12);
  }
  std::filesystem::remove(path);
}

// ---- synth ----

TEST_CASE("property: generated reports always parse and repeat exactly") {
  Engine g(120);
  for (int i = 0; i < kPropertyCases; ++i) {
    auto spec = default_spec(CorpusScale::Tiny, g());
    for (auto& n : spec.samples_per_class) n = pick(g, 2, 3);
    for (auto& p : spec.profiles) p.noise_ratio = real(g, 0.0, 1.0);
    auto a = generate_corpus(spec);
    auto b = generate_corpus(spec);
    REQUIRE(a.size() == spec.total_samples());
    for (std::size_t k = 0; k < a.size(); ++k) {
      REQUIRE(a[k].json == b[k].json);
      REQUIRE(parse_report(a[k].json, a[k].label, a[k].sample_id).calls.size() > 0);
    }
  }
}

TEST_CASE("property: class-exclusive features carry more MI than background features") {
  Engine g(121);
  const int uni[] = {1};
  for (int i = 0; i < kPropertyCases; ++i) {
    auto spec = default_spec(CorpusScale::Tiny, g());
    spec.samples_per_class.fill(4);
    for (auto& p : spec.profiles) p.noise_ratio = 0.3;
    std::vector<TokenDocument> docs;
    for (const auto& s : generate_corpus(spec)) docs.push_back(make_document(parse_report(s.json, s.label, s.sample_id), uni));
    auto vocab = build_vocabulary(docs);
    auto freq = frequency_matrix(docs, vocab);
    auto mi = mutual_information_all(freq, freq.labels);

    std::map<std::size_t, std::set<ClassLabel>> owners;
    for (std::size_t r = 0; r < freq.n_rows(); ++r)
      for (const auto& e : freq.rows[r]) owners[e.index].insert(freq.labels[r]);
    // Exclusive: one class only, present in every sample of it. Background: every class.
    double best_background = 0.0, worst_exclusive = 1e9;
    bool any_exclusive = false;
    for (const auto& [f, who] : owners) {
      if (who.size() == kNumClasses) best_background = std::max(best_background, mi[f]);
      if (who.size() == 1 && vocab.df(f) == 4) {
        worst_exclusive = std::min(worst_exclusive, mi[f]);
        any_exclusive = true;
      }
    }
    REQUIRE(any_exclusive);
    REQUIRE(worst_exclusive > best_background);
  }
}

// ---- cli configuration ----

TEST_CASE("property: configuration round trips through its text form") {
  Engine g(122);
  for (int i = 0; i < kPropertyCases; ++i) {
    PipelineConfig c;
    c.seed = g();
    c.workdir = "run" + std::to_string(pick(g, 0, 99));
    c.threads = pick(g, 0, 8);
    c.scale = pick(g, 0, 1) ? CorpusScale::Desk : CorpusScale::Tiny;
    c.ngram_combined = pick(g, 0, 1) == 1;
    c.ngram_sizes = c.ngram_combined ? std::vector<int>{1, 2} : std::vector<int>{static_cast<int>(pick(g, 1, 3))};
    c.max_args = pick(g, 0, 4);
    c.reset_at_process = pick(g, 0, 1) == 1;
    c.l2 = pick(g, 0, 1) == 1;
    c.selection.lexical_filters.clear();
    for (auto rule : {LexicalRule::ContainsDigit, LexicalRule::ContainsSpecial, LexicalRule::HexAddress,
                      LexicalRule::PureNumeric})
      if (pick(g, 0, 1)) c.selection.lexical_filters.insert(rule);
    c.selection.min_df = pick(g, 1, 5);
    c.selection.max_df_ratio = real(g, 0.1, 1.0);
    c.selection.mi_top_ratio = real(g, 0.01, 1.0);
    c.selection.corr_threshold = real(g, 0.1, 1.0);
    c.selection.target_ratio = real(g, 0.001, 1.0);
    c.selection.mi_enabled = pick(g, 0, 1) == 1;
    c.select_on_all = pick(g, 0, 1) == 1;
    c.models = {kAllModelKinds[pick(g, 0, 5)]};
    if (pick(g, 0, 1)) c.model_params["n_trees"] = static_cast<double>(pick(g, 1, 300));
    c.train_ratio = real(g, 0.1, 0.9);
    c.averaging = pick(g, 0, 1) ? Averaging::Weighted : Averaging::Macro;
    PipelineConfig back;
    apply_config_text(back, config_to_text(c));
    REQUIRE(back == c);
  }
}
