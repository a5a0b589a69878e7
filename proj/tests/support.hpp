#pragma once
// Shared fixtures for the test binaries: random corpus generators and brute-force oracles
// written independently of the library code they check.

#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "malclass/labels.hpp"
#include "malclass/tokenizer.hpp"
#include "malclass/vectorizer.hpp"

namespace testsupport {

inline constexpr int kPropertyCases = 250;

using Engine = std::mt19937_64;

inline std::size_t pick(Engine& g, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(g);
}

inline double real(Engine& g, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }

inline malclass::ClassLabel any_label(Engine& g) { return malclass::label_from_ordinal(pick(g, 0, 7)); }

/// Random bag-of-terms corpus over terms "t00".."t<k>".
inline std::vector<malclass::TokenDocument> random_corpus(Engine& g, std::size_t max_docs, std::size_t max_terms) {
  const std::size_t n_docs = pick(g, 1, max_docs);
  const std::size_t n_terms = pick(g, 1, max_terms);
  std::vector<malclass::TokenDocument> docs(n_docs);
  for (std::size_t d = 0; d < n_docs; ++d) {
    docs[d].sample_id = "d" + std::to_string(d);
    docs[d].label = any_label(g);
    const std::size_t distinct = pick(g, 1, n_terms);
    for (std::size_t k = 0; k < distinct; ++k) {
      const auto t = pick(g, 0, n_terms - 1);
      char name[16];
      std::snprintf(name, sizeof name, "t%02zu", t);
      docs[d].ngrams[name] += pick(g, 1, 6);
    }
  }
  return docs;
}

/// Dense TF-IDF with plain loops: weight[d][t] = (count/total) * log10(N/df).
inline std::vector<std::vector<double>> dense_tfidf(const std::vector<malclass::TokenDocument>& docs,
                                                    const std::vector<std::string>& terms) {
  const double n = static_cast<double>(docs.size());
  std::vector<double> df(terms.size(), 0.0);
  for (std::size_t t = 0; t < terms.size(); ++t)
    for (const auto& d : docs)
      if (d.ngrams.count(terms[t]) > 0) df[t] += 1.0;
  std::vector<std::vector<double>> out(docs.size(), std::vector<double>(terms.size(), 0.0));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    double total = 0.0;
    for (const auto& [_, c] : docs[i].ngrams) total += static_cast<double>(c);
    for (std::size_t t = 0; t < terms.size(); ++t) {
      auto it = docs[i].ngrams.find(terms[t]);
      if (it == docs[i].ngrams.end()) continue;
      out[i][t] = (static_cast<double>(it->second) / total) * std::log10(n / df[t]);
    }
  }
  return out;
}

/// MI in nats from the joint table of (present, label), summed term by term.
inline double brute_mi(const std::vector<std::vector<double>>& dense, const std::vector<malclass::ClassLabel>& labels,
                       std::size_t feature) {
  const double n = static_cast<double>(labels.size());
  double joint[2][malclass::kNumClasses] = {};
  for (std::size_t r = 0; r < labels.size(); ++r)
    joint[dense[r][feature] != 0.0 ? 1 : 0][malclass::ordinal(labels[r])] += 1.0;
  double mi = 0.0;
  for (int x = 0; x < 2; ++x) {
    double px = 0.0;
    for (std::size_t c = 0; c < malclass::kNumClasses; ++c) px += joint[x][c] / n;
    for (std::size_t c = 0; c < malclass::kNumClasses; ++c) {
      double pc = (joint[0][c] + joint[1][c]) / n;
      double pxc = joint[x][c] / n;
      if (pxc > 0.0) mi += pxc * std::log(pxc / (px * pc));
    }
  }
  return mi;
}

inline double brute_pearson(const std::vector<std::vector<double>>& dense, std::size_t a, std::size_t b) {
  const double n = static_cast<double>(dense.size());
  double ma = 0.0, mb = 0.0;
  for (const auto& row : dense) {
    ma += row[a];
    mb += row[b];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (const auto& row : dense) {
    sab += (row[a] - ma) * (row[b] - mb);
    saa += (row[a] - ma) * (row[a] - ma);
    sbb += (row[b] - mb) * (row[b] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

/// Random sparse matrix with entries in (0, 1], labels drawn from `n_classes` classes.
inline malclass::FeatureMatrix random_matrix(Engine& g, std::size_t rows, std::size_t dim, double density,
                                             std::size_t n_classes = malclass::kNumClasses) {
  malclass::FeatureMatrix m;
  m.dim = dim;
  for (std::size_t r = 0; r < rows; ++r) {
    malclass::SparseRow row;
    for (std::size_t c = 0; c < dim; ++c)
      if (real(g, 0.0, 1.0) < density) row.push_back({c, real(g, 0.05, 1.0)});
    m.rows.push_back(std::move(row));
    m.labels.push_back(malclass::label_from_ordinal(r < n_classes ? r : pick(g, 0, n_classes - 1)));
    m.sample_ids.push_back("r" + std::to_string(r));
  }
  return m;
}

inline std::vector<std::vector<double>> to_dense(const malclass::FeatureMatrix& m) {
  std::vector<std::vector<double>> out;
  for (const auto& row : m.rows) out.push_back(malclass::densify(row, m.dim));
  return out;
}

/// Training accuracy of any model exposing predict(row).
template <typename Model>
double training_accuracy(const Model& model, const malclass::FeatureMatrix& m) {
  std::size_t hit = 0;
  for (std::size_t r = 0; r < m.n_rows(); ++r)
    if (model.predict(m.rows[r]) == m.labels[r]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(m.n_rows());
}

}  // namespace testsupport
