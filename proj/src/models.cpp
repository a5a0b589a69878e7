#include "malclass/models.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "malclass/error.hpp"
#include "malclass/parallel.hpp"
#include "malclass/report.hpp"
#include "malclass/rng.hpp"

namespace malclass {

using nlohmann::json;

namespace {

constexpr double kUnreachableLogProb = -1e300;
constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr ParamSpec kTreeParams[] = {
    {"max_depth", 0, 0, 1000, true, "maximum depth (0 = unlimited)"},
    {"min_samples_split", 2, 2, 1e9, true, "minimum samples to split a node"},
    {"min_samples_leaf", 1, 1, 1e9, true, "minimum samples per leaf"},
};
constexpr ParamSpec kForestParams[] = {
    {"n_trees", 100, 1, 10000, true, "number of trees"},
    {"bootstrap", 1, 0, 1, true, "sample rows with replacement per tree"},
    {"max_features", 0, 0, 1e9, true, "features tried per split (0 = sqrt(dim))"},
    {"max_depth", 0, 0, 1000, true, "maximum depth (0 = unlimited)"},
    {"min_samples_split", 2, 2, 1e9, true, "minimum samples to split a node"},
    {"min_samples_leaf", 1, 1, 1e9, true, "minimum samples per leaf"},
};
constexpr ParamSpec kBoostParams[] = {
    {"rounds", 200, 1, 100000, true, "boosting rounds"},
    {"learning_rate", 0.1, 1e-6, 1, false, "shrinkage per round"},
    {"max_depth", 6, 1, 64, true, "depth of each regression tree"},
    {"l2_reg", 1.0, 0, 1e6, false, "L2 penalty on leaf values"},
    {"min_child_weight", 1.0, 0, 1e9, false, "minimum hessian sum per leaf"},
    {"subsample", 1.0, 1e-6, 1, false, "row fraction drawn per round"},
};
constexpr ParamSpec kKnnParams[] = {
    {"k", 5, 1, 1e6, true, "neighbors consulted"},
};
constexpr ParamSpec kBayesParams[] = {
    {"alpha", 1.0, 1e-12, 1e6, false, "additive (Laplace) smoothing"},
    {"uniform_prior", 0, 0, 1, true, "ignore class frequencies in the prior"},
};
constexpr ParamSpec kSvmParams[] = {
    {"lambda", 1e-4, 1e-12, 1e3, false, "regularization strength"},
    {"epochs", 50, 1, 100000, true, "passes over the training set"},
};

std::array<double, kNumClasses> softmax(const std::array<double, kNumClasses>& scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  std::array<double, kNumClasses> p{};
  double sum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    p[c] = std::exp(scores[c] - top);
    sum += p[c];
  }
  for (auto& v : p) v /= sum;
  return p;
}

std::size_t argmax_index(const std::array<double, kNumClasses>& v) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumClasses; ++c) {
    if (v[c] > v[best]) best = c;
  }
  return best;
}

double dot(const SparseRow& row, std::span<const double> dense) {
  double s = 0.0;
  for (const auto& e : row) s += e.weight * dense[e.index];
  return s;
}

SparseRow unit(const SparseRow& row) {
  double sq = 0.0;
  for (const auto& e : row) sq += e.weight * e.weight;
  if (sq == 0.0) return row;
  const double norm = std::sqrt(sq);
  SparseRow out = row;
  for (auto& e : out) e.weight /= norm;
  return out;
}

void check_trainable(const FeatureMatrix& m) {
  if (m.rows.empty() || m.dim == 0) throw Error(ErrorCode::DegenerateData, "no rows or zero features");
  if (m.labels.size() != m.rows.size()) throw Error(ErrorCode::DimensionMismatch, "labels not aligned with rows");
  std::array<bool, kNumClasses> seen{};
  for (auto label : m.labels) seen[ordinal(label)] = true;
  if (std::count(seen.begin(), seen.end(), true) < 2)
    throw Error(ErrorCode::DegenerateData, "training data contains fewer than two classes");
  for (const auto& row : m.rows) {
    for (const auto& e : row) {
      if (!std::isfinite(e.weight)) throw Error(ErrorCode::NonFiniteInput, "non-finite feature weight");
      if (e.index >= m.dim) throw Error(ErrorCode::DimensionMismatch, "column index beyond dim");
    }
  }
}

TreeGrowParams tree_params(const HyperParams& p) {
  TreeGrowParams t;
  t.max_depth = static_cast<std::size_t>(p.get("max_depth"));
  t.min_samples_split = static_cast<std::size_t>(p.get("min_samples_split"));
  t.min_samples_leaf = p.get("min_samples_leaf");
  return t;
}

DecisionTreeModel train_tree(const FeatureMatrix& m, const HyperParams& p) {
  const std::vector<double> weights(m.n_rows(), 1.0);
  return {grow_classification_tree(m, weights, tree_params(p), nullptr)};
}

RandomForestModel train_forest(const FeatureMatrix& m, const HyperParams& p) {
  const auto n_trees = static_cast<std::size_t>(p.get("n_trees"));
  const bool bootstrap = p.get("bootstrap") != 0.0;
  auto grow = tree_params(p);
  const auto requested = static_cast<std::size_t>(p.get("max_features"));
  grow.max_features =
      requested == 0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(m.dim))))
                     : requested;

  RandomForestModel forest;
  forest.trees.resize(n_trees);
  parallel_for(n_trees, [&](std::size_t t) {
    Rng rng(derive_seed(p.seed, t));
    std::vector<double> weights(m.n_rows(), bootstrap ? 0.0 : 1.0);
    if (bootstrap) {
      for (std::size_t i = 0; i < m.n_rows(); ++i) weights[rng.below(m.n_rows())] += 1.0;
    }
    forest.trees[t] = grow_classification_tree(m, weights, grow, &rng);
  });
  return forest;
}

double mean_log_loss(const std::vector<std::array<double, kNumClasses>>& scores, std::span<const ClassLabel> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    const double top = *std::max_element(s.begin(), s.end());
    double sum = 0.0;
    for (double v : s) sum += std::exp(v - top);
    total += std::log(sum) + top - s[ordinal(labels[i])];
  }
  return total / static_cast<double>(scores.size());
}

GradientBoostedModel train_boosting(const FeatureMatrix& m, const HyperParams& p) {
  const auto rounds = static_cast<std::size_t>(p.get("rounds"));
  const double learning_rate = p.get("learning_rate");
  const double subsample = p.get("subsample");
  TreeGrowParams grow;
  grow.max_depth = static_cast<std::size_t>(p.get("max_depth"));
  grow.l2_reg = p.get("l2_reg");
  grow.min_child_weight = p.get("min_child_weight");
  grow.min_samples_leaf = 1.0;

  const std::size_t n = m.n_rows();
  GradientBoostedModel model;
  std::array<double, kNumClasses> counts{};
  for (auto label : m.labels) counts[ordinal(label)] += 1.0;
  for (std::size_t c = 0; c < kNumClasses; ++c)
    model.base_score[c] = std::log((counts[c] + 1.0) / (static_cast<double>(n) + kNumClasses));

  std::vector<std::array<double, kNumClasses>> scores(n, model.base_score);
  double loss = mean_log_loss(scores, m.labels);
  model.training_loss.push_back(loss);

  Rng rng(p.seed);
  std::vector<double> gradients(n), hessians(n), weights(n, 1.0);
  std::vector<std::array<double, kNumClasses>> update(n), candidate(n);
  for (std::size_t round = 0; round < rounds; ++round) {
    if (subsample < 1.0) {
      for (auto& w : weights) w = rng.uniform() < subsample ? 1.0 : 0.0;
    }
    std::vector<std::array<double, kNumClasses>> probs(n);
    for (std::size_t i = 0; i < n; ++i) probs[i] = softmax(scores[i]);

    std::vector<Tree> trees(kNumClasses);
    parallel_for(kNumClasses, [&](std::size_t c) {
      std::vector<double> g(n), h(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double y = ordinal(m.labels[i]) == c ? 1.0 : 0.0;
        g[i] = probs[i][c] - y;
        h[i] = std::max(probs[i][c] * (1.0 - probs[i][c]), 1e-16);
      }
      trees[c] = grow_regression_tree(m, g, h, weights, grow);
    });
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < kNumClasses; ++c) update[i][c] = trees[c].leaf_value(m.rows[i])[0];
    }

    // Backtrack the step until the training loss does not increase.
    double step = learning_rate;
    double next_loss = kInf;
    for (int attempt = 0; attempt < 40; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < kNumClasses; ++c) candidate[i][c] = scores[i][c] + step * update[i][c];
      }
      next_loss = mean_log_loss(candidate, m.labels);
      if (next_loss <= loss) break;
      step /= 2.0;
    }
    if (next_loss > loss) {
      step = 0.0;
      next_loss = loss;
    } else {
      scores.swap(candidate);
    }
    loss = next_loss;
    model.rounds.push_back(std::move(trees));
    model.step.push_back(step);
    model.training_loss.push_back(loss);
  }
  return model;
}

KNearestNeighborsModel train_knn(const FeatureMatrix& m, const HyperParams& p) {
  KNearestNeighborsModel model;
  model.k = static_cast<std::size_t>(p.get("k"));
  model.rows.reserve(m.n_rows());
  for (const auto& row : m.rows) model.rows.push_back(unit(row));
  model.labels = m.labels;
  return model;
}

NaiveBayesModel train_bayes(const FeatureMatrix& m, const HyperParams& p) {
  const double alpha = p.get("alpha");
  const bool uniform_prior = p.get("uniform_prior") != 0.0;
  NaiveBayesModel model;
  std::vector<std::vector<double>> mass(kNumClasses, std::vector<double>(m.dim, 0.0));
  std::array<double, kNumClasses> counts{};
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    const auto c = ordinal(m.labels[r]);
    counts[c] += 1.0;
    for (const auto& e : m.rows[r]) mass[c][e.index] += e.weight;
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (uniform_prior)
      model.log_prior[c] = -std::log(static_cast<double>(kNumClasses));
    else
      model.log_prior[c] = counts[c] > 0.0 ? std::log(counts[c] / static_cast<double>(m.n_rows())) : kUnreachableLogProb;
    const double total = std::accumulate(mass[c].begin(), mass[c].end(), 0.0) + alpha * static_cast<double>(m.dim);
    for (auto& v : mass[c]) v = std::log((v + alpha) / total);
  }
  model.log_likelihood = std::move(mass);
  return model;
}

LinearSvmModel train_svm(const FeatureMatrix& m, const HyperParams& p) {
  const double lambda = p.get("lambda");
  const auto epochs = static_cast<std::size_t>(p.get("epochs"));
  const std::size_t n = m.n_rows();

  // One shared visiting order per epoch, identical for every one-vs-rest head.
  std::vector<std::vector<std::size_t>> orders(epochs);
  Rng rng(p.seed);
  for (auto& order : orders) {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
  }

  LinearSvmModel model;
  model.weights.assign(kNumClasses, std::vector<double>(m.dim, 0.0));
  parallel_for(kNumClasses, [&](std::size_t c) {
    // Pegasos: w <- (1 - eta*lambda) w (+ eta*y*x on margin violation), eta = 1/(lambda t).
    // The bias is an extra always-on feature. w is kept as scale * v for sparse updates.
    std::vector<double> v(m.dim, 0.0);
    double v_bias = 0.0;
    double scale = 1.0;
    std::size_t t = 0;
    for (const auto& order : orders) {
      for (auto r : order) {
        ++t;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double y = ordinal(m.labels[r]) == c ? 1.0 : -1.0;
        const double margin = y * scale * (dot(m.rows[r], v) + v_bias);
        const double shrink = 1.0 - eta * lambda;
        if (shrink <= 0.0) {
          std::fill(v.begin(), v.end(), 0.0);
          v_bias = 0.0;
          scale = 1.0;
        } else {
          scale *= shrink;
        }
        if (margin < 1.0) {
          const double step = eta * y / scale;
          for (const auto& e : m.rows[r]) v[e.index] += step * e.weight;
          v_bias += step;
        }
        if (scale < 1e-9) {
          for (auto& w : v) w *= scale;
          v_bias *= scale;
          scale = 1.0;
        }
      }
    }
    for (auto& w : v) w *= scale;
    model.weights[c] = std::move(v);
    model.bias[c] = v_bias * scale;
  });
  return model;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::array<double, kNumClasses> tree_votes(const Tree& tree, const SparseRow& row) {
  const auto& dist = tree.leaf_value(row);
  std::array<double, kNumClasses> out{};
  std::copy(dist.begin(), dist.end(), out.begin());
  return out;
}

}  // namespace

std::string_view kind_name(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::DecisionTree: return "decision_tree";
    case ModelKind::RandomForest: return "random_forest";
    case ModelKind::GradientBoostedTrees: return "gradient_boosted_trees";
    case ModelKind::KNearestNeighbors: return "knn";
    case ModelKind::MultinomialNaiveBayes: return "naive_bayes";
    case ModelKind::LinearSVM: return "linear_svm";
  }
  return "?";
}

std::string_view kind_display_name(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::DecisionTree: return "Decision Tree";
    case ModelKind::RandomForest: return "Random Forest";
    case ModelKind::GradientBoostedTrees: return "Gradient Boosted Trees";
    case ModelKind::KNearestNeighbors: return "k-Nearest Neighbors";
    case ModelKind::MultinomialNaiveBayes: return "Naive Bayes";
    case ModelKind::LinearSVM: return "SVM Linear";
  }
  return "?";
}

ModelKind parse_kind(std::string_view name) {
  std::string key(name);
  for (auto& ch : key) ch = ch == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  for (auto kind : kAllModelKinds) {
    if (kind_name(kind) == key) return kind;
  }
  if (key == "dt" || key == "tree") return ModelKind::DecisionTree;
  if (key == "rf" || key == "forest") return ModelKind::RandomForest;
  if (key == "gbt" || key == "gbdt" || key == "xgboost" || key == "lightgbm") return ModelKind::GradientBoostedTrees;
  if (key == "k_nearest_neighbors" || key == "kneighbors") return ModelKind::KNearestNeighbors;
  if (key == "nb" || key == "multinomial_naive_bayes") return ModelKind::MultinomialNaiveBayes;
  if (key == "svm" || key == "linearsvm") return ModelKind::LinearSVM;
  throw Error(ErrorCode::ConfigError, "unknown model kind '" + std::string(name) + "'");
}

std::span<const ParamSpec> param_specs(ModelKind kind) {
  switch (kind) {
    case ModelKind::DecisionTree: return kTreeParams;
    case ModelKind::RandomForest: return kForestParams;
    case ModelKind::GradientBoostedTrees: return kBoostParams;
    case ModelKind::KNearestNeighbors: return kKnnParams;
    case ModelKind::MultinomialNaiveBayes: return kBayesParams;
    case ModelKind::LinearSVM: return kSvmParams;
  }
  return {};
}

double HyperParams::get(std::string_view key) const {
  auto it = values.find(std::string(key));
  if (it == values.end()) throw Error(ErrorCode::ConfigError, "missing hyperparameter '" + std::string(key) + "'");
  return it->second;
}

HyperParams make_params(ModelKind kind, const std::map<std::string, double>& overrides, std::uint64_t seed) {
  HyperParams params;
  params.seed = seed;
  for (const auto& spec : param_specs(kind)) params.values[std::string(spec.key)] = spec.default_value;
  for (const auto& [key, value] : overrides) {
    const auto specs = param_specs(kind);
    auto spec = std::find_if(specs.begin(), specs.end(), [&](const ParamSpec& s) { return s.key == key; });
    if (spec == specs.end())
      throw Error(ErrorCode::ConfigError, "'" + key + "' is not a parameter of " + std::string(kind_name(kind)));
    if (!(value >= spec->min && value <= spec->max) || (spec->integer && value != std::floor(value)))
      throw Error(ErrorCode::ConfigError, "value " + std::to_string(value) + " out of range for " + key);
    params.values[key] = value;
  }
  return params;
}

ClassLabel ClassDistribution::argmax() const { return label_from_ordinal(argmax_index(probabilities)); }

std::string fingerprint(const FeatureMatrix& matrix) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(matrix.dim);
  for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
    mix(ordinal(matrix.labels[r]));
    mix(matrix.rows[r].size());
    for (const auto& e : matrix.rows[r]) {
      mix(e.index);
      mix(std::bit_cast<std::uint64_t>(e.weight));
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TrainedModel train(ModelKind kind, const FeatureMatrix& matrix, const HyperParams& params) {
  check_trainable(matrix);
  // Re-validate against the kind's table so a foreign params map cannot slip through.
  std::map<std::string, double> overrides(params.values.begin(), params.values.end());
  const HyperParams checked = make_params(kind, overrides, params.seed);

  TrainedModel model;
  model.kind = kind;
  model.dim = matrix.dim;
  model.params = checked;
  model.data_fingerprint = fingerprint(matrix);
  model.training_rows = matrix.n_rows();
  switch (kind) {
    case ModelKind::DecisionTree: model.payload = train_tree(matrix, checked); break;
    case ModelKind::RandomForest: model.payload = train_forest(matrix, checked); break;
    case ModelKind::GradientBoostedTrees: model.payload = train_boosting(matrix, checked); break;
    case ModelKind::KNearestNeighbors: model.payload = train_knn(matrix, checked); break;
    case ModelKind::MultinomialNaiveBayes: model.payload = train_bayes(matrix, checked); break;
    case ModelKind::LinearSVM: model.payload = train_svm(matrix, checked); break;
  }
  return model;
}

std::array<double, kNumClasses> TrainedModel::decision_scores(const SparseRow& row) const {
  for (const auto& e : row) {
    if (e.index >= dim)
      throw Error(ErrorCode::DimensionMismatch,
                  "row references column " + std::to_string(e.index) + " but model dim is " + std::to_string(dim));
  }
  return std::visit(
      Overloaded{
          [&](const DecisionTreeModel& m) { return tree_votes(m.tree, row); },
          [&](const RandomForestModel& m) {
            std::array<double, kNumClasses> votes{};
            for (const auto& tree : m.trees) votes[argmax_index(tree_votes(tree, row))] += 1.0;
            for (auto& v : votes) v /= static_cast<double>(m.trees.size());
            return votes;
          },
          [&](const GradientBoostedModel& m) {
            auto scores = m.base_score;
            for (std::size_t r = 0; r < m.rounds.size(); ++r) {
              if (m.step[r] == 0.0) continue;
              for (std::size_t c = 0; c < kNumClasses; ++c) scores[c] += m.step[r] * m.rounds[r][c].leaf_value(row)[0];
            }
            return softmax(scores);
          },
          [&](const KNearestNeighborsModel& m) {
            const auto query = unit(row);
            std::vector<double> dense(dim, 0.0);
            for (const auto& e : query) dense[e.index] = e.weight;
            std::vector<std::pair<double, std::size_t>> distances(m.rows.size());
            for (std::size_t i = 0; i < m.rows.size(); ++i) distances[i] = {1.0 - dot(m.rows[i], dense), i};
            const std::size_t k = std::min(m.k, distances.size());
            std::partial_sort(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(k), distances.end());
            std::array<double, kNumClasses> votes{};
            for (std::size_t i = 0; i < k; ++i) votes[ordinal(m.labels[distances[i].second])] += 1.0;
            for (auto& v : votes) v /= static_cast<double>(k);
            return votes;
          },
          [&](const NaiveBayesModel& m) {
            auto scores = m.log_prior;
            for (std::size_t c = 0; c < kNumClasses; ++c) scores[c] += dot(row, m.log_likelihood[c]);
            return softmax(scores);
          },
          [&](const LinearSvmModel& m) {
            std::array<double, kNumClasses> margins{};
            for (std::size_t c = 0; c < kNumClasses; ++c) margins[c] = dot(row, m.weights[c]) + m.bias[c];
            return margins;
          },
      },
      payload);
}

ClassLabel TrainedModel::predict(const SparseRow& row) const {
  return label_from_ordinal(argmax_index(decision_scores(row)));
}

ClassDistribution TrainedModel::predict_proba(const SparseRow& row) const {
  if (kind == ModelKind::LinearSVM) throw Error(ErrorCode::Unsupported, "linear SVM produces margins, not probabilities");
  return {decision_scores(row)};
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json rows_to_json(const std::vector<SparseRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    std::vector<std::size_t> idx;
    std::vector<double> w;
    for (const auto& e : row) {
      idx.push_back(e.index);
      w.push_back(e.weight);
    }
    out.push_back({{"i", idx}, {"w", w}});
  }
  return out;
}

std::vector<SparseRow> rows_from_json(const json& j) {
  std::vector<SparseRow> rows;
  for (const auto& r : j) {
    const auto idx = r.at("i").get<std::vector<std::size_t>>();
    const auto w = r.at("w").get<std::vector<double>>();
    if (idx.size() != w.size()) throw Error(ErrorCode::CorruptModel, "sparse row arrays differ in length");
    SparseRow row;
    for (std::size_t k = 0; k < idx.size(); ++k) row.push_back({idx[k], w[k]});
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> label_names(std::span<const ClassLabel> labels) {
  std::vector<std::string> out;
  for (auto l : labels) out.emplace_back(label_name(l));
  return out;
}

std::vector<ClassLabel> labels_from_names(const std::vector<std::string>& names) {
  std::vector<ClassLabel> out;
  for (const auto& n : names) {
    const auto l = parse_label(n);
    if (!l) throw Error(ErrorCode::CorruptModel, "unknown label '" + n + "'");
    out.push_back(*l);
  }
  return out;
}

json payload_to_json(const ModelPayload& payload) {
  return std::visit(
      Overloaded{
          [](const DecisionTreeModel& m) { return json{{"tree", tree_to_json(m.tree)}}; },
          [](const RandomForestModel& m) {
            json trees = json::array();
            for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
            return json{{"trees", trees}};
          },
          [](const GradientBoostedModel& m) {
            json rounds = json::array();
            for (const auto& round : m.rounds) {
              json per_class = json::array();
              for (const auto& t : round) per_class.push_back(tree_to_json(t));
              rounds.push_back(per_class);
            }
            return json{{"base_score", m.base_score}, {"rounds", rounds}, {"step", m.step},
                        {"training_loss", m.training_loss}};
          },
          [](const KNearestNeighborsModel& m) {
            return json{{"k", m.k}, {"rows", rows_to_json(m.rows)}, {"labels", label_names(m.labels)}};
          },
          [](const NaiveBayesModel& m) { return json{{"log_prior", m.log_prior}, {"log_likelihood", m.log_likelihood}}; },
          [](const LinearSvmModel& m) { return json{{"weights", m.weights}, {"bias", m.bias}}; },
      },
      payload);
}

ModelPayload payload_from_json(ModelKind kind, const json& j, std::size_t dim) {
  auto check_matrix = [&](const std::vector<std::vector<double>>& m) {
    if (m.size() != kNumClasses) throw Error(ErrorCode::CorruptModel, "per-class table has wrong class count");
    for (const auto& row : m) {
      if (row.size() != dim) throw Error(ErrorCode::CorruptModel, "per-class table has wrong width");
    }
  };
  switch (kind) {
    case ModelKind::DecisionTree: return DecisionTreeModel{tree_from_json(j.at("tree"))};
    case ModelKind::RandomForest: {
      RandomForestModel m;
      for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
      if (m.trees.empty()) throw Error(ErrorCode::CorruptModel, "forest without trees");
      return m;
    }
    case ModelKind::GradientBoostedTrees: {
      GradientBoostedModel m;
      m.base_score = j.at("base_score").get<std::array<double, kNumClasses>>();
      for (const auto& round : j.at("rounds")) {
        std::vector<Tree> trees;
        for (const auto& t : round) trees.push_back(tree_from_json(t));
        if (trees.size() != kNumClasses) throw Error(ErrorCode::CorruptModel, "boosting round without 8 trees");
        m.rounds.push_back(std::move(trees));
      }
      m.step = j.at("step").get<std::vector<double>>();
      m.training_loss = j.at("training_loss").get<std::vector<double>>();
      if (m.step.size() != m.rounds.size()) throw Error(ErrorCode::CorruptModel, "step count mismatch");
      return m;
    }
    case ModelKind::KNearestNeighbors: {
      KNearestNeighborsModel m;
      m.k = j.at("k").get<std::size_t>();
      m.rows = rows_from_json(j.at("rows"));
      m.labels = labels_from_names(j.at("labels").get<std::vector<std::string>>());
      if (m.rows.size() != m.labels.size() || m.rows.empty() || m.k == 0)
        throw Error(ErrorCode::CorruptModel, "inconsistent neighbor table");
      return m;
    }
    case ModelKind::MultinomialNaiveBayes: {
      NaiveBayesModel m;
      m.log_prior = j.at("log_prior").get<std::array<double, kNumClasses>>();
      m.log_likelihood = j.at("log_likelihood").get<std::vector<std::vector<double>>>();
      check_matrix(m.log_likelihood);
      return m;
    }
    case ModelKind::LinearSVM: {
      LinearSvmModel m;
      m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
      m.bias = j.at("bias").get<std::array<double, kNumClasses>>();
      check_matrix(m.weights);
      return m;
    }
  }
  throw Error(ErrorCode::CorruptModel, "unknown model kind");
}

}  // namespace

json model_to_json(const TrainedModel& model) {
  std::vector<std::string> classes;
  for (auto l : kAllLabels) classes.emplace_back(label_name(l));
  return {{"format_version", kModelFormatVersion},
          {"kind", std::string(kind_name(model.kind))},
          {"dim", model.dim},
          {"classes", classes},
          {"hyperparams", model.params.values},
          {"seed", model.params.seed},
          {"data_fingerprint", model.data_fingerprint},
          {"training_rows", model.training_rows},
          {"payload", payload_to_json(model.payload)}};
}

TrainedModel model_from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("format_version")) throw Error(ErrorCode::CorruptModel, "no format_version");
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw Error(ErrorCode::VersionMismatch, "model format " + std::to_string(version) + ", expected " +
                                                  std::to_string(kModelFormatVersion));
    TrainedModel model;
    try {
      model.kind = parse_kind(j.at("kind").get<std::string>());
    } catch (const Error&) {
      throw Error(ErrorCode::CorruptModel, "unknown model kind");
    }
    model.dim = j.at("dim").get<std::size_t>();
    std::vector<std::string> expected;
    for (auto l : kAllLabels) expected.emplace_back(label_name(l));
    if (j.at("classes").get<std::vector<std::string>>() != expected)
      throw Error(ErrorCode::CorruptModel, "class roster differs from the fixed 8-class list");
    model.params.values = j.at("hyperparams").get<std::map<std::string, double>>();
    model.params.seed = j.at("seed").get<std::uint64_t>();
    model.data_fingerprint = j.at("data_fingerprint").get<std::string>();
    model.training_rows = j.at("training_rows").get<std::size_t>();
    model.payload = payload_from_json(model.kind, j.at("payload"), model.dim);
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptModel, e.what());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << model_to_json(model).dump() << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::CorruptModel, "model file is not valid JSON: " + path.string());
  return model_from_json(j);
}

}  // namespace malclass
