#include "malclass/tree.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <set>

#include "malclass/error.hpp"
#include "malclass/labels.hpp"

namespace malclass {

const std::vector<double>& Tree::leaf_value(const SparseRow& row) const {
  std::size_t at = 0;
  while (!nodes[at].is_leaf()) {
    const auto& node = nodes[at];
    at = static_cast<std::size_t>(feature_value(row, static_cast<std::size_t>(node.feature)) <= node.threshold
                                      ? node.left
                                      : node.right);
  }
  return nodes[at].value;
}

std::size_t Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  // Children always follow their parent in preorder.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

double feature_value(const SparseRow& row, std::size_t feature) {
  auto it = std::lower_bound(row.begin(), row.end(), feature,
                             [](const SparseEntry& e, std::size_t f) { return e.index < f; });
  return it != row.end() && it->index == feature ? it->weight : 0.0;
}

namespace {

constexpr double kGainEpsilon = 1e-12;

struct GiniCriterion {
  struct Stats {
    std::array<double, kNumClasses> counts{};
    double weight = 0.0;

    void add(const Stats& o) {
      for (std::size_t c = 0; c < kNumClasses; ++c) counts[c] += o.counts[c];
      weight += o.weight;
    }
    Stats minus(const Stats& o) const {
      Stats s = *this;
      for (std::size_t c = 0; c < kNumClasses; ++c) s.counts[c] -= o.counts[c];
      s.weight -= o.weight;
      return s;
    }
  };

  std::span<const ClassLabel> labels;
  std::span<const double> weights;

  Stats row_stats(std::size_t r) const {
    Stats s;
    s.counts[ordinal(labels[r])] = weights[r];
    s.weight = weights[r];
    return s;
  }
  // Weighted impurity is W - sum(c^2)/W; the gain only needs the sum(c^2)/W part.
  double score(const Stats& s) const {
    if (s.weight <= 0.0) return 0.0;
    double sq = 0.0;
    for (double c : s.counts) sq += c * c;
    return sq / s.weight;
  }
  bool pure(const Stats& s) const {
    return std::count_if(s.counts.begin(), s.counts.end(), [](double c) { return c > 0.0; }) <= 1;
  }
  bool child_ok(const Stats& s, const TreeGrowParams& p) const { return s.weight >= p.min_samples_leaf; }
  std::vector<double> leaf(const Stats& s) const {
    std::vector<double> dist(kNumClasses, 0.0);
    for (std::size_t c = 0; c < kNumClasses; ++c) dist[c] = s.weight > 0.0 ? s.counts[c] / s.weight : 0.0;
    return dist;
  }
};

struct NewtonCriterion {
  struct Stats {
    double g = 0.0;
    double h = 0.0;
    double weight = 0.0;

    void add(const Stats& o) {
      g += o.g;
      h += o.h;
      weight += o.weight;
    }
    Stats minus(const Stats& o) const { return {g - o.g, h - o.h, weight - o.weight}; }
  };

  std::span<const double> gradients;
  std::span<const double> hessians;
  std::span<const double> weights;
  double l2 = 1.0;

  Stats row_stats(std::size_t r) const { return {gradients[r] * weights[r], hessians[r] * weights[r], weights[r]}; }
  double score(const Stats& s) const { return s.g * s.g / (s.h + l2); }
  bool pure(const Stats&) const { return false; }
  bool child_ok(const Stats& s, const TreeGrowParams& p) const {
    return s.weight >= p.min_samples_leaf && s.h >= p.min_child_weight;
  }
  std::vector<double> leaf(const Stats& s) const { return {-s.g / (s.h + l2)}; }
};

template <typename Criterion>
class TreeGrower {
 public:
  using Stats = typename Criterion::Stats;

  TreeGrower(const FeatureMatrix& x, const Criterion& criterion, std::span<const double> weights,
             const TreeGrowParams& params, Rng* rng)
      : x_(x), criterion_(criterion), weights_(weights), params_(params), rng_(rng),
        buckets_(x.dim), candidate_(x.dim, 0) {}

  Tree grow() {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < x_.n_rows(); ++r) {
      if (weights_[r] > 0.0) rows.push_back(r);
    }
    Tree tree;
    build(tree, rows, 0);
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  struct Group {
    double value;
    Stats stats;
  };

  int build(Tree& tree, const std::vector<std::size_t>& rows, std::size_t depth) {
    Stats total;
    for (auto r : rows) total.add(criterion_.row_stats(r));

    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.back().value = criterion_.leaf(total);

    const bool depth_left = params_.max_depth == 0 || depth < params_.max_depth;
    if (!depth_left || rows.size() < params_.min_samples_split || criterion_.pure(total)) return id;

    const Split split = best_split(rows, total);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left_rows, right_rows;
    for (auto r : rows) {
      if (feature_value(x_.rows[r], static_cast<std::size_t>(split.feature)) <= split.threshold)
        left_rows.push_back(r);
      else
        right_rows.push_back(r);
    }
    tree.nodes[id].feature = split.feature;
    tree.nodes[id].threshold = split.threshold;
    const int left = build(tree, left_rows, depth + 1);
    const int right = build(tree, right_rows, depth + 1);
    tree.nodes[id].left = left;
    tree.nodes[id].right = right;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t dim = x_.dim;
    std::vector<std::size_t> features;
    if (params_.max_features == 0 || params_.max_features >= dim || rng_ == nullptr) {
      features.resize(dim);
      std::iota(features.begin(), features.end(), std::size_t{0});
      return features;
    }
    // Floyd's sampling of max_features distinct indices.
    std::set<std::size_t> chosen;
    for (std::size_t j = dim - params_.max_features; j < dim; ++j) {
      const auto t = static_cast<std::size_t>(rng_->below(j + 1));
      if (!chosen.insert(t).second) chosen.insert(j);
    }
    return {chosen.begin(), chosen.end()};
  }

  Split best_split(const std::vector<std::size_t>& rows, const Stats& total) {
    const auto features = candidate_features();
    for (auto f : features) candidate_[f] = 1;

    std::vector<std::size_t> touched;
    for (auto r : rows) {
      for (const auto& e : x_.rows[r]) {
        if (!candidate_[e.index]) continue;
        auto& bucket = buckets_[e.index];
        if (bucket.empty()) touched.push_back(e.index);
        bucket.push_back({e.weight, r});
      }
    }
    std::sort(touched.begin(), touched.end());

    const double parent_score = criterion_.score(total);
    Split best;
    std::vector<Group> groups;
    for (auto f : touched) {
      auto& bucket = buckets_[f];
      std::sort(bucket.begin(), bucket.end());
      groups.clear();
      Stats nonzero;
      for (const auto& [value, r] : bucket) {
        const Stats s = criterion_.row_stats(r);
        nonzero.add(s);
        if (!groups.empty() && groups.back().value == value)
          groups.back().stats.add(s);
        else
          groups.push_back({value, s});
      }
      if (bucket.size() < rows.size()) {
        const Group zeros{0.0, total.minus(nonzero)};
        auto pos = std::lower_bound(groups.begin(), groups.end(), 0.0,
                                    [](const Group& g, double v) { return g.value < v; });
        groups.insert(pos, zeros);
      }

      Stats left;
      for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
        left.add(groups[g].stats);
        const Stats right = total.minus(left);
        if (!criterion_.child_ok(left, params_) || !criterion_.child_ok(right, params_)) continue;
        const double gain = criterion_.score(left) + criterion_.score(right) - parent_score;
        if (gain > best.gain + kGainEpsilon) {
          const double lo = groups[g].value;
          const double hi = groups[g + 1].value;
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          best = {static_cast<int>(f), threshold, gain};
        }
      }
    }

    for (auto f : touched) buckets_[f].clear();
    for (auto f : features) candidate_[f] = 0;
    if (best.gain <= kGainEpsilon) best.feature = -1;
    return best;
  }

  const FeatureMatrix& x_;
  Criterion criterion_;
  std::span<const double> weights_;
  TreeGrowParams params_;
  Rng* rng_;
  std::vector<std::vector<std::pair<double, std::size_t>>> buckets_;
  std::vector<unsigned char> candidate_;
};

}  // namespace

Tree grow_classification_tree(const FeatureMatrix& x, std::span<const double> row_weights,
                              const TreeGrowParams& params, Rng* rng) {
  GiniCriterion criterion{x.labels, row_weights};
  return TreeGrower<GiniCriterion>(x, criterion, row_weights, params, rng).grow();
}

Tree grow_regression_tree(const FeatureMatrix& x, std::span<const double> gradients, std::span<const double> hessians,
                          std::span<const double> row_weights, const TreeGrowParams& params) {
  NewtonCriterion criterion{gradients, hessians, row_weights, params.l2_reg};
  return TreeGrower<NewtonCriterion>(x, criterion, row_weights, params, nullptr).grow();
}

nlohmann::json tree_to_json(const Tree& tree) {
  nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                 left = nlohmann::json::array(), right = nlohmann::json::array(), value = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

Tree tree_from_json(const nlohmann::json& j) {
  try {
    const auto feature = j.at("feature").get<std::vector<int>>();
    const auto threshold = j.at("threshold").get<std::vector<double>>();
    const auto left = j.at("left").get<std::vector<int>>();
    const auto right = j.at("right").get<std::vector<int>>();
    const auto value = j.at("value").get<std::vector<std::vector<double>>>();
    const std::size_t n = feature.size();
    if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n)
      throw Error(ErrorCode::CorruptModel, "tree arrays have inconsistent lengths");
    Tree tree;
    tree.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& node = tree.nodes[i];
      node = {feature[i], threshold[i], left[i], right[i], value[i]};
      if (!node.is_leaf()) {
        auto valid = [&](int child) { return child > static_cast<int>(i) && child < static_cast<int>(n); };
        if (!valid(node.left) || !valid(node.right)) throw Error(ErrorCode::CorruptModel, "tree child out of range");
      }
    }
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptModel, std::string("tree: ") + e.what());
  }
}

}  // namespace malclass
