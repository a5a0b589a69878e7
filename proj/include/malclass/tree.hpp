#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "malclass/rng.hpp"
#include "malclass/vectorizer.hpp"

namespace malclass {

/// Rows go left when value <= threshold; absent features read as 0.
struct TreeNode {
  int feature = -1;  ///< -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> value;  ///< class distribution (classification) or a single score (regression)

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  ///< nodes[0] is the root

  const std::vector<double>& leaf_value(const SparseRow& row) const;
  std::size_t depth() const;

  bool operator==(const Tree&) const = default;
};

double feature_value(const SparseRow& row, std::size_t feature);

struct TreeGrowParams {
  std::size_t max_depth = 0;  ///< 0 = unlimited
  std::size_t min_samples_split = 2;
  double min_samples_leaf = 1.0;
  std::size_t max_features = 0;  ///< candidate features per node; 0 or >= dim = all
  double l2_reg = 1.0;            ///< regression trees only
  double min_child_weight = 0.0;  ///< regression trees only (sum of hessians)
};

/// CART with Gini impurity. `row_weights[r]` is the multiplicity of row r (0 excludes it).
/// A node is split only when the best split strictly lowers the weighted impurity; ties go
/// to the lowest feature index, then the lowest threshold. `rng` is only drawn from when
/// max_features restricts the candidate set.
Tree grow_classification_tree(const FeatureMatrix& x, std::span<const double> row_weights,
                              const TreeGrowParams& params, Rng* rng);

/// Second-order regression tree: gain G_L^2/(H_L+l2) + G_R^2/(H_R+l2) - G^2/(H+l2) and
/// leaf value -G/(H+l2). Rows with zero hessian weight are excluded.
Tree grow_regression_tree(const FeatureMatrix& x, std::span<const double> gradients, std::span<const double> hessians,
                          std::span<const double> row_weights, const TreeGrowParams& params);

nlohmann::json tree_to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::json& j);  // throws Error(CorruptModel)

}  // namespace malclass
