#pragma once

// Random forest of CART trees with Gini splits.
//
// A split sends rows with x[feature] <= threshold left. The threshold is the
// largest training value on the left side, so any strictly increasing
// transform of a feature moves thresholds without changing which rows go
// where.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cogload/learn/dataset.hpp"
#include "cogload/random.hpp"

namespace cogload::learn {

struct RfConfig {
  int n_trees = 100;
  int max_depth = 0;  // 0 = unlimited
  int min_samples_leaf = 2;
  int mtry = 0;  // 0 = ceil(sqrt(d))
  std::uint64_t seed = 0;
  bool bootstrap = true;

  int resolved_mtry(Index d) const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int count_low = 0;
  int count_high = 0;

  bool leaf() const noexcept { return feature < 0; }
};

class DecisionTree {
 public:
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  /// Leaf majority, ties to LOW.
  template <typename Row>
  int vote(const Row& x) const {
    const TreeNode* n = &nodes.front();
    while (!n->leaf()) n = &nodes[static_cast<std::size_t>(x(n->feature) <= n->threshold ? n->left : n->right)];
    return n->count_high > n->count_low ? kHigh : kLow;
  }

  int depth() const;
};

/// Grows one tree on `rows` of (x, y). Candidate features at each node are
/// visited in a random order; the first `mtry` are evaluated, and further
/// ones only while none of those admits a split.
DecisionTree fit_tree(const Eigen::MatrixXd& x, std::span<const int> y, std::vector<Index> rows,
                      const RfConfig& config, Rng& rng);

class RandomForest {
 public:
  std::vector<DecisionTree> trees;
  Index n_features = 0;

  /// Fraction of trees voting HIGH.
  template <typename Row>
  double score(const Row& x) const {
    int high = 0;
    for (const auto& t : trees) high += t.vote(x);
    return static_cast<double>(high) / static_cast<double>(trees.size());
  }
};

/// Throws learn.EMPTY_DATASET or learn.SINGLE_CLASS. Tree i uses the seed
/// Rng::derive(config.seed, i).
RandomForest train_forest(const Dataset& data, const RfConfig& config);

}  // namespace cogload::learn
