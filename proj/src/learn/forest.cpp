#include "cogload/learn/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cogload/error.hpp"

namespace cogload::learn {

int RfConfig::resolved_mtry(Index d) const {
  if (d < 1) return 0;
  if (mtry > 0) return static_cast<int>(std::min<Index>(mtry, d));
  return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
}

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;  // weighted child impurity, count form
};

double gini_count(int c0, int c1) {
  const int n = c0 + c1;
  if (n == 0) return 0.0;
  return static_cast<double>(n) - static_cast<double>(c0 * c0 + c1 * c1) / static_cast<double>(n);
}

class Builder {
 public:
  Builder(const Eigen::MatrixXd& x, std::span<const int> y, const RfConfig& config, Rng& rng)
      : x_(x), y_(y), config_(config), rng_(rng), mtry_(config.resolved_mtry(x.cols())) {
    order_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(order_.begin(), order_.end(), 0);
  }

  DecisionTree build(std::vector<Index> rows) {
    tree_.nodes.clear();
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<Index> rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    int c1 = 0;
    for (Index r : rows) c1 += y_[static_cast<std::size_t>(r)];
    const int c0 = static_cast<int>(rows.size()) - c1;
    tree_.nodes[static_cast<std::size_t>(id)].count_low = c0;
    tree_.nodes[static_cast<std::size_t>(id)].count_high = c1;

    const bool pure = c0 == 0 || c1 == 0;
    const bool depth_capped = config_.max_depth > 0 && depth >= config_.max_depth;
    if (pure || depth_capped || static_cast<int>(rows.size()) < 2 * config_.min_samples_leaf) return id;

    const Split split = find_split(rows);
    if (split.feature < 0) return id;

    std::vector<Index> left, right;
    for (Index r : rows) (x_(r, split.feature) <= split.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int rgt = grow(std::move(right), depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = rgt;
    return id;
  }

  Split find_split(const std::vector<Index>& rows) {
    rng_.shuffle(order_.begin(), order_.end());
    Split best;
    int evaluated = 0;
    for (int f : order_) {
      if (evaluated >= mtry_ && best.feature >= 0) break;
      ++evaluated;
      scan_feature(rows, f, best);
    }
    return best;
  }

  void scan_feature(const std::vector<Index>& rows, int f, Split& best) {
    sorted_.assign(rows.begin(), rows.end());
    std::sort(sorted_.begin(), sorted_.end(), [&](Index a, Index b) {
      const double va = x_(a, f), vb = x_(b, f);
      return va < vb || (va == vb && a < b);
    });
    const int n = static_cast<int>(sorted_.size());
    int total1 = 0;
    for (Index r : sorted_) total1 += y_[static_cast<std::size_t>(r)];
    const int total0 = n - total1;
    int l0 = 0, l1 = 0;
    const int leaf = config_.min_samples_leaf;
    for (int i = 0; i + 1 < n; ++i) {
      (y_[static_cast<std::size_t>(sorted_[static_cast<std::size_t>(i)])] == kHigh ? l1 : l0) += 1;
      const int nl = i + 1;
      if (nl < leaf) continue;
      if (n - nl < leaf) break;
      const double v = x_(sorted_[static_cast<std::size_t>(i)], f);
      if (v == x_(sorted_[static_cast<std::size_t>(i + 1)], f)) continue;
      const double imp = gini_count(l0, l1) + gini_count(total0 - l0, total1 - l1);
      if (best.feature < 0 || imp < best.impurity) best = {f, v, imp};
    }
  }

  const Eigen::MatrixXd& x_;
  std::span<const int> y_;
  const RfConfig& config_;
  Rng& rng_;
  int mtry_;
  std::vector<int> order_;
  std::vector<Index> sorted_;
  DecisionTree tree_;
};

}  // namespace

DecisionTree fit_tree(const Eigen::MatrixXd& x, std::span<const int> y, std::vector<Index> rows,
                      const RfConfig& config, Rng& rng) {
  if (rows.empty()) throw Error("learn", "EMPTY_DATASET");
  if (config.min_samples_leaf < 1) throw Error("learn", "BAD_CONFIG", "min_samples_leaf must be >= 1");
  return Builder(x, y, config, rng).build(std::move(rows));
}

RandomForest train_forest(const Dataset& data, const RfConfig& config) {
  data.require_trainable();
  if (config.n_trees < 1) throw Error("learn", "BAD_CONFIG", "n_trees must be >= 1");
  RandomForest forest;
  forest.n_features = data.cols();
  const auto n = static_cast<std::uint64_t>(data.rows());
  for (int t = 0; t < config.n_trees; ++t) {
    Rng rng(Rng::derive(config.seed, static_cast<std::uint64_t>(t)));
    std::vector<Index> rows(n);
    if (config.bootstrap) {
      for (auto& r : rows) r = static_cast<Index>(rng.below(n));
    } else {
      std::iota(rows.begin(), rows.end(), Index{0});
    }
    forest.trees.push_back(fit_tree(data.x, data.y, std::move(rows), config, rng));
  }
  return forest;
}

}  // namespace cogload::learn
