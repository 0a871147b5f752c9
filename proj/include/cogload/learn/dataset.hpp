#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cogload/features.hpp"

namespace cogload::learn {

using Index = Eigen::Index;

inline constexpr int kLow = 0;
inline constexpr int kHigh = 1;

/// Labelled design matrix. Row i is one window; y(i) is 1 for HIGH.
struct Dataset {
  Eigen::MatrixXd x;
  std::vector<int> y;
  std::vector<std::string> groups;  // participant pseudonym per row
  std::vector<std::string> feature_order;
  features::Profile profile = features::Profile::kRaw;

  Index rows() const { return x.rows(); }
  Index cols() const { return x.cols(); }
  bool has_both_classes() const;

  /// Throws learn.EMPTY_DATASET or learn.SINGLE_CLASS.
  void require_trainable() const;

  Dataset subset(std::span<const Index> rows) const;

  /// Labelled, inferable vectors with every feature in `feature_order`
  /// present; other rows are skipped. Throws learn.UNKNOWN_FEATURE for
  /// names outside the registry.
  static Dataset from_vectors(std::span<const features::FeatureVector> vectors,
                              std::vector<std::string> feature_order, features::Profile profile);

  /// Row-wise concatenation; throws learn.PROFILE_MISMATCH or
  /// learn.FEATURE_ORDER_MISMATCH.
  static Dataset concat(const Dataset& a, const Dataset& b);
};

/// Column names whose values are constant over the dataset.
std::vector<std::string> constant_features(const Dataset& d);

/// Same dataset restricted (and reordered) to `names`.
Dataset select_features(const Dataset& d, const std::vector<std::string>& names);

/// Per-feature z-scoring fitted on training rows only.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // population standard deviation

  /// Throws learn.CONSTANT_FEATURE when a column has zero spread.
  static Standardizer fit(const Eigen::MatrixXd& x);

  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  }
};

}  // namespace cogload::learn
