#include "cogload/learn/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace cogload::learn {

bool Dataset::has_both_classes() const {
  bool low = false, high = false;
  for (int v : y) (v == kHigh ? high : low) = true;
  return low && high;
}

void Dataset::require_trainable() const {
  if (rows() == 0) throw Error("learn", "EMPTY_DATASET");
  if (!has_both_classes()) throw Error("learn", "SINGLE_CLASS");
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Dataset d;
  d.feature_order = feature_order;
  d.profile = profile;
  d.x.resize(static_cast<Index>(rows.size()), cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d.x.row(static_cast<Index>(i)) = x.row(rows[i]);
    d.y.push_back(y[static_cast<std::size_t>(rows[i])]);
    d.groups.push_back(groups[static_cast<std::size_t>(rows[i])]);
  }
  return d;
}

Dataset Dataset::from_vectors(std::span<const features::FeatureVector> vectors,
                              std::vector<std::string> feature_order, features::Profile profile) {
  for (const auto& name : feature_order) {
    if (features::find_feature(name) == nullptr) throw Error("learn", "UNKNOWN_FEATURE", name);
  }
  std::vector<const features::FeatureVector*> keep;
  for (const auto& v : vectors) {
    if (!v.label || !v.inferable) continue;
    const bool complete = std::all_of(feature_order.begin(), feature_order.end(),
                                      [&v](const std::string& n) { return v.get(n).has_value(); });
    if (complete) keep.push_back(&v);
  }
  Dataset d;
  d.feature_order = std::move(feature_order);
  d.profile = profile;
  d.x.resize(static_cast<Index>(keep.size()), static_cast<Index>(d.feature_order.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (std::size_t j = 0; j < d.feature_order.size(); ++j) {
      d.x(static_cast<Index>(i), static_cast<Index>(j)) = *keep[i]->get(d.feature_order[j]);
    }
    d.y.push_back(*keep[i]->label == features::LoadLabel::kHigh ? kHigh : kLow);
    d.groups.push_back(keep[i]->participant);
  }
  return d;
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b) {
  if (a.profile != b.profile) throw Error("learn", "PROFILE_MISMATCH");
  if (a.feature_order != b.feature_order) throw Error("learn", "FEATURE_ORDER_MISMATCH");
  Dataset d;
  d.feature_order = a.feature_order;
  d.profile = a.profile;
  d.x.resize(a.rows() + b.rows(), a.cols());
  d.x << a.x, b.x;
  d.y = a.y;
  d.y.insert(d.y.end(), b.y.begin(), b.y.end());
  d.groups = a.groups;
  d.groups.insert(d.groups.end(), b.groups.begin(), b.groups.end());
  return d;
}

std::vector<std::string> constant_features(const Dataset& d) {
  std::vector<std::string> out;
  for (Index j = 0; j < d.cols(); ++j) {
    if (d.rows() == 0 || d.x.col(j).minCoeff() == d.x.col(j).maxCoeff()) {
      out.push_back(d.feature_order[static_cast<std::size_t>(j)]);
    }
  }
  return out;
}

Dataset select_features(const Dataset& d, const std::vector<std::string>& names) {
  Dataset out;
  out.profile = d.profile;
  out.feature_order = names;
  out.y = d.y;
  out.groups = d.groups;
  out.x.resize(d.rows(), static_cast<Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    auto it = std::find(d.feature_order.begin(), d.feature_order.end(), names[j]);
    if (it == d.feature_order.end()) throw Error("learn", "MISSING_FEATURE", names[j]);
    out.x.col(static_cast<Index>(j)) = d.x.col(it - d.feature_order.begin());
  }
  return out;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) throw Error("learn", "EMPTY_DATASET");
  Standardizer s;
  s.mean = x.colwise().mean().transpose();
  s.scale = ((x.rowwise() - s.mean.transpose()).array().square().colwise().sum() / static_cast<double>(x.rows()))
                .sqrt()
                .transpose();
  for (Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale(j) > 0.0)) throw Error("learn", "CONSTANT_FEATURE", "column " + std::to_string(j));
  }
  return s;
}

}  // namespace cogload::learn
