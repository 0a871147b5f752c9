#pragma once

// Binary classification metrics with HIGH as the positive class, and
// participant-grouped fold assignment.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cogload/learn/dataset.hpp"

namespace cogload::learn {

struct Confusion {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;

  long n() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const Confusion&) const = default;
};

/// A metric whose denominator is zero is left empty rather than reported as 0.
struct ClassificationMetrics {
  Confusion confusion;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> auc_roc;
};

ClassificationMetrics metrics_from_confusion(const Confusion& c);

/// Predicted label is HIGH iff score >= 0.5.
Confusion confusion_at(std::span<const int> y, std::span<const double> scores, double threshold = 0.5);

/// P(score of a random HIGH > score of a random LOW), ties counted 1/2.
/// Empty when either class is absent.
std::optional<double> auc_pairwise(std::span<const int> y, std::span<const double> scores);

/// Area under the empirical ROC curve by the trapezoid rule, tied scores
/// grouped into one step.
std::optional<double> auc_trapezoid(std::span<const int> y, std::span<const double> scores);

ClassificationMetrics score_predictions(std::span<const int> y, std::span<const double> scores);

/// Throws learn.UNDEFINED_METRIC for an empty value.
double require_metric(const std::optional<double>& value, const char* name);

struct Fold {
  std::vector<Index> train;
  std::vector<Index> test;
  std::vector<std::string> test_groups;
};

/// Distinct groups (sorted, then shuffled by `seed`) are cut into k
/// contiguous chunks; the first (G mod k) chunks hold one extra group.
/// Throws learn.TOO_FEW_GROUPS when there are fewer than k groups.
std::vector<Fold> grouped_kfold(std::span<const std::string> groups, int k, std::uint64_t seed);

struct FoldReport {
  int fold = 0;
  std::vector<std::string> test_groups;
  ClassificationMetrics metrics;
};

struct EvalReport {
  ClassificationMetrics window;       // one row per window
  ClassificationMetrics participant;  // majority vote over each participant's windows
  std::vector<FoldReport> folds;
  long rows = 0;
};

/// Window-level and participant-level metrics from pooled test predictions.
/// A participant's predicted label is HIGH when at least half of their
/// windows are predicted HIGH; the true label is the majority of their
/// window labels (ties HIGH) and the ranking score is the mean window score.
EvalReport summarize(std::span<const int> y, std::span<const double> scores, std::span<const std::string> groups);

std::string eval_report_json(const EvalReport&);

}  // namespace cogload::learn
