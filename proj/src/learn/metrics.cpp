#include "cogload/learn/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include <json.hpp>

#include "cogload/error.hpp"
#include "cogload/random.hpp"

namespace cogload::learn {

ClassificationMetrics metrics_from_confusion(const Confusion& c) {
  ClassificationMetrics m;
  m.confusion = c;
  if (c.n() > 0) m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.n());
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

Confusion confusion_at(std::span<const int> y, std::span<const double> scores, double threshold) {
  if (y.size() != scores.size()) throw InvariantBreach("label/score length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool truth = y[i] == kHigh;
    if (pred && truth) ++c.tp;
    else if (pred) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  return c;
}

std::optional<double> auc_pairwise(std::span<const int> y, std::span<const double> scores) {
  std::vector<double> high, low;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] == kHigh ? high : low).push_back(scores[i]);
  if (high.empty() || low.empty()) return std::nullopt;
  // Count pairs by merging sorted lists instead of the O(n^2) double loop.
  std::sort(high.begin(), high.end());
  std::sort(low.begin(), low.end());
  double wins = 0.0;
  std::size_t below = 0, equal_end = 0;
  for (double h : high) {
    while (below < low.size() && low[below] < h) ++below;
    equal_end = std::max(equal_end, below);
    while (equal_end < low.size() && low[equal_end] == h) ++equal_end;
    wins += static_cast<double>(below) + 0.5 * static_cast<double>(equal_end - below);
  }
  return wins / (static_cast<double>(high.size()) * static_cast<double>(low.size()));
}

std::optional<double> auc_trapezoid(std::span<const int> y, std::span<const double> scores) {
  long pos = 0, neg = 0;
  for (int v : y) (v == kHigh ? pos : neg) += 1;
  if (pos == 0 || neg == 0) return std::nullopt;
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  // Integer counts until the end so the area is exact for small inputs.
  double area2 = 0.0;  // twice the area, in units of (1/pos)(1/neg)
  long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    long dtp = 0, dfp = 0;
    const double s = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == s) {
      (y[idx[i]] == kHigh ? dtp : dfp) += 1;
      ++i;
    }
    area2 += static_cast<double>(dfp) * static_cast<double>(2 * tp + dtp);
    tp += dtp;
    fp += dfp;
  }
  return area2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

ClassificationMetrics score_predictions(std::span<const int> y, std::span<const double> scores) {
  ClassificationMetrics m = metrics_from_confusion(confusion_at(y, scores));
  m.auc_roc = auc_pairwise(y, scores);
  return m;
}

double require_metric(const std::optional<double>& value, const char* name) {
  if (!value) throw Error("learn", "UNDEFINED_METRIC", name);
  return *value;
}

std::vector<Fold> grouped_kfold(std::span<const std::string> groups, int k, std::uint64_t seed) {
  if (k < 2) throw Error("learn", "BAD_CONFIG", "k must be >= 2");
  std::vector<std::string> distinct(groups.begin(), groups.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const auto g = static_cast<int>(distinct.size());
  if (g < k) {
    throw Error("learn", "TOO_FEW_GROUPS", std::to_string(g) + " groups for " + std::to_string(k) + " folds");
  }
  Rng rng(seed);
  rng.shuffle(distinct.begin(), distinct.end());

  std::map<std::string, int> fold_of;
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  int pos = 0;
  for (int f = 0; f < k; ++f) {
    const int size = g / k + (f < g % k ? 1 : 0);
    for (int j = 0; j < size; ++j, ++pos) {
      fold_of[distinct[static_cast<std::size_t>(pos)]] = f;
      folds[static_cast<std::size_t>(f)].test_groups.push_back(distinct[static_cast<std::size_t>(pos)]);
    }
  }
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const int f = fold_of.at(groups[i]);
    for (int h = 0; h < k; ++h) {
      (h == f ? folds[static_cast<std::size_t>(h)].test : folds[static_cast<std::size_t>(h)].train)
          .push_back(static_cast<Index>(i));
    }
  }
  return folds;
}

EvalReport summarize(std::span<const int> y, std::span<const double> scores, std::span<const std::string> groups) {
  EvalReport r;
  r.rows = static_cast<long>(y.size());
  r.window = score_predictions(y, scores);

  struct Tally {
    int n = 0, true_high = 0, pred_high = 0;
    double score_sum = 0.0;
  };
  std::map<std::string, Tally> by;
  for (std::size_t i = 0; i < y.size(); ++i) {
    Tally& t = by[groups[i]];
    ++t.n;
    t.true_high += y[i];
    t.pred_high += scores[i] >= 0.5 ? 1 : 0;
    t.score_sum += scores[i];
  }
  std::vector<int> py;
  std::vector<double> pvote, pscore;
  for (const auto& [name, t] : by) {
    py.push_back(2 * t.true_high >= t.n ? kHigh : kLow);
    pvote.push_back(2 * t.pred_high >= t.n ? 1.0 : 0.0);
    pscore.push_back(t.score_sum / t.n);
  }
  r.participant = metrics_from_confusion(confusion_at(py, pvote));
  r.participant.auc_roc = auc_pairwise(py, pscore);
  return r;
}

namespace {

nlohmann::ordered_json opt(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json metrics_json(const ClassificationMetrics& m) {
  nlohmann::ordered_json j;
  j["accuracy"] = opt(m.accuracy);
  j["precision"] = opt(m.precision);
  j["recall"] = opt(m.recall);
  j["f1"] = opt(m.f1);
  j["auc_roc"] = opt(m.auc_roc);
  j["confusion"] = {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"fn", m.confusion.fn}, {"tn", m.confusion.tn}};
  return j;
}

}  // namespace

std::string eval_report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["rows"] = r.rows;
  j["window"] = metrics_json(r.window);
  j["participant"] = metrics_json(r.participant);
  j["folds"] = nlohmann::ordered_json::array();
  for (const auto& f : r.folds) {
    nlohmann::ordered_json fj;
    fj["fold"] = f.fold;
    fj["test_groups"] = f.test_groups;
    fj["metrics"] = metrics_json(f.metrics);
    j["folds"].push_back(fj);
  }
  return j.dump(2);
}

}  // namespace cogload::learn
