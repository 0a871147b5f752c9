#pragma once

// Exhaustive best split of one feature by weighted Gini impurity over every
// midpoint between distinct sorted values.

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

struct Split {
  double threshold;
  double impurity;
};

inline double gini(double a, double b) {
  const double n = a + b;
  if (n == 0) return 0.0;
  return 1.0 - (a / n) * (a / n) - (b / n) * (b / n);
}

inline std::optional<Split> best_split(const std::vector<double>& x, const std::vector<int>& y, int min_leaf) {
  std::vector<double> vals = x;
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  std::optional<Split> best;
  for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
    const double thr = 0.5 * (vals[k] + vals[k + 1]);
    double l0 = 0, l1 = 0, r0 = 0, r1 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] <= thr) {
        (y[i] ? l1 : l0) += 1;
      } else {
        (y[i] ? r1 : r0) += 1;
      }
    }
    if (l0 + l1 < min_leaf || r0 + r1 < min_leaf) continue;
    const double n = static_cast<double>(x.size());
    const double imp = (l0 + l1) / n * gini(l0, l1) + (r0 + r1) / n * gini(r0, r1);
    if (!best || imp < best->impurity) best = Split{thr, imp};
  }
  return best;
}

}  // namespace oracle
