#include "cogload/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cogload::entropy {

void GazeGrid::validate() const {
  if (nx < 2 || ny < 2) throw Error("entropy", "BAD_GRID", "nx, ny must be >= 2");
  if (!std::isfinite(x_min_deg) || !std::isfinite(x_max_deg) || !std::isfinite(y_min_deg) ||
      !std::isfinite(y_max_deg) || !(x_max_deg > x_min_deg) || !(y_max_deg > y_min_deg)) {
    throw Error("entropy", "BAD_GRID", "bounds must be finite with max > min");
  }
}

namespace {

int axis_bin(double v, double lo, double hi, int n) {
  const double pos = (v - lo) / (hi - lo) * n;
  if (!(pos >= 0.0)) return 0;
  if (pos >= n) return n - 1;
  return static_cast<int>(std::floor(pos));
}

double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

void check_bins(std::span<const int> bins, int n_bins) {
  for (int b : bins) {
    if (b < 0 || b >= n_bins) throw Error("entropy", "BAD_BIN", "bin index " + std::to_string(b));
  }
}

}  // namespace

std::vector<int> bin_fixations(std::span<const oculo::Fixation> fixations, const GazeGrid& grid) {
  grid.validate();
  std::vector<int> out;
  out.reserve(fixations.size());
  for (const auto& f : fixations) {
    const int ix = axis_bin(f.centroid_x_deg, grid.x_min_deg, grid.x_max_deg, grid.nx);
    const int iy = axis_bin(f.centroid_y_deg, grid.y_min_deg, grid.y_max_deg, grid.ny);
    out.push_back(iy * grid.nx + ix);
  }
  return out;
}

TransitionMatrix TransitionMatrix::from_sequence(std::span<const int> bins, int n_bins) {
  check_bins(bins, n_bins);
  TransitionMatrix m;
  m.counts = Eigen::MatrixXi::Zero(n_bins, n_bins);
  m.occupancy = Eigen::VectorXi::Zero(n_bins);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    ++m.occupancy(bins[i]);
    if (i + 1 < bins.size()) ++m.counts(bins[i], bins[i + 1]);
  }
  return m;
}

double stationary_entropy(std::span<const int> bins, const GazeGrid& grid) {
  if (bins.size() < 2) throw Error("entropy", "TOO_FEW_FIXATIONS");
  const auto m = TransitionMatrix::from_sequence(bins, grid.bins());
  const double n = static_cast<double>(bins.size());
  double h = 0.0;
  for (int i = 0; i < m.occupancy.size(); ++i) h -= plogp(m.occupancy(i) / n);
  return std::max(0.0, h);
}

double transition_entropy(std::span<const int> bins) {
  if (bins.size() < 3) throw Error("entropy", "TOO_FEW_FIXATIONS");
  int n_bins = 0;
  for (int b : bins) n_bins = std::max(n_bins, b + 1);
  const auto m = TransitionMatrix::from_sequence(bins, n_bins);
  const Eigen::VectorXi rows = m.counts.rowwise().sum();
  const double total = static_cast<double>(m.transitions());
  double h = 0.0;
  for (int i = 0; i < n_bins; ++i) {
    if (rows(i) == 0) continue;
    const double r = rows(i);
    double row_h = 0.0;
    for (int j = 0; j < n_bins; ++j) row_h -= plogp(m.counts(i, j) / r);
    h += (r / total) * row_h;
  }
  return std::max(0.0, h);
}

}  // namespace cogload::entropy
