#pragma once

// Gaze aggregation for the privacy profile: fixation centroids are reduced
// to grid-bin indices, and everything downstream sees only the index
// sequence.

#include <span>
#include <vector>

#include <Eigen/Core>

#include "cogload/oculo.hpp"

namespace cogload::entropy {

struct GazeGrid {
  double x_min_deg = -25.0;
  double x_max_deg = 25.0;
  double y_min_deg = -25.0;
  double y_max_deg = 25.0;
  int nx = 8;
  int ny = 8;

  int bins() const { return nx * ny; }
  /// Throws entropy.BAD_GRID.
  void validate() const;
};

/// Row-major bin index (iy * nx + ix) per fixation centroid; out-of-bounds
/// centroids clamp to the nearest edge bin.
std::vector<int> bin_fixations(std::span<const oculo::Fixation> fixations, const GazeGrid& grid);

/// First-order transition counts between consecutive bins plus per-bin
/// occupancy.
struct TransitionMatrix {
  Eigen::MatrixXi counts;
  Eigen::VectorXi occupancy;

  static TransitionMatrix from_sequence(std::span<const int> bins, int n_bins);
  int transitions() const { return counts.sum(); }
};

/// -sum p_i log2 p_i over bin occupancy shares. Throws
/// entropy.TOO_FEW_FIXATIONS below two fixations.
double stationary_entropy(std::span<const int> bins, const GazeGrid& grid);

/// -sum_i p_i sum_j p_ij log2 p_ij with p_i the share of transitions leaving
/// bin i and p_ij the row-normalised transition probability. Throws
/// entropy.TOO_FEW_FIXATIONS below three fixations.
double transition_entropy(std::span<const int> bins);

}  // namespace cogload::entropy
