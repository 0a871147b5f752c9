#include <cmath>
#include <numeric>

#include "cogload/entropy.hpp"
#include "oracles/entropy.hpp"
#include "support.hpp"

using namespace cogload;
using namespace cogload::entropy;

namespace {

oculo::Fixation at(double x, double y) {
  oculo::Fixation f;
  f.centroid_x_deg = x;
  f.centroid_y_deg = y;
  return f;
}

}  // namespace

TEST(Entropy, Binning) {
  const GazeGrid g;
  std::vector<oculo::Fixation> f{at(0, 0), at(-25, -25), at(999, 999), at(-999, 3.0)};
  const auto bins = bin_fixations(f, g);
  // Bin width 6.25: 0 falls in column 4 and row 4, so 4 * 8 + 4.
  EXPECT_EQ(bins[0], 36);
  EXPECT_EQ(bins[1], 0);
  EXPECT_EQ(bins[2], g.bins() - 1);
  EXPECT_EQ(bins[3], 4 * 8 + 0);
  EXPECT_EQ(bins.size(), f.size());
}

TEST(Entropy, GridValidation) {
  GazeGrid g;
  g.nx = 1;
  EXPECT_CODE(g.validate(), "entropy.BAD_GRID");
  GazeGrid h;
  h.x_max_deg = h.x_min_deg;
  EXPECT_CODE(h.validate(), "entropy.BAD_GRID");
}

TEST(Entropy, StationaryExamples) {
  const GazeGrid g;
  EXPECT_EQ(stationary_entropy(std::vector<int>{5, 5, 5, 5}, g), 0.0);
  EXPECT_EQ(stationary_entropy(std::vector<int>{0, 1, 2, 3}, g), 2.0);
  EXPECT_DOUBLE_EQ(stationary_entropy(std::vector<int>{1, 1, 2, 3}, g), 1.5);
  EXPECT_CODE(stationary_entropy(std::vector<int>{1}, g), "entropy.TOO_FEW_FIXATIONS");
}

TEST(Entropy, TransitionExamples) {
  EXPECT_EQ(transition_entropy(std::vector<int>{0, 1, 0, 1, 0, 1, 0}), 0.0);
  EXPECT_EQ(transition_entropy(std::vector<int>{4, 4, 4, 4}), 0.0);
  // Both rows 50/50: 0->0, 0->1, 1->1, 1->0.
  EXPECT_DOUBLE_EQ(transition_entropy(std::vector<int>{0, 0, 1, 1, 0}), 1.0);
  EXPECT_CODE(transition_entropy(std::vector<int>{1, 2}), "entropy.TOO_FEW_FIXATIONS");
}

TEST(Entropy, MatchesDoubleSumOracle) {
  Rng rng(11);
  const GazeGrid g;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> seq(500);
    const int states = 2 + static_cast<int>(rng.below(30));
    for (auto& b : seq) b = static_cast<int>(rng.below(states));
    EXPECT_NEAR(transition_entropy(seq), oracle::transition_entropy(seq), 1e-12);
    EXPECT_NEAR(stationary_entropy(seq, g), oracle::stationary_entropy(seq), 1e-12);
  }
}

TEST(Entropy, BoundsAndRelabelling) {
  Rng rng(12);
  const GazeGrid g;
  std::vector<int> perm(g.bins());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm.begin(), perm.end());
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> seq(2 + rng.below(200));
    for (auto& b : seq) b = static_cast<int>(rng.below(g.bins()));
    const double hs = stationary_entropy(seq, g);
    EXPECT_GE(hs, 0.0);
    EXPECT_LE(hs, std::log2(g.bins()) + 1e-12);
    std::vector<int> relabelled(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) relabelled[i] = perm[seq[i]];
    EXPECT_NEAR(stationary_entropy(relabelled, g), hs, 1e-12);
    if (seq.size() >= 3) {
      const double ht = transition_entropy(seq);
      EXPECT_GE(ht, 0.0);
      EXPECT_LE(ht, std::log2(g.bins()) + 1e-12);
      EXPECT_NEAR(transition_entropy(relabelled), ht, 1e-12);
    }
  }
  std::vector<int> uniform(g.bins());
  std::iota(uniform.begin(), uniform.end(), 0);
  EXPECT_DOUBLE_EQ(stationary_entropy(uniform, g), std::log2(g.bins()));
}

TEST(Entropy, TransitionMatrixCounts) {
  const std::vector<int> seq{0, 1, 1, 2, 0};
  const auto m = TransitionMatrix::from_sequence(seq, 3);
  EXPECT_EQ(m.transitions(), 4);
  EXPECT_EQ(m.counts(1, 1), 1);
  EXPECT_EQ(m.occupancy(0), 2);
  for (int i = 0; i < 3; ++i) EXPECT_LE(m.counts.row(i).sum(), m.occupancy(i));
}

TEST(Entropy, DependsOnlyOnBins) {
  // Different coordinates, same bins: identical entropies.
  const GazeGrid g;
  std::vector<oculo::Fixation> a{at(1, 1), at(10, 1), at(1, 1), at(-20, 5)};
  std::vector<oculo::Fixation> b{at(2, 3), at(11, 2), at(0.5, 0.2), at(-19, 6)};
  const auto ba = bin_fixations(a, g), bb = bin_fixations(b, g);
  ASSERT_EQ(ba, bb);
  EXPECT_EQ(stationary_entropy(ba, g), stationary_entropy(bb, g));
  EXPECT_EQ(transition_entropy(ba), transition_entropy(bb));
}
