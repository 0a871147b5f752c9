#include <cmath>

#include "cogload/cardio.hpp"
#include "oracles/rr.hpp"
#include "support.hpp"

using namespace cogload;
using namespace cogload::cardio;

namespace {

std::vector<RrSample> as_samples(const std::vector<double>& rr) {
  std::vector<RrSample> s;
  std::int64_t t = 0;
  for (double v : rr) {
    t += static_cast<std::int64_t>(v * 1000);
    s.push_back({t, v});
  }
  return s;
}

}  // namespace

TEST(Cardio, FilterExamples) {
  auto a = filter_artifacts(as_samples({800, 810, 790}));
  EXPECT_EQ(a.kept.size(), 3u);
  EXPECT_EQ(a.rejected, 0u);
  auto b = filter_artifacts(as_samples({800, 1200, 810}));
  EXPECT_EQ(b.rejected, 1u);
  EXPECT_EQ(intervals(b.kept), (std::vector<double>{800, 810}));
}

TEST(Cardio, FilterMatchesOracleAndIsIdempotent) {
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> rr(5 + rng.below(100));
    for (auto& v : rr) v = rng.bernoulli(0.1) ? rng.uniform(300, 1800) : rng.normal(800, 40);
    const auto f = filter_artifacts(as_samples(rr), 0.3);
    EXPECT_EQ(intervals(f.kept), oracle::filter_rr(rr, 0.3));
    EXPECT_EQ(f.rejected, rr.size() - f.kept.size());
    EXPECT_EQ(filter_artifacts(f.kept, 0.3).rejected, 0u);
  }
}

TEST(Cardio, Formulas) {
  EXPECT_NEAR(rmssd(std::vector<double>{800, 810, 790, 805}), std::sqrt(725.0 / 3.0), 1e-9);
  EXPECT_NEAR(sdnn(std::vector<double>{800, 820, 780, 800}), std::sqrt(800.0 / 3.0), 1e-9);
  const std::vector<double> flat(10, 800.0);
  EXPECT_EQ(rmssd(flat), 0.0);
  EXPECT_EQ(sdnn(flat), 0.0);
  EXPECT_DOUBLE_EQ(mean_hr(std::vector<double>(5, 800.0)), 75.0);
  EXPECT_DOUBLE_EQ(mean_hr(std::vector<double>(5, 1000.0)), 60.0);
  EXPECT_DOUBLE_EQ(mean_hr(std::vector<double>{600, 1000}), 75.0);
}

TEST(Cardio, TooFewBeats) {
  EXPECT_CODE(rmssd(std::vector<double>{800, 810}), "cardio.TOO_FEW_BEATS");
  EXPECT_CODE(sdnn(std::vector<double>{800, 810}), "cardio.TOO_FEW_BEATS");
  EXPECT_CODE(mean_hr(std::vector<double>{}), "cardio.TOO_FEW_BEATS");
  const auto m = compute_hrv(as_samples({800, 810}));
  EXPECT_FALSE(m.rmssd_ms.has_value());
  EXPECT_TRUE(m.mean_hr_bpm.has_value());
}

TEST(Cardio, TranslationAndScale) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> rr(3 + rng.below(50));
    for (auto& v : rr) v = rng.normal(800, 50);
    const double c = rng.uniform(-100, 100), k = rng.uniform(0.5, 2.0);
    std::vector<double> shifted = rr, scaled = rr;
    for (auto& v : shifted) v += c;
    for (auto& v : scaled) v *= k;
    EXPECT_NEAR(rmssd(shifted), rmssd(rr), 1e-8);
    EXPECT_NEAR(sdnn(shifted), sdnn(rr), 1e-8);
    EXPECT_NEAR(rmssd(scaled), k * rmssd(rr), 1e-8);
    EXPECT_NEAR(sdnn(scaled), k * sdnn(rr), 1e-8);
  }
}

TEST(Cardio, ComputeHrvCountsArtifacts) {
  const auto m = compute_hrv(as_samples({800, 810, 1500, 790, 805}));
  EXPECT_EQ(m.artifacts_rejected, 1u);
  EXPECT_EQ(m.n_beats, 4u);
  EXPECT_NEAR(*m.rmssd_ms, std::sqrt(725.0 / 3.0), 1e-9);
}
