#include "cogload/cardio.hpp"

#include <cmath>

#include <Eigen/Core>

namespace cogload::cardio {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

void require_beats(std::span<const double> rr, std::size_t n) {
  if (rr.size() < n) throw Error("cardio", "TOO_FEW_BEATS", std::to_string(rr.size()) + " intervals");
}

}  // namespace

FilteredRr filter_artifacts(std::span<const RrSample> rr, double max_rel_jump) {
  FilteredRr out;
  out.kept.reserve(rr.size());
  for (const auto& s : rr) {
    if (!out.kept.empty()) {
      const double prev = out.kept.back().rr_ms;
      if (std::abs(s.rr_ms - prev) > max_rel_jump * prev) {
        ++out.rejected;
        continue;
      }
    }
    out.kept.push_back(s);
  }
  return out;
}

double rmssd(std::span<const double> rr_ms) {
  require_beats(rr_ms, 3);
  const auto v = as_vector(rr_ms);
  const Eigen::Index n = v.size();
  const double ss = (v.tail(n - 1) - v.head(n - 1)).squaredNorm();
  return std::sqrt(ss / static_cast<double>(n - 1));
}

double sdnn(std::span<const double> rr_ms) {
  require_beats(rr_ms, 3);
  const auto v = as_vector(rr_ms);
  const double mean = v.mean();
  const double ss = (v.array() - mean).square().sum();
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double mean_hr(std::span<const double> rr_ms) {
  require_beats(rr_ms, 1);
  return 60000.0 / as_vector(rr_ms).mean();
}

std::vector<double> intervals(std::span<const RrSample> rr) {
  std::vector<double> out;
  out.reserve(rr.size());
  for (const auto& s : rr) out.push_back(s.rr_ms);
  return out;
}

HrvMetrics compute_hrv(std::span<const RrSample> rr, double max_rel_jump) {
  HrvMetrics m;
  const auto filtered = filter_artifacts(rr, max_rel_jump);
  const auto v = intervals(filtered.kept);
  m.n_beats = v.size();
  m.artifacts_rejected = filtered.rejected;
  if (v.size() >= 3) {
    m.rmssd_ms = rmssd(v);
    m.sdnn_ms = sdnn(v);
  }
  if (!v.empty()) m.mean_hr_bpm = mean_hr(v);
  return m;
}

}  // namespace cogload::cardio
