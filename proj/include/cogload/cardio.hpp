#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cogload/protocol.hpp"

namespace cogload::cardio {

using protocol::RrSample;

struct HrvMetrics {
  std::optional<double> rmssd_ms;
  std::optional<double> sdnn_ms;
  std::optional<double> mean_hr_bpm;
  std::size_t n_beats = 0;
  std::size_t artifacts_rejected = 0;
};

struct FilteredRr {
  std::vector<RrSample> kept;
  std::size_t rejected = 0;
};

/// Successive-jump artifact rule: an interval is dropped when it differs from
/// the previous accepted interval by more than `max_rel_jump` of that
/// interval. The first interval is always accepted.
FilteredRr filter_artifacts(std::span<const RrSample> rr, double max_rel_jump = 0.30);

// The metric functions throw cardio.TOO_FEW_BEATS below their minimum count
// (3 for rmssd/sdnn, 1 for mean_hr).
double rmssd(std::span<const double> rr_ms);
double sdnn(std::span<const double> rr_ms);
double mean_hr(std::span<const double> rr_ms);

std::vector<double> intervals(std::span<const RrSample> rr);

/// Filters, then reports whatever metrics the remaining beat count allows.
HrvMetrics compute_hrv(std::span<const RrSample> rr, double max_rel_jump = 0.30);

}  // namespace cogload::cardio
