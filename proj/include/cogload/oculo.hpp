#pragma once

// Oculomotor processing: blink interpolation, I-DT fixation segmentation,
// pupil baselines, dwell statistics and scanpath length.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cogload/protocol.hpp"

namespace cogload::oculo {

using protocol::GazeSample;

struct Fixation {
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;
  double centroid_x_deg = 0.0;
  double centroid_y_deg = 0.0;
  double duration_ms = 0.0;
  double mean_pupil_mm = 0.0;

  bool operator==(const Fixation&) const = default;
};

struct PupilBaseline {
  double baseline_mm = 0.0;
  std::size_t n_valid_samples = 0;
};

inline constexpr std::size_t kMinBaselineSamples = 100;

struct FixationConfig {
  double dispersion_deg = 1.0;
  double min_fixation_ms = 100.0;
  double gap_interp_max_ms = 75.0;
};

enum class PupilCorrection { kAbsolute, kRelative };

/// Linearly interpolates invalid runs whose flanking valid samples are at
/// most `gap_interp_max_ms` apart. Longer runs, and runs touching either end
/// of the input, stay invalid. Throws oculo.EMPTY_INPUT.
std::vector<GazeSample> preprocess_gaze(std::span<const GazeSample> samples,
                                        double gap_interp_max_ms = 75.0);

/// Dispersion-threshold (I-DT) segmentation. Dispersion of a window is
/// (max x - min x) + (max y - min y); a window becomes a fixation when its
/// first and last samples are at least `min_fixation_ms` apart, and is then
/// grown while dispersion stays within `dispersion_deg`. Invalid samples
/// close any open window.
std::vector<Fixation> detect_fixations(std::span<const GazeSample> samples,
                                       double dispersion_deg = 1.0,
                                       double min_fixation_ms = 100.0);

/// Median pupil diameter over valid calibration samples.
/// Throws oculo.INSUFFICIENT_BASELINE below 100 valid samples.
PupilBaseline compute_baseline(std::span<const GazeSample> calibration_samples);

/// Mean valid pupil in the window minus the baseline (mm), or the relative
/// change (mean - baseline) / baseline. Throws oculo.NO_VALID_SAMPLES.
double pupil_dilation(std::span<const GazeSample> window_samples, const PupilBaseline& baseline,
                      PupilCorrection correction = PupilCorrection::kAbsolute);

struct DwellStats {
  std::size_t count = 0;
  std::optional<double> mean_ms;
  std::optional<double> std_ms;  // (n-1) denominator; missing below 2 fixations
  std::optional<double> median_ms;
  std::optional<double> p90_ms;  // linear interpolation between order statistics
};

DwellStats dwell_stats(std::span<const Fixation> fixations);

/// Sum of centroid-to-centroid distances (degrees).
double scanpath_length(std::span<const Fixation> fixations);

/// Linear-interpolated quantile of an unsorted sample, q in [0,1].
double quantile(std::vector<double> values, double q);

}  // namespace cogload::oculo
