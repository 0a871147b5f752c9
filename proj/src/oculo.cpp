#include "cogload/oculo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cogload::oculo {

std::vector<GazeSample> preprocess_gaze(std::span<const GazeSample> samples, double gap_interp_max_ms) {
  if (samples.empty()) throw Error("oculo", "EMPTY_INPUT");
  std::vector<GazeSample> out(samples.begin(), samples.end());
  const double max_gap_us = gap_interp_max_ms * 1000.0;
  std::size_t i = 0;
  const std::size_t n = out.size();
  while (i < n) {
    if (out[i].valid) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !out[j].valid) ++j;
    // [i, j) is an invalid run
    if (i > 0 && j < n) {
      const GazeSample& a = out[i - 1];
      const GazeSample& b = out[j];
      const double gap = static_cast<double>(b.t_us - a.t_us);
      if (gap <= max_gap_us) {
        for (std::size_t k = i; k < j; ++k) {
          const double w = static_cast<double>(out[k].t_us - a.t_us) / gap;
          out[k].gaze_x_deg = a.gaze_x_deg + w * (b.gaze_x_deg - a.gaze_x_deg);
          out[k].gaze_y_deg = a.gaze_y_deg + w * (b.gaze_y_deg - a.gaze_y_deg);
          out[k].pupil_mm = a.pupil_mm + w * (b.pupil_mm - a.pupil_mm);
          out[k].valid = true;
        }
      }
    }
    i = j;
  }
  return out;
}

namespace {

struct Extent {
  double min_x, max_x, min_y, max_y;

  explicit Extent(const GazeSample& s)
      : min_x(s.gaze_x_deg), max_x(s.gaze_x_deg), min_y(s.gaze_y_deg), max_y(s.gaze_y_deg) {}

  void add(const GazeSample& s) {
    min_x = std::min(min_x, s.gaze_x_deg);
    max_x = std::max(max_x, s.gaze_x_deg);
    min_y = std::min(min_y, s.gaze_y_deg);
    max_y = std::max(max_y, s.gaze_y_deg);
  }

  double dispersion() const { return (max_x - min_x) + (max_y - min_y); }
};

Fixation make_fixation(std::span<const GazeSample> s, std::size_t first, std::size_t last) {
  Fixation f;
  f.start_us = s[first].t_us;
  f.end_us = s[last].t_us;
  double sx = 0, sy = 0, sp = 0;
  for (std::size_t k = first; k <= last; ++k) {
    sx += s[k].gaze_x_deg;
    sy += s[k].gaze_y_deg;
    sp += s[k].pupil_mm;
  }
  const double n = static_cast<double>(last - first + 1);
  f.centroid_x_deg = sx / n;
  f.centroid_y_deg = sy / n;
  f.mean_pupil_mm = sp / n;
  f.duration_ms = static_cast<double>(f.end_us - f.start_us) / 1000.0;
  return f;
}

}  // namespace

std::vector<Fixation> detect_fixations(std::span<const GazeSample> samples, double dispersion_deg,
                                       double min_fixation_ms) {
  std::vector<Fixation> out;
  const double min_us = min_fixation_ms * 1000.0;
  const std::size_t n = samples.size();
  std::size_t seg_begin = 0;
  while (seg_begin < n) {
    if (!samples[seg_begin].valid) {
      ++seg_begin;
      continue;
    }
    std::size_t seg_end = seg_begin;
    while (seg_end < n && samples[seg_end].valid) ++seg_end;

    std::size_t i = seg_begin;
    std::size_t j = seg_begin;  // smallest index spanning min duration from i
    while (i < seg_end) {
      if (j < i) j = i;
      while (j < seg_end && static_cast<double>(samples[j].t_us - samples[i].t_us) < min_us) ++j;
      if (j >= seg_end) break;
      Extent ext(samples[i]);
      for (std::size_t k = i + 1; k <= j; ++k) ext.add(samples[k]);
      if (ext.dispersion() <= dispersion_deg) {
        while (j + 1 < seg_end) {
          Extent grown = ext;
          grown.add(samples[j + 1]);
          if (grown.dispersion() > dispersion_deg) break;
          ext = grown;
          ++j;
        }
        out.push_back(make_fixation(samples, i, j));
        i = j + 1;
      } else {
        ++i;
      }
    }
    seg_begin = seg_end;
  }
  return out;
}

PupilBaseline compute_baseline(std::span<const GazeSample> calibration_samples) {
  std::vector<double> pupils;
  pupils.reserve(calibration_samples.size());
  for (const auto& s : calibration_samples) {
    if (s.valid) pupils.push_back(s.pupil_mm);
  }
  if (pupils.size() < kMinBaselineSamples) {
    throw Error("oculo", "INSUFFICIENT_BASELINE",
                std::to_string(pupils.size()) + " valid samples, need " + std::to_string(kMinBaselineSamples));
  }
  return {quantile(pupils, 0.5), pupils.size()};
}

double pupil_dilation(std::span<const GazeSample> window_samples, const PupilBaseline& baseline,
                      PupilCorrection correction) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : window_samples) {
    if (!s.valid) continue;
    sum += s.pupil_mm;
    ++n;
  }
  if (n == 0) throw Error("oculo", "NO_VALID_SAMPLES");
  const double diff = sum / static_cast<double>(n) - baseline.baseline_mm;
  return correction == PupilCorrection::kAbsolute ? diff : diff / baseline.baseline_mm;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("oculo", "EMPTY_INPUT");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

DwellStats dwell_stats(std::span<const Fixation> fixations) {
  DwellStats st;
  st.count = fixations.size();
  if (fixations.empty()) return st;
  std::vector<double> d;
  d.reserve(fixations.size());
  for (const auto& f : fixations) d.push_back(f.duration_ms);
  const double n = static_cast<double>(d.size());
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  st.mean_ms = mean;
  if (d.size() >= 2) {
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    st.std_ms = std::sqrt(ss / (n - 1.0));
  }
  st.median_ms = quantile(d, 0.5);
  st.p90_ms = quantile(d, 0.9);
  return st;
}

double scanpath_length(std::span<const Fixation> fixations) {
  double total = 0.0;
  for (std::size_t i = 1; i < fixations.size(); ++i) {
    total += std::hypot(fixations[i].centroid_x_deg - fixations[i - 1].centroid_x_deg,
                        fixations[i].centroid_y_deg - fixations[i - 1].centroid_y_deg);
  }
  return total;
}

}  // namespace cogload::oculo
