#pragma once

// Windowed feature assembly. Every feature carries a sensitivity tag; the
// RAW and PRIVACY profiles are defined purely in terms of those tags.
//
// Windows are anchored at the end of the calibration phase. Hop k closes at
//   end_k = calibration_end + max(eye_window, hrv_window) + k * hop
// and is emitted for every end_k <= the last record timestamp. A window only
// reads records with t in (end_k - length, end_k], so streaming and batch
// execution see exactly the same inputs.

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cogload/cardio.hpp"
#include "cogload/entropy.hpp"
#include "cogload/oculo.hpp"
#include "cogload/protocol.hpp"

namespace cogload::features {

enum class Sensitivity { kRawGaze, kGazeAggregate, kPupil, kCardiac, kBehavioral };
enum class Profile { kRaw, kPrivacy };
enum class LoadLabel { kLow, kHigh };

std::string_view to_string(Sensitivity);
std::string_view to_string(Profile);
std::string_view to_string(LoadLabel);
std::optional<Profile> parse_profile(std::string_view);  // "raw" | "privacy"
std::optional<LoadLabel> parse_label(std::string_view);  // "LOW" | "HIGH"

struct FeatureSpec {
  std::string name;
  Sensitivity sensitivity;
  std::string source;  // producing module
};

/// The fixed registry, in canonical order.
const std::vector<FeatureSpec>& feature_registry();
const FeatureSpec* find_feature(std::string_view name);
/// Fingerprint of names and sensitivities.
std::string registry_hash();

struct ProfileOptions {
  bool privacy_keeps_pupil = false;  // override: keep PUPIL features under PRIVACY
  bool include_behavioral = true;    // ablation switch for BEHAVIORAL features
};

bool permitted(const FeatureSpec&, Profile, const ProfileOptions& = {});
std::vector<std::string> profile_features(Profile, const ProfileOptions& = {});

struct FeatureVector {
  std::string session_id;
  std::string participant;
  std::int64_t window_end_us = 0;
  protocol::Phase phase = protocol::Phase::kCalibration;
  std::map<std::string, std::optional<double>> values;  // nullopt = missing
  std::optional<LoadLabel> label;
  Profile profile = Profile::kRaw;
  bool inferable = true;

  bool operator==(const FeatureVector&) const = default;

  std::optional<double> get(const std::string& name) const {
    auto it = values.find(name);
    return it == values.end() ? std::nullopt : it->second;
  }
};

/// Drops features the profile does not permit and recomputes inferability
/// (RAW needs pupil_dilation_mean, PRIVACY needs stationary_entropy_bits).
FeatureVector profile_filter(FeatureVector vector, Profile profile, const ProfileOptions& options = {});

struct WindowConfig {
  double eye_window_s = 10.0;
  double hrv_window_s = 30.0;
  double hop_s = 2.0;

  /// Throws features.BAD_WINDOW_CONFIG.
  void validate() const;
  std::int64_t eye_us() const;
  std::int64_t hrv_us() const;
  std::int64_t hop_us() const;
  std::int64_t warmup_us() const;
};

struct ExtractionConfig {
  WindowConfig window;
  oculo::FixationConfig fixation;
  entropy::GazeGrid grid;
  double max_rel_jump = 0.30;
  oculo::PupilCorrection pupil_correction = oculo::PupilCorrection::kAbsolute;
  ProfileOptions profile_options;
};

struct CalibrationBaselines {
  oculo::PupilBaseline pupil;
  double rmssd_ms = 0.0;
  std::optional<double> median_trial_ms;  // behavioural normaliser
};

/// Baselines from calibration-phase records. Throws
/// features.CALIBRATION_MISSING when the RR baseline cannot be formed and
/// propagates oculo.INSUFFICIENT_BASELINE.
CalibrationBaselines compute_calibration(std::span<const protocol::GazeSample> gaze,
                                         std::span<const protocol::RrSample> rr,
                                         std::span<const protocol::EventRecord> events,
                                         const ExtractionConfig& config);

struct WindowInput {
  std::span<const protocol::GazeSample> gaze;    // (end - eye_window, end]
  std::span<const protocol::RrSample> rr;        // (end - hrv_window, end]
  std::span<const protocol::EventRecord> events; // (end - eye_window, end]
  std::int64_t window_end_us = 0;
  protocol::Phase phase = protocol::Phase::kTraining;
};

/// Computes every registry feature for one window, then applies the profile.
FeatureVector assemble_window(const WindowInput& input, const ExtractionConfig& config,
                              const CalibrationBaselines& baselines, Profile profile,
                              const protocol::SessionHeader& header);

std::vector<FeatureVector> batch_extract(const protocol::SessionLog& log, const ExtractionConfig& config,
                                         Profile profile);

/// Incremental extractor fed one record at a time in arrival order.
class StreamingExtractor {
 public:
  StreamingExtractor(protocol::SessionHeader header, ExtractionConfig config, Profile profile);

  /// Returns the windows that closed before this record.
  std::vector<FeatureVector> push(const protocol::Message& msg);
  /// Emits windows still pending at end of stream.
  std::vector<FeatureVector> finish();

  const std::optional<CalibrationBaselines>& baselines() const noexcept { return baselines_; }
  const protocol::SessionHeader& header() const noexcept { return header_; }

 private:
  void close_windows_before(std::int64_t t, bool inclusive, std::vector<FeatureVector>& out);
  void finalize_calibration();
  void trim(std::int64_t next_end);

  protocol::SessionHeader header_;
  ExtractionConfig config_;
  Profile profile_;
  protocol::Phase phase_;
  std::optional<std::int64_t> calibration_end_;
  std::optional<CalibrationBaselines> baselines_;
  std::optional<std::int64_t> last_t_;
  std::int64_t next_hop_ = 0;
  std::deque<protocol::GazeSample> gaze_;
  std::deque<protocol::RrSample> rr_;
  std::deque<protocol::EventRecord> events_;
  std::vector<protocol::GazeSample> scratch_gaze_;
  std::vector<protocol::RrSample> scratch_rr_;
  std::vector<protocol::EventRecord> scratch_events_;
};

/// Phase announced by a BLOCK_START/BLOCK_END event's "phase" payload key.
std::optional<protocol::Phase> event_phase(const protocol::EventRecord&);
bool ends_calibration(const protocol::EventRecord&);

// Feature log: one header line, then one line per vector.
struct FeatureLogHeader {
  Profile profile = Profile::kRaw;
  std::string config_hash;
  std::string registry_hash;
  std::vector<std::string> features;
};

struct FeatureLog {
  FeatureLogHeader header;
  std::vector<FeatureVector> vectors;
};

std::string encode_vector(const FeatureVector&);
FeatureVector decode_vector(std::string_view line);
void write_feature_log(std::ostream&, const FeatureLog&);
void write_feature_log(const std::string& path, const FeatureLog&);
FeatureLog read_feature_log(std::istream&);
FeatureLog read_feature_log(const std::string& path);

}  // namespace cogload::features
