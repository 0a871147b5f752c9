#include "cogload/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "cogload/hash.hpp"

namespace cogload::features {

using protocol::EventKind;
using protocol::EventRecord;
using protocol::GazeSample;
using protocol::Phase;
using protocol::RrSample;

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 5> kSensitivityNames{"RAW_GAZE", "GAZE_AGGREGATE", "PUPIL",
                                                            "CARDIAC", "BEHAVIORAL"};

std::int64_t seconds_to_us(double s) { return static_cast<std::int64_t>(std::llround(s * 1e6)); }

// Keys used in the critical-feature rule.
constexpr const char* kPupilKey = "pupil_dilation_mean";
constexpr const char* kEntropyKey = "stationary_entropy_bits";

}  // namespace

std::string_view to_string(Sensitivity s) { return kSensitivityNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(Profile p) { return p == Profile::kRaw ? "raw" : "privacy"; }
std::string_view to_string(LoadLabel l) { return l == LoadLabel::kLow ? "LOW" : "HIGH"; }

std::optional<Profile> parse_profile(std::string_view s) {
  if (s == "raw" || s == "RAW") return Profile::kRaw;
  if (s == "privacy" || s == "PRIVACY") return Profile::kPrivacy;
  return std::nullopt;
}

std::optional<LoadLabel> parse_label(std::string_view s) {
  if (s == "LOW") return LoadLabel::kLow;
  if (s == "HIGH") return LoadLabel::kHigh;
  return std::nullopt;
}

const std::vector<FeatureSpec>& feature_registry() {
  static const std::vector<FeatureSpec> registry{
      {"pupil_dilation_mean", Sensitivity::kPupil, "oculo"},
      {"fixation_duration_mean_ms", Sensitivity::kGazeAggregate, "oculo"},
      {"fixation_count", Sensitivity::kGazeAggregate, "oculo"},
      {"fixation_rate_hz", Sensitivity::kGazeAggregate, "oculo"},
      {"dwell_mean_ms", Sensitivity::kGazeAggregate, "oculo"},
      {"dwell_std_ms", Sensitivity::kGazeAggregate, "oculo"},
      {"dwell_median_ms", Sensitivity::kGazeAggregate, "oculo"},
      {"dwell_p90_ms", Sensitivity::kGazeAggregate, "oculo"},
      {"stationary_entropy_bits", Sensitivity::kGazeAggregate, "entropy"},
      {"transition_entropy_bits", Sensitivity::kGazeAggregate, "entropy"},
      {"mean_gaze_x_deg", Sensitivity::kRawGaze, "oculo"},
      {"mean_gaze_y_deg", Sensitivity::kRawGaze, "oculo"},
      {"scanpath_length_deg", Sensitivity::kRawGaze, "oculo"},
      {"rmssd_ratio", Sensitivity::kCardiac, "cardio"},
      {"sdnn_ms", Sensitivity::kCardiac, "cardio"},
      {"mean_hr_bpm", Sensitivity::kCardiac, "cardio"},
      {"trial_completion_time_ms_norm", Sensitivity::kBehavioral, "stroop"},
      {"error_rate", Sensitivity::kBehavioral, "stroop"},
      {"hints_requested", Sensitivity::kBehavioral, "stroop"},
  };
  return registry;
}

const FeatureSpec* find_feature(std::string_view name) {
  for (const auto& spec : feature_registry()) {
    if (spec.name == name) return &spec;
  }
  return nullptr;
}

std::string registry_hash() {
  std::uint64_t h = fnv1a("");
  for (const auto& spec : feature_registry()) {
    h = fnv1a(spec.name, h);
    h = fnv1a(":", h);
    h = fnv1a(to_string(spec.sensitivity), h);
    h = fnv1a(";", h);
  }
  return hex64(h);
}

bool permitted(const FeatureSpec& spec, Profile profile, const ProfileOptions& options) {
  if (spec.sensitivity == Sensitivity::kBehavioral && !options.include_behavioral) return false;
  if (profile == Profile::kRaw) return true;
  switch (spec.sensitivity) {
    case Sensitivity::kRawGaze: return false;
    case Sensitivity::kPupil: return options.privacy_keeps_pupil;
    default: return true;
  }
}

std::vector<std::string> profile_features(Profile profile, const ProfileOptions& options) {
  std::vector<std::string> out;
  for (const auto& spec : feature_registry()) {
    if (permitted(spec, profile, options)) out.push_back(spec.name);
  }
  return out;
}

FeatureVector profile_filter(FeatureVector vector, Profile profile, const ProfileOptions& options) {
  for (auto it = vector.values.begin(); it != vector.values.end();) {
    const FeatureSpec* spec = find_feature(it->first);
    if (spec == nullptr || !permitted(*spec, profile, options)) {
      it = vector.values.erase(it);
    } else {
      ++it;
    }
  }
  vector.profile = profile;
  const char* critical = profile == Profile::kRaw ? kPupilKey : kEntropyKey;
  vector.inferable = vector.get(critical).has_value();
  return vector;
}

void WindowConfig::validate() const {
  if (!(hop_s > 0.0) || !(eye_window_s >= hop_s) || !(hrv_window_s >= hop_s) || !(hrv_window_s >= 10.0)) {
    throw Error("features", "BAD_WINDOW_CONFIG", "need windows >= hop > 0 and hrv_window_s >= 10");
  }
}
std::int64_t WindowConfig::eye_us() const { return seconds_to_us(eye_window_s); }
std::int64_t WindowConfig::hrv_us() const { return seconds_to_us(hrv_window_s); }
std::int64_t WindowConfig::hop_us() const { return seconds_to_us(hop_s); }
std::int64_t WindowConfig::warmup_us() const { return std::max(eye_us(), hrv_us()); }

std::optional<Phase> event_phase(const EventRecord& e) {
  if (e.kind != EventKind::kBlockStart && e.kind != EventKind::kBlockEnd) return std::nullopt;
  auto p = e.get("phase");
  return p ? protocol::parse_phase(*p) : std::nullopt;
}

bool ends_calibration(const EventRecord& e) {
  return e.kind == EventKind::kBlockEnd && event_phase(e) == Phase::kCalibration;
}

namespace {

bool starts_post_calibration_phase(const EventRecord& e) {
  if (e.kind != EventKind::kBlockStart) return false;
  auto p = event_phase(e);
  return p && *p != Phase::kCalibration;
}

// Response times of trials whose start and response both lie in `events`.
std::vector<double> response_times(std::span<const EventRecord> events) {
  std::map<std::string, std::int64_t> starts;
  std::vector<double> rts;
  for (const auto& e : events) {
    auto id = e.get("trial");
    if (!id) continue;
    if (e.kind == EventKind::kTrialStart) {
      starts[*id] = e.t_us;
    } else if (e.kind == EventKind::kTrialResponse) {
      auto it = starts.find(*id);
      if (it != starts.end()) rts.push_back(static_cast<double>(e.t_us - it->second) / 1000.0);
    }
  }
  return rts;
}

template <typename T>
std::span<const T> slice(const std::vector<T>& v, std::int64_t lo_exclusive, std::int64_t hi_inclusive) {
  auto lo = std::upper_bound(v.begin(), v.end(), lo_exclusive,
                             [](std::int64_t t, const T& r) { return t < r.t_us; });
  auto hi = std::upper_bound(v.begin(), v.end(), hi_inclusive,
                             [](std::int64_t t, const T& r) { return t < r.t_us; });
  return {std::to_address(lo), static_cast<std::size_t>(hi - lo)};
}

}  // namespace

CalibrationBaselines compute_calibration(std::span<const GazeSample> gaze, std::span<const RrSample> rr,
                                         std::span<const EventRecord> events, const ExtractionConfig& config) {
  if (gaze.empty()) throw Error("features", "CALIBRATION_MISSING", "no calibration gaze");
  CalibrationBaselines b;
  const auto cleaned = oculo::preprocess_gaze(gaze, config.fixation.gap_interp_max_ms);
  b.pupil = oculo::compute_baseline(cleaned);
  const auto hrv = cardio::compute_hrv(rr, config.max_rel_jump);
  if (!hrv.rmssd_ms || !(*hrv.rmssd_ms > 0.0)) {
    throw Error("features", "CALIBRATION_MISSING", "no usable calibration RMSSD");
  }
  b.rmssd_ms = *hrv.rmssd_ms;
  auto rts = response_times(events);
  if (!rts.empty()) b.median_trial_ms = oculo::quantile(std::move(rts), 0.5);
  return b;
}

FeatureVector assemble_window(const WindowInput& input, const ExtractionConfig& config,
                              const CalibrationBaselines& baselines, Profile profile,
                              const protocol::SessionHeader& header) {
  FeatureVector v;
  v.session_id = header.session_id;
  v.participant = header.participant_pseudonym;
  v.window_end_us = input.window_end_us;
  v.phase = input.phase;
  for (const auto& spec : feature_registry()) v.values[spec.name] = std::nullopt;
  auto set = [&v](const char* name, std::optional<double> value) { v.values.at(name) = value; };

  // Eye features.
  bool any_valid = std::any_of(input.gaze.begin(), input.gaze.end(), [](const auto& s) { return s.valid; });
  if (any_valid) {
    const auto cleaned = oculo::preprocess_gaze(input.gaze, config.fixation.gap_interp_max_ms);
    set("pupil_dilation_mean", oculo::pupil_dilation(cleaned, baselines.pupil, config.pupil_correction));
    const auto fix = oculo::detect_fixations(cleaned, config.fixation.dispersion_deg, config.fixation.min_fixation_ms);
    const auto dwell = oculo::dwell_stats(fix);
    set("fixation_count", static_cast<double>(dwell.count));
    set("fixation_rate_hz", static_cast<double>(dwell.count) / config.window.eye_window_s);
    set("fixation_duration_mean_ms", dwell.mean_ms);
    set("dwell_mean_ms", dwell.mean_ms);
    set("dwell_std_ms", dwell.std_ms);
    set("dwell_median_ms", dwell.median_ms);
    set("dwell_p90_ms", dwell.p90_ms);
    const auto bins = entropy::bin_fixations(fix, config.grid);
    if (bins.size() >= 2) set("stationary_entropy_bits", entropy::stationary_entropy(bins, config.grid));
    if (bins.size() >= 3) set("transition_entropy_bits", entropy::transition_entropy(bins));
    double sx = 0.0, sy = 0.0;
    std::size_t n = 0;
    for (const auto& s : cleaned) {
      if (!s.valid) continue;
      sx += s.gaze_x_deg;
      sy += s.gaze_y_deg;
      ++n;
    }
    set("mean_gaze_x_deg", sx / static_cast<double>(n));
    set("mean_gaze_y_deg", sy / static_cast<double>(n));
    set("scanpath_length_deg", oculo::scanpath_length(fix));
  }

  // Cardiac features.
  const auto hrv = cardio::compute_hrv(input.rr, config.max_rel_jump);
  if (hrv.rmssd_ms) set("rmssd_ratio", *hrv.rmssd_ms / baselines.rmssd_ms);
  set("sdnn_ms", hrv.sdnn_ms);
  set("mean_hr_bpm", hrv.mean_hr_bpm);

  // Behavioural features.
  std::size_t responses = 0, errors = 0, hints = 0;
  for (const auto& e : input.events) {
    if (e.kind == EventKind::kTrialResponse) ++responses;
    if (e.kind == EventKind::kErrorCommitted) ++errors;
    if (e.kind == EventKind::kHintRequest) ++hints;
  }
  auto rts = response_times(input.events);
  if (!rts.empty() && baselines.median_trial_ms && *baselines.median_trial_ms > 0.0) {
    double sum = 0.0;
    for (double rt : rts) sum += rt;
    set("trial_completion_time_ms_norm", sum / static_cast<double>(rts.size()) / *baselines.median_trial_ms);
  }
  if (responses > 0) set("error_rate", static_cast<double>(errors) / static_cast<double>(responses));
  set("hints_requested", static_cast<double>(hints));

  return profile_filter(std::move(v), profile, config.profile_options);
}

std::vector<FeatureVector> batch_extract(const protocol::SessionLog& log, const ExtractionConfig& config,
                                         Profile profile) {
  config.window.validate();
  std::vector<GazeSample> gaze;
  std::vector<RrSample> rr;
  std::vector<EventRecord> events;
  std::optional<std::int64_t> last_t;
  for (const auto& m : log.records) {
    if (auto t = protocol::timestamp_of(m)) last_t = last_t ? std::max(*last_t, *t) : *t;
    if (auto* g = std::get_if<GazeSample>(&m)) gaze.push_back(*g);
    else if (auto* r = std::get_if<RrSample>(&m)) rr.push_back(*r);
    else if (auto* e = std::get_if<EventRecord>(&m)) events.push_back(*e);
  }

  std::optional<std::int64_t> cal_end;
  for (const auto& e : events) {
    if (ends_calibration(e)) {
      cal_end = e.t_us;
      break;
    }
    if (starts_post_calibration_phase(e)) break;
  }
  if (!cal_end) {
    if (std::any_of(events.begin(), events.end(), starts_post_calibration_phase)) {
      throw Error("features", "CALIBRATION_MISSING", "session leaves calibration without closing it");
    }
    return {};
  }

  const auto min_t = std::numeric_limits<std::int64_t>::min();
  const auto baselines = compute_calibration(slice(gaze, min_t, *cal_end), slice(rr, min_t, *cal_end),
                                             slice(events, min_t, *cal_end), config);

  std::vector<FeatureVector> out;
  const auto& w = config.window;
  for (std::int64_t end = *cal_end + w.warmup_us(); end <= *last_t; end += w.hop_us()) {
    Phase phase = log.header.phase;
    for (const auto& e : events) {
      if (e.t_us > end) break;
      if (e.kind == EventKind::kBlockStart) {
        if (auto p = event_phase(e)) phase = *p;
      }
    }
    WindowInput in{slice(gaze, end - w.eye_us(), end), slice(rr, end - w.hrv_us(), end),
                   slice(events, end - w.eye_us(), end), end, phase};
    out.push_back(assemble_window(in, config, baselines, profile, log.header));
  }
  return out;
}

StreamingExtractor::StreamingExtractor(protocol::SessionHeader header, ExtractionConfig config, Profile profile)
    : header_(std::move(header)), config_(std::move(config)), profile_(profile), phase_(header_.phase) {
  config_.window.validate();
}

void StreamingExtractor::finalize_calibration() {
  scratch_gaze_.assign(gaze_.begin(), gaze_.end());
  scratch_rr_.assign(rr_.begin(), rr_.end());
  scratch_events_.assign(events_.begin(), events_.end());
  baselines_ = compute_calibration(scratch_gaze_, scratch_rr_, scratch_events_, config_);
  next_hop_ = *calibration_end_ + config_.window.warmup_us();
  trim(next_hop_);
}

void StreamingExtractor::trim(std::int64_t next_end) {
  const auto& w = config_.window;
  while (!gaze_.empty() && gaze_.front().t_us <= next_end - w.eye_us()) gaze_.pop_front();
  while (!rr_.empty() && rr_.front().t_us <= next_end - w.hrv_us()) rr_.pop_front();
  while (!events_.empty() && events_.front().t_us <= next_end - w.eye_us()) events_.pop_front();
}

void StreamingExtractor::close_windows_before(std::int64_t t, bool inclusive, std::vector<FeatureVector>& out) {
  if (!calibration_end_) return;
  if (!baselines_) {
    if (inclusive ? *calibration_end_ > t : *calibration_end_ >= t) return;
    finalize_calibration();
  }
  const auto& w = config_.window;
  while (inclusive ? next_hop_ <= t : next_hop_ < t) {
    const std::int64_t end = next_hop_;
    scratch_gaze_.clear();
    for (const auto& s : gaze_) {
      if (s.t_us > end - w.eye_us() && s.t_us <= end) scratch_gaze_.push_back(s);
    }
    scratch_rr_.clear();
    for (const auto& s : rr_) {
      if (s.t_us > end - w.hrv_us() && s.t_us <= end) scratch_rr_.push_back(s);
    }
    scratch_events_.clear();
    for (const auto& e : events_) {
      if (e.t_us > end - w.eye_us() && e.t_us <= end) scratch_events_.push_back(e);
    }
    WindowInput in{scratch_gaze_, scratch_rr_, scratch_events_, end, phase_};
    out.push_back(assemble_window(in, config_, *baselines_, profile_, header_));
    next_hop_ += w.hop_us();
    trim(next_hop_);
  }
}

std::vector<FeatureVector> StreamingExtractor::push(const protocol::Message& msg) {
  std::vector<FeatureVector> out;
  auto t = protocol::timestamp_of(msg);
  if (!t) return out;
  close_windows_before(*t, false, out);
  last_t_ = t;
  if (auto* g = std::get_if<GazeSample>(&msg)) {
    gaze_.push_back(*g);
  } else if (auto* r = std::get_if<RrSample>(&msg)) {
    rr_.push_back(*r);
  } else if (auto* e = std::get_if<EventRecord>(&msg)) {
    events_.push_back(*e);
    if (!calibration_end_) {
      if (ends_calibration(*e)) {
        calibration_end_ = e->t_us;
      } else if (starts_post_calibration_phase(*e)) {
        throw Error("features", "CALIBRATION_MISSING", "session leaves calibration without closing it");
      }
    }
    if (e->kind == EventKind::kBlockStart) {
      if (auto p = event_phase(*e)) phase_ = *p;
    }
  }
  return out;
}

std::vector<FeatureVector> StreamingExtractor::finish() {
  std::vector<FeatureVector> out;
  if (last_t_) close_windows_before(*last_t_, true, out);
  return out;
}

// ---- feature log -----------------------------------------------------------

std::string encode_vector(const FeatureVector& v) {
  ordered_json j;
  j["type"] = "features";
  j["session_id"] = v.session_id;
  j["participant"] = v.participant;
  j["window_end_us"] = v.window_end_us;
  j["phase"] = protocol::to_string(v.phase);
  j["profile"] = to_string(v.profile);
  j["inferable"] = v.inferable;
  j["label"] = v.label ? ordered_json(to_string(*v.label)) : ordered_json(nullptr);
  ordered_json values = ordered_json::object();
  for (const auto& [k, val] : v.values) values[k] = val ? ordered_json(*val) : ordered_json(nullptr);
  j["values"] = std::move(values);
  return j.dump() + "\n";
}

namespace {

[[noreturn]] void corrupt(const std::string& detail) { throw Error("features", "CORRUPT_FEATURE_LOG", detail); }

}  // namespace

FeatureVector decode_vector(std::string_view line) {
  auto j = ordered_json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.value("type", "") != "features") corrupt("not a feature line");
  try {
    FeatureVector v;
    v.session_id = j.at("session_id").get<std::string>();
    v.participant = j.at("participant").get<std::string>();
    v.window_end_us = j.at("window_end_us").get<std::int64_t>();
    auto phase = protocol::parse_phase(j.at("phase").get<std::string>());
    auto profile = parse_profile(j.at("profile").get<std::string>());
    if (!phase || !profile) corrupt("bad phase/profile");
    v.phase = *phase;
    v.profile = *profile;
    v.inferable = j.at("inferable").get<bool>();
    if (!j.at("label").is_null()) {
      auto label = parse_label(j.at("label").get<std::string>());
      if (!label) corrupt("bad label");
      v.label = label;
    }
    for (const auto& [k, val] : j.at("values").items()) {
      v.values[k] = val.is_null() ? std::nullopt : std::optional<double>(val.get<double>());
    }
    return v;
  } catch (const nlohmann::json::exception& e) {
    corrupt(e.what());
  }
}

void write_feature_log(std::ostream& out, const FeatureLog& log) {
  ordered_json h;
  h["type"] = "feature_log";
  h["profile"] = to_string(log.header.profile);
  h["config_hash"] = log.header.config_hash;
  h["registry_hash"] = log.header.registry_hash;
  h["features"] = log.header.features;
  out << h.dump() << "\n";
  for (const auto& v : log.vectors) out << encode_vector(v);
}

void write_feature_log(const std::string& path, const FeatureLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("features", "IO_ERROR", "cannot write " + path);
  write_feature_log(out, log);
}

FeatureLog read_feature_log(std::istream& in) {
  FeatureLog log;
  std::string line;
  if (!std::getline(in, line)) corrupt("empty feature log");
  auto h = ordered_json::parse(line, nullptr, false);
  if (h.is_discarded() || !h.is_object() || h.value("type", "") != "feature_log") corrupt("missing header");
  try {
    auto profile = parse_profile(h.at("profile").get<std::string>());
    if (!profile) corrupt("bad profile");
    log.header.profile = *profile;
    log.header.config_hash = h.at("config_hash").get<std::string>();
    log.header.registry_hash = h.at("registry_hash").get<std::string>();
    log.header.features = h.at("features").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    corrupt(e.what());
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    log.vectors.push_back(decode_vector(line));
  }
  return log;
}

FeatureLog read_feature_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("features", "IO_ERROR", "cannot open " + path);
  return read_feature_log(in);
}

}  // namespace cogload::features
