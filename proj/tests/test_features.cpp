#include <algorithm>
#include <set>
#include <sstream>

#include "cogload/features.hpp"
#include "support.hpp"

using namespace cogload;
using namespace cogload::features;
using protocol::EventKind;
using protocol::EventRecord;
using protocol::GazeSample;
using protocol::Message;
using protocol::RrSample;

namespace {

// Hand-built session: 60 s calibration, training until `end_s`, 120 Hz gaze
// hopping between points every 300 ms, RR alternating around 800 ms.
protocol::SessionLog handmade(double end_s) {
  protocol::SessionLog log;
  log.header = {"H1", "P01", 120.0, protocol::Phase::kCalibration, protocol::SessionMode::kRegular, ""};
  std::vector<std::pair<std::int64_t, Message>> recs;
  recs.emplace_back(0, EventRecord{0, EventKind::kBlockStart, {{"phase", "CALIBRATION"}}});
  recs.emplace_back(60'000'000, EventRecord{60'000'000, EventKind::kBlockEnd, {{"phase", "CALIBRATION"}}});
  recs.emplace_back(60'000'000, EventRecord{60'000'000, EventKind::kBlockStart, {{"phase", "TRAINING"}}});
  const auto end_us = static_cast<std::int64_t>(end_s * 1e6);
  for (std::int64_t i = 1;; ++i) {
    const std::int64_t t = i * 1'000'000 / 120;
    if (t > end_us) break;
    const auto hop = t / 300'000;
    const double x = static_cast<double>(hop % 7) * 3.0 - 9.0, y = static_cast<double>(hop % 5) * 2.0 - 4.0;
    recs.emplace_back(t, GazeSample{t, x, y, 3.0 + 0.1 * static_cast<double>(hop % 3), true});
  }
  std::int64_t t = 0;
  for (int k = 0;; ++k) {
    const double rr = 800.0 + (k % 2 ? 15.0 : -15.0) + (k % 7);
    t += static_cast<std::int64_t>(rr * 1000);
    if (t > end_us) break;
    recs.emplace_back(t, RrSample{t, rr});
  }
  std::stable_sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [ts, m] : recs) log.records.push_back(std::move(m));
  return log;
}

std::vector<FeatureVector> streamed(const protocol::SessionLog& log, const ExtractionConfig& cfg, Profile p) {
  StreamingExtractor sx(log.header, cfg, p);
  std::vector<FeatureVector> out;
  for (const auto& m : log.records) {
    auto w = sx.push(m);
    out.insert(out.end(), w.begin(), w.end());
  }
  auto w = sx.finish();
  out.insert(out.end(), w.begin(), w.end());
  return out;
}

FeatureVector random_vector(Rng& rng) {
  FeatureVector v;
  v.session_id = "S";
  v.participant = "P";
  v.window_end_us = static_cast<std::int64_t>(rng.below(1'000'000'000));
  for (const auto& spec : feature_registry()) {
    if (rng.bernoulli(0.9)) v.values[spec.name] = rng.normal(0.0, 100.0);
    else v.values[spec.name] = std::nullopt;
  }
  return v;
}

}  // namespace

TEST(Features, Registry) {
  const auto& reg = feature_registry();
  EXPECT_EQ(reg.size(), 19u);
  std::set<std::string> names;
  int entropy_specs = 0;
  for (const auto& s : reg) {
    EXPECT_TRUE(names.insert(s.name).second) << s.name;
    if (s.name == "stationary_entropy_bits") {
      ++entropy_specs;
      EXPECT_EQ(s.sensitivity, Sensitivity::kGazeAggregate);
    }
    EXPECT_TRUE(s.source == "oculo" || s.source == "entropy" || s.source == "cardio" || s.source == "stroop") << s.name;
  }
  EXPECT_EQ(entropy_specs, 1);
  EXPECT_EQ(find_feature("scanpath_length_deg")->sensitivity, Sensitivity::kRawGaze);
  EXPECT_EQ(find_feature("pupil_dilation_mean")->sensitivity, Sensitivity::kPupil);
  EXPECT_EQ(find_feature("nope"), nullptr);
}

TEST(Features, ProfileFilter) {
  Rng rng(1);
  const auto v = random_vector(rng);
  const auto raw = profile_filter(v, Profile::kRaw);
  EXPECT_EQ(raw.values, v.values);
  const auto priv = profile_filter(v, Profile::kPrivacy);
  EXPECT_EQ(priv.profile, Profile::kPrivacy);
  for (const auto& [k, val] : priv.values) {
    const auto s = find_feature(k)->sensitivity;
    EXPECT_NE(s, Sensitivity::kRawGaze);
    EXPECT_NE(s, Sensitivity::kPupil);
  }
  EXPECT_EQ(priv.values.count("scanpath_length_deg"), 0u);
  EXPECT_EQ(priv.values.count("stationary_entropy_bits"), 1u);

  ProfileOptions keep;
  keep.privacy_keeps_pupil = true;
  EXPECT_EQ(profile_filter(v, Profile::kPrivacy, keep).values.count("pupil_dilation_mean"), 1u);
  ProfileOptions no_behaviour;
  no_behaviour.include_behavioral = false;
  EXPECT_EQ(profile_filter(v, Profile::kRaw, no_behaviour).values.count("error_rate"), 0u);
}

TEST(Features, PrivacyClosureOnSerializedVectors) {
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const auto line = encode_vector(profile_filter(random_vector(rng), Profile::kPrivacy));
    for (const auto& spec : feature_registry()) {
      if (spec.sensitivity == Sensitivity::kRawGaze || spec.sensitivity == Sensitivity::kPupil) {
        ASSERT_EQ(line.find(spec.name), std::string::npos) << line;
      }
    }
    ASSERT_EQ(line.find("gaze_x"), std::string::npos);
    ASSERT_EQ(line.find("scanpath"), std::string::npos);
  }
}

TEST(Features, VectorRoundTrip) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    auto v = random_vector(rng);
    v.label = rng.bernoulli(0.5) ? std::optional(LoadLabel::kHigh) : std::nullopt;
    EXPECT_EQ(decode_vector(encode_vector(v)), v);
  }
}

TEST(Features, WindowCountForFiveMinutes) {
  const auto log = handmade(360.0);
  const auto v = batch_extract(log, {}, Profile::kRaw);
  // Warmup max(10, 30) = 30 s after calibration end, then one vector per 2 s hop.
  EXPECT_EQ(v.size(), static_cast<std::size_t>((300 - 30) / 2 + 1));
  EXPECT_EQ(v.size(), 136u);
  EXPECT_EQ(v.front().window_end_us, 90'000'000);
  EXPECT_EQ(v.back().window_end_us, 360'000'000);
}

TEST(Features, EmptyTrainingGivesNoVectors) {
  const auto v = batch_extract(handmade(60.0), {}, Profile::kRaw);
  EXPECT_TRUE(v.empty());
}

TEST(Features, StreamMatchesBatch) {
  const auto log = handmade(200.0);
  for (auto p : {Profile::kRaw, Profile::kPrivacy}) {
    EXPECT_EQ(streamed(log, {}, p), batch_extract(log, {}, p));
  }
  auto script = testsupport::short_script(protocol::SessionMode::kRegular, 90.0, true);
  const auto sim = simgen::generate_session(simgen::generate_participant(5), script,
                                            simgen::LoadTrace::mostly(LoadLabel::kHigh, 0.7, 90, 20, 3), 17);
  EXPECT_EQ(streamed(sim, {}, Profile::kRaw), batch_extract(sim, {}, Profile::kRaw));
}

TEST(Features, NoLookahead) {
  auto script = testsupport::short_script(protocol::SessionMode::kRegular, 60.0);
  const auto log = simgen::generate_session(simgen::generate_participant(8), script,
                                            simgen::LoadTrace::constant(LoadLabel::kHigh), 4);
  const auto full = batch_extract(log, {}, Profile::kRaw);
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    std::size_t cut = log.records.size() / 2 + rng.below(log.records.size() / 2);
    // Cut between distinct timestamps so no record at the boundary time is lost.
    while (cut < log.records.size() &&
           *protocol::timestamp_of(log.records[cut - 1]) == *protocol::timestamp_of(log.records[cut])) {
      ++cut;
    }
    protocol::SessionLog prefix = log;
    prefix.records.resize(cut);
    const auto part = batch_extract(prefix, {}, Profile::kRaw);
    ASSERT_LE(part.size(), full.size());
    for (std::size_t i = 0; i < part.size(); ++i) EXPECT_EQ(part[i], full[i]);
  }
}

TEST(Features, NoFixationsMeansNotInferableUnderPrivacy) {
  std::vector<GazeSample> ramp;
  for (int i = 0; i < 1200; ++i) ramp.push_back({i * 8333, -40.0 + (i % 160) * 0.5, 0.0, 3.0, true});
  CalibrationBaselines b;
  b.pupil = {3.0, 1000};
  b.rmssd_ms = 20.0;
  WindowInput in{ramp, {}, {}, 10'000'000, protocol::Phase::kTraining};
  const auto v = assemble_window(in, {}, b, Profile::kPrivacy, {});
  EXPECT_FALSE(v.get("stationary_entropy_bits"));
  EXPECT_FALSE(v.get("transition_entropy_bits"));
  EXPECT_FALSE(v.inferable);
  EXPECT_EQ(v.get("fixation_count"), 0.0);
}

TEST(Features, CalibrationMissing) {
  std::vector<GazeSample> g(200, GazeSample{0, 0, 0, 3.0, true});
  for (std::size_t i = 0; i < g.size(); ++i) g[i].t_us = static_cast<std::int64_t>(i) * 8333;
  EXPECT_CODE(compute_calibration(g, {}, {}, {}), "features.CALIBRATION_MISSING");
}

TEST(Features, SustainedHighShowsLoadDirections) {
  auto script = testsupport::short_script(protocol::SessionMode::kRegular, 300.0);
  const auto log = simgen::generate_session(simgen::generate_participant(21), script,
                                            simgen::LoadTrace::constant(LoadLabel::kHigh), 5);
  const auto v = batch_extract(log, {}, Profile::kRaw);
  int hops = 0, pupil_up = 0, hrv_down = 0;
  for (const auto& x : v) {
    if (x.phase != protocol::Phase::kTraining) continue;
    ++hops;
    pupil_up += x.get("pupil_dilation_mean").value_or(-1) > 0;
    hrv_down += x.get("rmssd_ratio").value_or(2) < 1;
  }
  ASSERT_GT(hops, 100);
  EXPECT_GE(pupil_up, 0.9 * hops);
  EXPECT_GE(hrv_down, 0.9 * hops);
}

TEST(Features, FeatureLogDeterministicAndRoundTrips) {
  const auto log = handmade(150.0);
  FeatureLog fl{{Profile::kPrivacy, "cfg", registry_hash(), profile_features(Profile::kPrivacy)},
                batch_extract(log, {}, Profile::kPrivacy)};
  std::stringstream a, b;
  write_feature_log(a, fl);
  write_feature_log(b, FeatureLog{fl.header, batch_extract(log, {}, Profile::kPrivacy)});
  EXPECT_EQ(a.str(), b.str());
  const auto back = read_feature_log(a);
  EXPECT_EQ(back.vectors, fl.vectors);
  EXPECT_EQ(back.header.config_hash, "cfg");
}

TEST(Features, WindowConfigValidation) {
  WindowConfig w;
  w.hop_s = 20.0;
  EXPECT_CODE(w.validate(), "features.BAD_WINDOW_CONFIG");
  WindowConfig h;
  h.hrv_window_s = 5.0;
  h.hop_s = 1.0;
  EXPECT_CODE(h.validate(), "features.BAD_WINDOW_CONFIG");
}
