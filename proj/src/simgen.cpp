#include "cogload/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace cogload::simgen {

using features::LoadLabel;
using protocol::EventKind;
using protocol::EventRecord;
using protocol::Message;
using protocol::Payload;
using stroop::BlockCondition;

namespace {

std::int64_t us(double seconds) { return std::llround(seconds * 1e6); }
std::int64_t ms_to_us(double ms) { return std::llround(ms * 1e3); }

// Independent random streams per session.
enum Stream : std::uint64_t { kGazeStream = 1, kRrStream = 2, kBehaviourStream = 3, kBlinkStream = 4 };

std::string phase_name(protocol::Phase p) { return std::string(protocol::to_string(p)); }

}  // namespace

ParticipantProfile generate_participant(std::uint64_t seed, const PopulationConfig& pop) {
  Rng rng(seed);
  ParticipantProfile p;
  p.seed = seed;
  p.baseline_pupil_mm = std::clamp(rng.normal(pop.pupil_mean_mm, pop.pupil_sd_mm), pop.pupil_min_mm, pop.pupil_max_mm);
  p.pupil_load_shift_mm = std::max(rng.normal(pop.pupil_shift_mean_mm, pop.pupil_shift_sd_mm), pop.pupil_shift_min_mm);
  p.rr_mean_ms = rng.normal(pop.rr_mean_ms, pop.rr_sd_ms);
  p.fixdur_low_ms = pop.fixdur_low_ms;
  p.fixdur_high_ms = pop.fixdur_high_ms;
  p.hrv_load_factor = pop.hrv_load_factor;
  p.entropy_load_factor = pop.entropy_load_factor;
  p.rt_interference_ms = pop.rt_interference_ms;
  return p;
}

void SessionScript::validate() const {
  auto bad = [](const std::string& why) { throw Error("simgen", "BAD_SCRIPT", why); };
  if (!(calibration_s >= 60.0)) bad("calibration must last at least 60 s");
  if (!(gaze_rate_hz > 0.0 && gaze_rate_hz <= 1000.0)) bad("gaze_rate_hz must be in (0, 1000]");
  if (!(training_s > 0.0)) bad("training_s must be positive");
  if (training_trials < 0 || practice_trials < 0) bad("trial counts must be >= 0");
  if (!(block_gap_s >= 0.0)) bad("block_gap_s must be >= 0");
  for (const auto& b : stroop_blocks) {
    if (b.n_trials < 1) bad("Stroop blocks need at least one trial");
  }
  if (hint_rate_low < 0.0 || hint_rate_low > 1.0 || hint_rate_high < 0.0 || hint_rate_high > 1.0) {
    bad("hint rates must be probabilities");
  }
  if (participant.empty()) bad("participant pseudonym must be non-empty");
}

LoadTrace LoadTrace::mostly(LoadLabel dominant, double purity, double span_s, double mean_segment_s,
                            std::uint64_t seed) {
  Rng rng(seed);
  const LoadLabel other = dominant == LoadLabel::kHigh ? LoadLabel::kLow : LoadLabel::kHigh;
  LoadTrace trace;
  trace.segments.clear();
  // Minority segments are shorter so that the time share matches `purity`
  // rather than the segment count.
  for (double t = 0.0; t < span_s;) {
    const bool major = rng.bernoulli(0.5);
    const double mean = major ? 2.0 * mean_segment_s * purity : 2.0 * mean_segment_s * (1.0 - purity);
    trace.segments.push_back({t, major ? dominant : other});
    t += std::max(1.0, rng.exponential(mean));
  }
  return trace;
}

LoadLabel LoadTrace::at(double s) const {
  LoadLabel load = LoadLabel::kLow;
  for (const auto& seg : segments) {
    if (seg.start_s > s) break;
    load = seg.load;
  }
  return load;
}

// ---- simulator ----------------------------------------------------------

SessionSimulator::SessionSimulator(ParticipantProfile profile, SessionScript script, LoadTrace trace,
                                   std::uint64_t seed)
    : p_(std::move(profile)),
      script_(std::move(script)),
      trace_(std::move(trace)),
      gaze_rng_(Rng::derive(seed, kGazeStream)),
      rr_rng_(Rng::derive(seed, kRrStream)),
      behaviour_rng_(Rng::derive(seed, kBehaviourStream)),
      blink_rng_(Rng::derive(seed, kBlinkStream)) {
  script_.validate();
  header_.session_id = script_.session_id;
  header_.participant_pseudonym = script_.participant;
  header_.gaze_rate_hz = script_.gaze_rate_hz;
  header_.phase = protocol::Phase::kCalibration;
  header_.mode = script_.mode;
  header_.started_at = "1970-01-01T00:00:00Z";

  const double blink_mean_s = 60.0 / std::max(p_.blinks_per_min, 1e-6);
  blink_start_ = us(blink_rng_.exponential(blink_mean_s));
  blink_end_ = blink_start_ + ms_to_us(blink_rng_.uniform(100.0, 250.0));

  fix_x_ = gaze_rng_.normal(0.0, p_.gaze_spread_deg * 0.5);
  fix_y_ = gaze_rng_.normal(0.0, p_.gaze_spread_deg * 0.5);
  from_x_ = fix_x_;
  from_y_ = fix_y_;
  fixation_end_ = ms_to_us(p_.fixdur_low_ms * std::exp(p_.fixdur_log_sd * gaze_rng_.normal()));

  next_beat_t_ = ms_to_us(p_.rr_mean_ms);
  timeline_.push_back({0, LoadSource::kLow});
}

void SessionSimulator::push_event(std::int64_t t, EventKind kind, Payload payload) {
  pending_.push_back({t, kind, std::move(payload)});
}

LoadLabel SessionSimulator::load_at(std::int64_t t_us) const {
  LoadSource src = LoadSource::kLow;
  for (auto it = timeline_.rbegin(); it != timeline_.rend(); ++it) {
    if (it->first <= t_us) {
      src = it->second;
      break;
    }
  }
  switch (src) {
    case LoadSource::kLow: return LoadLabel::kLow;
    case LoadSource::kHigh: return LoadLabel::kHigh;
    case LoadSource::kTraining:
      if (trace_.closed_loop) return difficulty_ > p_.capacity ? LoadLabel::kHigh : LoadLabel::kLow;
      return trace_.at(static_cast<double>(t_us - *training_start_us_) / 1e6);
  }
  return LoadLabel::kLow;
}

void SessionSimulator::plan_practice_trial(std::int64_t t) {
  const std::string id = "c" + std::to_string(++practice_done_);
  const double rt = std::clamp(behaviour_rng_.normal(p_.task_rt_ms, p_.task_rt_sd_ms), 300.0, 2500.0);
  const bool correct = !behaviour_rng_.bernoulli(0.08);
  const std::int64_t r = t + ms_to_us(rt);
  push_event(t, EventKind::kTrialStart, {{"trial", id}});
  push_event(r, EventKind::kTrialResponse, {{"trial", id}, {"correct", correct ? "true" : "false"}});
  if (!correct) push_event(r, EventKind::kErrorCommitted, {{"trial", id}});
  behaviour_cursor_ = r + us(behaviour_rng_.uniform(2.0, 4.0));
}

void SessionSimulator::plan_stroop_trial(std::int64_t t) {
  const stroop::StroopTrial& trial = current_block_.trials[trial_in_block_];
  const std::string id = "s" + std::to_string(block_index_ + 1) + "." + std::to_string(trial_in_block_ + 1);
  ++trial_in_block_;
  push_event(t, EventKind::kTrialStart,
             {{"trial", id}, {"word", std::string(stroop::to_string(trial.word))},
              {"ink", std::string(stroop::to_string(trial.ink))}});
  const double mean = p_.stroop_rt_ms + (trial.congruent ? 0.0 : p_.rt_interference_ms);
  const double rt = std::max(200.0, behaviour_rng_.normal(mean, p_.stroop_rt_sd_ms));
  const bool wrong = behaviour_rng_.bernoulli(trial.congruent ? 0.02 : 0.06);
  std::int64_t end;
  if (rt > current_block_.deadline_ms) {
    end = t + ms_to_us(current_block_.deadline_ms);
    push_event(end, EventKind::kTrialEnd, {{"trial", id}, {"outcome", "timeout"}});
  } else {
    end = t + ms_to_us(rt);
    stroop::Color response = trial.ink;
    if (wrong) {
      response = static_cast<stroop::Color>((static_cast<std::uint64_t>(trial.ink) + 1 +
                                             behaviour_rng_.below(stroop::kColorCount - 1)) %
                                            stroop::kColorCount);
    }
    push_event(end, EventKind::kTrialResponse, {{"trial", id}, {"response", std::string(stroop::to_string(response))}});
    if (wrong) push_event(end, EventKind::kErrorCommitted, {{"trial", id}});
    push_event(end, EventKind::kTrialEnd, {{"trial", id}, {"outcome", "response"}});
  }
  behaviour_cursor_ = end + ms_to_us(behaviour_rng_.uniform(400.0, 600.0));
}

void SessionSimulator::plan_training_trial(std::int64_t t) {
  const std::string id = "t" + std::to_string(++training_done_);
  const bool high = load_at(t) == LoadLabel::kHigh;
  const double d = static_cast<double>(difficulty_);
  const double mean = p_.task_rt_ms * (1.0 + 0.15 * (d - 3.0)) + (high ? 400.0 : 0.0);
  const double rt = std::clamp(behaviour_rng_.normal(mean, p_.task_rt_sd_ms), 300.0, 2500.0);
  const bool wrong = behaviour_rng_.bernoulli(0.04 + 0.02 * (d - 1.0) + (high ? 0.10 : 0.0));
  const bool hint = script_.mode == protocol::SessionMode::kRegular &&
                    behaviour_rng_.bernoulli(high ? script_.hint_rate_high : script_.hint_rate_low);
  const std::int64_t r = t + ms_to_us(rt);
  push_event(t, EventKind::kTrialStart, {{"trial", id}, {"difficulty", std::to_string(difficulty_)}});
  if (hint) push_event(t + ms_to_us(0.3 * rt), EventKind::kHintRequest, {{"trial", id}});
  push_event(r, EventKind::kTrialResponse, {{"trial", id}, {"correct", wrong ? "false" : "true"}});
  if (wrong) push_event(r, EventKind::kErrorCommitted, {{"trial", id}});
  behaviour_cursor_ = r + ms_to_us(behaviour_rng_.uniform(400.0, 600.0));
}

void SessionSimulator::plan_behaviour() {
  using protocol::Phase;
  const std::int64_t t = behaviour_cursor_;
  switch (stage_) {
    case Stage::kStart:
      push_event(0, EventKind::kBlockStart, {{"phase", phase_name(Phase::kCalibration)}});
      calibration_end_us_ = us(script_.calibration_s);
      behaviour_cursor_ = us(0.5);
      stage_ = Stage::kCalibration;
      return;
    case Stage::kCalibration:
      if (practice_done_ < script_.practice_trials && t + us(3.0) < calibration_end_us_) {
        plan_practice_trial(t);
        return;
      }
      push_event(calibration_end_us_, EventKind::kBlockEnd, {{"phase", phase_name(Phase::kCalibration)}});
      behaviour_cursor_ = calibration_end_us_ + us(script_.block_gap_s);
      stage_ = script_.stroop_blocks.empty() ? Stage::kTrainingStart : Stage::kStroopGap;
      return;
    case Stage::kStroopGap: {
      const auto& spec = script_.stroop_blocks[block_index_];
      current_block_ = stroop::generate_block(spec.condition, spec.n_trials,
                                              Rng::derive(p_.seed, 100 + block_index_));
      trial_in_block_ = 0;
      push_event(t, EventKind::kBlockStart,
                 {{"phase", phase_name(Phase::kStroop)},
                  {"condition", std::string(stroop::to_string(spec.condition))},
                  {"block", std::to_string(block_index_ + 1)},
                  {"deadline_ms", std::to_string(static_cast<int>(current_block_.deadline_ms))}});
      timeline_.push_back({t, spec.condition == BlockCondition::kIncongruent ? LoadSource::kHigh : LoadSource::kLow});
      behaviour_cursor_ = t + us(1.0);
      stage_ = Stage::kStroop;
      return;
    }
    case Stage::kStroop:
      if (trial_in_block_ < current_block_.trials.size()) {
        plan_stroop_trial(t);
        return;
      }
      push_event(t, EventKind::kBlockEnd,
                 {{"phase", phase_name(Phase::kStroop)}, {"block", std::to_string(block_index_ + 1)}});
      timeline_.push_back({t, LoadSource::kLow});
      ++block_index_;
      behaviour_cursor_ = t + us(script_.block_gap_s);
      stage_ = block_index_ < script_.stroop_blocks.size() ? Stage::kStroopGap : Stage::kTrainingStart;
      return;
    case Stage::kTrainingStart:
      push_event(t, EventKind::kBlockStart, {{"phase", phase_name(Phase::kTraining)}});
      training_start_us_ = t;
      training_cap_us_ = t + us(script_.training_s);
      timeline_.push_back({t, LoadSource::kTraining});
      behaviour_cursor_ = t + us(1.0);
      stage_ = Stage::kTraining;
      return;
    case Stage::kTraining: {
      const bool target_met = script_.training_trials > 0 && training_done_ >= script_.training_trials;
      if (!target_met && t + us(3.0) <= training_cap_us_) {
        plan_training_trial(t);
        return;
      }
      std::int64_t end = training_cap_us_;
      if (target_met) {
        end = t;
        push_event(end, EventKind::kTaskComplete, {{"trials", std::to_string(training_done_)}});
      } else if (script_.training_trials == 0) {
        push_event(end, EventKind::kTaskComplete, {{"trials", std::to_string(training_done_)}});
      }
      push_event(end, EventKind::kBlockEnd, {{"phase", phase_name(Phase::kTraining)}});
      timeline_.push_back({end, LoadSource::kLow});
      stop_us_ = end;
      stage_ = Stage::kEnded;
      return;
    }
    case Stage::kEnded:
      return;
  }
}

std::int64_t SessionSimulator::next_gaze_t() const {
  return std::llround(static_cast<double>(gaze_index_) * 1e6 / script_.gaze_rate_hz);
}

double SessionSimulator::training_high_fraction() const {
  return training_samples_ == 0 ? 0.0 : static_cast<double>(training_high_samples_) / training_samples_;
}

protocol::GazeSample SessionSimulator::make_gaze(std::int64_t t) {
  const bool high = load_at(t) == LoadLabel::kHigh;
  if (training_start_us_ && t >= *training_start_us_ && (!stop_us_ || t < *stop_us_)) {
    ++training_samples_;
    if (high) ++training_high_samples_;
  }

  if (t >= fixation_end_) {
    from_x_ = fix_x_;
    from_y_ = fix_y_;
    const double spread = p_.gaze_spread_deg * (high ? std::max(0.1, 1.0 - p_.entropy_load_factor) : 1.0);
    fix_x_ = std::clamp(gaze_rng_.normal(0.0, spread), -24.0, 24.0);
    fix_y_ = std::clamp(gaze_rng_.normal(0.0, spread), -24.0, 24.0);
    const double amplitude = std::hypot(fix_x_ - from_x_, fix_y_ - from_y_);
    saccade_start_ = fixation_end_;
    saccade_end_ = saccade_start_ + ms_to_us(20.0 + 2.5 * amplitude);
    const double median = high ? p_.fixdur_high_ms : p_.fixdur_low_ms;
    fixation_end_ = saccade_end_ + ms_to_us(median * std::exp(p_.fixdur_log_sd * gaze_rng_.normal()));
  }
  double x, y;
  if (t < saccade_end_) {
    const double f = static_cast<double>(t - saccade_start_) / static_cast<double>(saccade_end_ - saccade_start_);
    x = from_x_ + (fix_x_ - from_x_) * std::clamp(f, 0.0, 1.0);
    y = from_y_ + (fix_y_ - from_y_) * std::clamp(f, 0.0, 1.0);
  } else {
    x = fix_x_ + gaze_rng_.normal(0.0, p_.fixation_jitter_deg);
    y = fix_y_ + gaze_rng_.normal(0.0, p_.fixation_jitter_deg);
  }

  const double dt_s = last_gaze_t_ ? static_cast<double>(t - *last_gaze_t_) / 1e6 : 0.0;
  last_gaze_t_ = t;
  const double target = high ? p_.pupil_load_shift_mm : 0.0;
  pupil_level_ += (target - pupil_level_) * (1.0 - std::exp(-dt_s / p_.pupil_tau_s));
  const double decay = std::exp(-dt_s / 10.0);
  pupil_drift_ = pupil_drift_ * decay + p_.pupil_drift_sd_mm * std::sqrt(1.0 - decay * decay) * gaze_rng_.normal();
  const double pupil = std::clamp(
      p_.baseline_pupil_mm + pupil_level_ + pupil_drift_ + gaze_rng_.normal(0.0, p_.pupil_noise_mm), 1.5, 9.5);

  const double blink_mean_s = 60.0 / std::max(p_.blinks_per_min, 1e-6);
  while (t >= blink_end_) {
    blink_start_ = blink_end_ + us(blink_rng_.exponential(blink_mean_s));
    blink_end_ = blink_start_ + ms_to_us(blink_rng_.uniform(100.0, 250.0));
  }
  if (t >= blink_start_) return {t, 0.0, 0.0, 0.0, false};
  return {t, std::clamp(x, -protocol::kGazeMaxDeg, protocol::kGazeMaxDeg),
          std::clamp(y, -protocol::kGazeMaxDeg, protocol::kGazeMaxDeg), pupil, true};
}

protocol::RrSample SessionSimulator::make_beat() {
  const std::int64_t t = next_beat_t_;
  const double rr = static_cast<double>(t - last_beat_t_) / 1000.0;
  last_beat_t_ = t;

  const double scale = load_at(t) == LoadLabel::kHigh ? p_.hrv_load_factor : 1.0;
  rr_dev_ = p_.rr_ar * rr_dev_ + p_.rr_innovation_sd_ms * scale * rr_rng_.normal();
  double next = p_.rr_mean_ms + rr_dev_;
  if (pending_compensation_ > 0.0) {
    next *= pending_compensation_;
    pending_compensation_ = 0.0;
  } else if (rr_rng_.bernoulli(p_.ectopic_rate)) {
    next *= 0.55;  // far enough below any normal beat for the 30% jump rule
    pending_compensation_ = 1.45;
  }
  next = std::clamp(next, 300.0, 2000.0);
  next_beat_t_ = t + ms_to_us(next);
  return {t, std::clamp(rr, protocol::kRrMinMs, protocol::kRrMaxMs)};
}

std::vector<Message> SessionSimulator::advance(std::int64_t until_us) {
  std::vector<Message> out;
  while (!done_) {
    while (pending_head_ == pending_.size() && stage_ != Stage::kEnded) {
      pending_.clear();
      pending_head_ = 0;
      plan_behaviour();
    }
    constexpr auto kNever = std::numeric_limits<std::int64_t>::max();
    const std::int64_t te = pending_head_ < pending_.size() ? pending_[pending_head_].t_us : kNever;
    const std::int64_t limit = stop_us_ ? *stop_us_ : kNever;
    const std::int64_t tr = next_beat_t_ <= limit ? next_beat_t_ : kNever;
    const std::int64_t tg0 = next_gaze_t();
    const std::int64_t tg = tg0 <= limit ? tg0 : kNever;
    const std::int64_t t = std::min({te, tr, tg});
    if (t == kNever) {
      if (*stop_us_ > until_us) break;
      out.emplace_back(protocol::Bye{*stop_us_});
      done_ = true;
      break;
    }
    if (t > until_us) break;
    if (te == t) {
      out.emplace_back(pending_[pending_head_++]);
    } else if (tr == t) {
      out.emplace_back(make_beat());
    } else {
      out.emplace_back(make_gaze(tg));
      ++gaze_index_;
    }
  }
  return out;
}

std::vector<Message> SessionSimulator::run_to_end() { return advance(std::numeric_limits<std::int64_t>::max()); }

protocol::SessionLog generate_session(const ParticipantProfile& profile, const SessionScript& script,
                                      const LoadTrace& trace, std::uint64_t seed) {
  SessionSimulator sim(profile, script, trace, seed);
  protocol::SessionLog log;
  log.header = sim.header();
  log.records = sim.run_to_end();
  return log;
}

// ---- cohorts ------------------------------------------------------------

namespace {

std::string pseudonym(const std::string& prefix, int i, int n) {
  const int width = n >= 100 ? 3 : 2;
  std::string digits = std::to_string(i + 1);
  return prefix + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(digits.size()))), '0') +
         digits;
}

stroop::TlxReport draw_tlx(LoadLabel label, Rng& rng) {
  std::array<int, 6> v{};
  v[0] = label == LoadLabel::kHigh ? 50 + 5 * static_cast<int>(rng.below(10)) : 5 * static_cast<int>(rng.below(10));
  for (std::size_t i = 1; i < v.size(); ++i) v[i] = 5 * static_cast<int>(rng.below(21));
  return stroop::score_tlx(v);
}

}  // namespace

stroop::TlxReport post_session_tlx(double high_fraction, std::uint64_t seed) {
  Rng rng(seed);
  auto scale = [&rng](double centre) {
    const double v = std::clamp(centre + rng.normal(0.0, 8.0), 0.0, 100.0);
    return 5 * static_cast<int>(std::lround(v / 5.0));
  };
  const double f = std::clamp(high_fraction, 0.0, 1.0);
  return stroop::score_tlx({scale(20.0 + 65.0 * f), scale(25.0), scale(20.0 + 50.0 * f), scale(40.0 + 30.0 * f),
                            scale(25.0 + 55.0 * f), scale(15.0 + 50.0 * f)});
}

Cohort generate_cohort(int n, int n_high, std::uint64_t master_seed, const CohortOptions& options) {
  if (n < 1 || n_high < 0 || n_high > n) {
    throw Error("simgen", "BAD_COHORT", "need 0 <= n_high <= n_participants and n_participants >= 1");
  }
  Cohort cohort;
  cohort.master_seed = master_seed;
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(Rng::derive(master_seed, 0));
  rng.shuffle(order.begin(), order.end());
  std::vector<bool> high(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n_high; ++i) high[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

  for (int i = 0; i < n; ++i) {
    CohortMember m;
    m.pseudonym = pseudonym(options.pseudonym_prefix, i, n);
    m.label = high[static_cast<std::size_t>(i)] ? LoadLabel::kHigh : LoadLabel::kLow;
    m.seed = Rng::derive(master_seed, static_cast<std::uint64_t>(i) + 1);
    m.profile = generate_participant(m.seed, options.population);
    m.profile.capacity = m.label == LoadLabel::kHigh ? 2 : 3;
    SessionScript script = options.script;
    script.session_id = m.pseudonym + "-S1";
    script.participant = m.pseudonym;
    const LoadTrace trace =
        LoadTrace::mostly(m.label, options.trace_purity, script.training_s, options.mean_segment_s,
                          Rng::derive(m.seed, 7));
    m.session = generate_session(m.profile, script, trace, Rng::derive(m.seed, 1));
    Rng tlx_rng(Rng::derive(m.seed, 2));
    m.tlx = draw_tlx(m.label, tlx_rng);
    cohort.members.push_back(std::move(m));
  }
  return cohort;
}

void write_cohort(const std::string& dir, const Cohort& cohort) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir + "/manifest.jsonl", std::ios::binary);
  if (!manifest) throw Error("simgen", "IO_ERROR", "cannot write manifest in " + dir);
  for (const auto& m : cohort.members) {
    const std::string session_file = m.pseudonym + ".session.jsonl";
    const std::string tlx_file = m.pseudonym + ".tlx.json";
    protocol::write_session_log(dir + "/" + session_file, m.session);
    stroop::write_tlx(dir + "/" + tlx_file, m.tlx);
    nlohmann::ordered_json j;
    j["participant"] = m.pseudonym;
    j["label"] = std::string(features::to_string(m.label));
    j["seed"] = m.seed;
    j["session_file"] = session_file;
    j["tlx_file"] = tlx_file;
    j["profile"] = {{"baseline_pupil_mm", m.profile.baseline_pupil_mm},
                    {"pupil_load_shift_mm", m.profile.pupil_load_shift_mm},
                    {"rr_mean_ms", m.profile.rr_mean_ms},
                    {"capacity", m.profile.capacity}};
    manifest << j.dump() << "\n";
  }
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("simgen", "BAD_MANIFEST", "cannot open " + path);
  std::vector<ManifestEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    try {
      if (j.is_discarded()) throw Error("simgen", "BAD_MANIFEST", "unparseable line");
      ManifestEntry e;
      e.participant = j.at("participant").get<std::string>();
      auto label = features::parse_label(j.at("label").get<std::string>());
      if (!label) throw Error("simgen", "BAD_MANIFEST", "bad label for " + e.participant);
      e.label = *label;
      e.seed = j.at("seed").get<std::uint64_t>();
      e.session_file = j.at("session_file").get<std::string>();
      e.tlx_file = j.at("tlx_file").get<std::string>();
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error("simgen", "BAD_MANIFEST", ex.what());
    }
  }
  return out;
}

}  // namespace cogload::simgen
