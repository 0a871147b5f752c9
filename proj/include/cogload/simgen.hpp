#pragma once

// Synthetic participants and sessions. Every magnitude here is an invented,
// overridable default; only the directions of the load effects (larger
// pupil, longer fixations, lower HRV under HIGH load) are taken as given.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cogload/features.hpp"
#include "cogload/protocol.hpp"
#include "cogload/random.hpp"
#include "cogload/stroop.hpp"

namespace cogload::simgen {

/// Population distributions from which participants are drawn.
struct PopulationConfig {
  double pupil_mean_mm = 3.5;
  double pupil_sd_mm = 0.3;
  double pupil_min_mm = 2.5;
  double pupil_max_mm = 5.0;
  double pupil_shift_mean_mm = 0.4;
  double pupil_shift_sd_mm = 0.1;
  double pupil_shift_min_mm = 0.1;
  double fixdur_low_ms = 250.0;
  double fixdur_high_ms = 350.0;
  double rr_mean_ms = 800.0;
  double rr_sd_ms = 50.0;
  double hrv_load_factor = 0.6;
  double entropy_load_factor = 0.4;  // > 0: gaze concentrates under load
  double rt_interference_ms = 200.0;
};

struct ParticipantProfile {
  std::uint64_t seed = 0;
  double baseline_pupil_mm = 3.5;
  double pupil_load_shift_mm = 0.4;
  double fixdur_low_ms = 250.0;   // lognormal median
  double fixdur_high_ms = 350.0;  // lognormal median
  double rr_mean_ms = 800.0;
  double hrv_load_factor = 0.6;
  double entropy_load_factor = 0.4;
  double rt_interference_ms = 200.0;
  int capacity = 3;  // closed loop: HIGH load whenever difficulty > capacity

  // Noise scales.
  double fixdur_log_sd = 0.30;
  double fixation_jitter_deg = 0.05;
  double gaze_spread_deg = 7.0;
  double pupil_noise_mm = 0.03;
  double pupil_drift_sd_mm = 0.04;
  double pupil_tau_s = 1.0;
  double rr_innovation_sd_ms = 30.0;
  double rr_ar = 0.5;
  double ectopic_rate = 0.003;
  double blinks_per_min = 12.0;
  double stroop_rt_ms = 650.0;
  double stroop_rt_sd_ms = 80.0;
  double task_rt_ms = 1000.0;
  double task_rt_sd_ms = 150.0;

  bool operator==(const ParticipantProfile&) const = default;
};

ParticipantProfile generate_participant(std::uint64_t seed, const PopulationConfig& population = {});

struct StroopBlockSpec {
  stroop::BlockCondition condition = stroop::BlockCondition::kCongruent;
  int n_trials = 30;
};

struct SessionScript {
  std::string session_id = "S1";
  std::string participant = "P01";
  protocol::SessionMode mode = protocol::SessionMode::kRegular;
  double gaze_rate_hz = 120.0;
  double calibration_s = 120.0;  // baseline estimates need enough beats; at least 60
  int practice_trials = 12;
  std::vector<StroopBlockSpec> stroop_blocks{{stroop::BlockCondition::kCongruent, 30},
                                             {stroop::BlockCondition::kIncongruent, 30},
                                             {stroop::BlockCondition::kCongruent, 30},
                                             {stroop::BlockCondition::kIncongruent, 30}};
  double block_gap_s = 5.0;
  double training_s = 300.0;  // upper bound on the training phase
  int training_trials = 0;    // TASK_COMPLETE after this many trials; 0 = run for training_s
  double hint_rate_low = 0.02;  // REGULAR-mode hint requests per trial
  double hint_rate_high = 0.15;

  /// Throws simgen.BAD_SCRIPT.
  void validate() const;
};

/// Training-phase load over time (seconds from the training block start).
struct LoadTrace {
  struct Segment {
    double start_s = 0.0;
    features::LoadLabel load = features::LoadLabel::kLow;
  };
  std::vector<Segment> segments{{0.0, features::LoadLabel::kLow}};
  bool closed_loop = false;  // ignore segments; load follows difficulty vs capacity

  static LoadTrace constant(features::LoadLabel load) { return {{{0.0, load}}, false}; }
  static LoadTrace adaptive() { return {{}, true}; }
  /// Random segments with exponential durations; `dominant` holds about a
  /// `purity` share of the time.
  static LoadTrace mostly(features::LoadLabel dominant, double purity, double span_s, double mean_segment_s,
                          std::uint64_t seed);

  features::LoadLabel at(double s) const;
};

/// Incremental generator. Records come out in non-decreasing time order;
/// in closed-loop traces the difficulty set between calls shapes what is
/// generated next.
class SessionSimulator {
 public:
  SessionSimulator(ParticipantProfile profile, SessionScript script, LoadTrace trace, std::uint64_t seed);

  const protocol::SessionHeader& header() const noexcept { return header_; }

  /// All records with t_us <= until_us that have not been returned yet.
  std::vector<protocol::Message> advance(std::int64_t until_us);
  /// The rest of the session, ending with `bye`.
  std::vector<protocol::Message> run_to_end();

  void set_difficulty(int difficulty) { difficulty_ = difficulty; }
  int difficulty() const noexcept { return difficulty_; }
  bool done() const noexcept { return done_; }
  /// Share of training-phase gaze samples generated under HIGH load.
  double training_high_fraction() const;

 private:
  enum class Stage { kStart, kCalibration, kStroopGap, kStroop, kTrainingStart, kTraining, kEnded };
  enum class LoadSource { kLow, kHigh, kTraining };

  features::LoadLabel load_at(std::int64_t t_us) const;
  void plan_behaviour();
  void plan_practice_trial(std::int64_t t);
  void plan_stroop_trial(std::int64_t t);
  void plan_training_trial(std::int64_t t);
  std::int64_t next_gaze_t() const;
  protocol::GazeSample make_gaze(std::int64_t t);
  protocol::RrSample make_beat();
  void push_event(std::int64_t t, protocol::EventKind kind, protocol::Payload payload);

  ParticipantProfile p_;
  SessionScript script_;
  LoadTrace trace_;
  protocol::SessionHeader header_;
  Rng gaze_rng_, rr_rng_, behaviour_rng_, blink_rng_;
  int difficulty_ = 3;
  bool done_ = false;

  // Phase bookkeeping.
  Stage stage_ = Stage::kStart;
  std::int64_t calibration_end_us_ = 0;
  std::optional<std::int64_t> training_start_us_;
  std::int64_t training_cap_us_ = 0;
  std::optional<std::int64_t> stop_us_;  // gaze and RR stop here
  std::size_t block_index_ = 0;
  stroop::StroopBlock current_block_;
  std::size_t trial_in_block_ = 0;
  int practice_done_ = 0;
  int training_done_ = 0;
  std::vector<protocol::EventRecord> pending_;  // planned, not yet emitted (sorted)
  std::size_t pending_head_ = 0;
  std::int64_t behaviour_cursor_ = 0;  // time up to which behaviour is planned
  std::vector<std::pair<std::int64_t, LoadSource>> timeline_;  // load source from each time on

  // Gaze state.
  std::int64_t gaze_index_ = 0;
  double fix_x_ = 0.0, fix_y_ = 0.0;
  double from_x_ = 0.0, from_y_ = 0.0;
  std::int64_t saccade_start_ = 0, saccade_end_ = 0, fixation_end_ = 0;
  double pupil_level_ = 0.0;  // smoothed load response
  double pupil_drift_ = 0.0;
  std::int64_t blink_start_ = 0, blink_end_ = 0;
  std::optional<std::int64_t> last_gaze_t_;
  long training_samples_ = 0;
  long training_high_samples_ = 0;

  // Cardiac state.
  std::int64_t next_beat_t_ = 0;
  std::int64_t last_beat_t_ = 0;
  double rr_dev_ = 0.0;
  double pending_compensation_ = 0.0;
};

/// Questionnaire after a session: mental demand and effort rise with the
/// share of time spent under HIGH load.
stroop::TlxReport post_session_tlx(double high_fraction, std::uint64_t seed);

/// Whole session at a fixed difficulty of 3.
protocol::SessionLog generate_session(const ParticipantProfile& profile, const SessionScript& script,
                                      const LoadTrace& trace, std::uint64_t seed);

struct CohortOptions {
  PopulationConfig population;
  SessionScript script;  // session_id and participant are filled per member
  double trace_purity = 0.9;
  double mean_segment_s = 30.0;
  std::string pseudonym_prefix = "P";
};

struct CohortMember {
  std::string pseudonym;
  features::LoadLabel label = features::LoadLabel::kLow;
  std::uint64_t seed = 0;
  ParticipantProfile profile;
  protocol::SessionLog session;
  stroop::TlxReport tlx;
};

struct Cohort {
  std::uint64_t master_seed = 0;
  std::vector<CohortMember> members;
};

/// Pseudonyms P01, P02, ... HIGH participants get mostly-HIGH training
/// traces, capacity 2 and TLX mental >= 50; LOW participants the opposite
/// with capacity 3. Throws simgen.BAD_COHORT when n_high > n.
Cohort generate_cohort(int n_participants, int n_high, std::uint64_t master_seed, const CohortOptions& options = {});

/// Writes <pseudonym>.session.jsonl, <pseudonym>.tlx.json and manifest.jsonl.
void write_cohort(const std::string& dir, const Cohort& cohort);

struct ManifestEntry {
  std::string participant;
  features::LoadLabel label = features::LoadLabel::kLow;
  std::uint64_t seed = 0;
  std::string session_file;
  std::string tlx_file;
};

/// Throws simgen.BAD_MANIFEST.
std::vector<ManifestEntry> read_manifest(const std::string& path);

}  // namespace cogload::simgen
