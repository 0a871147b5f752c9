#pragma once

// Experiment configuration, the three phase pipelines, and the condition
// comparison report.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cogload/adapt.hpp"
#include "cogload/features.hpp"
#include "cogload/learn/model.hpp"
#include "cogload/protocol.hpp"
#include "cogload/server.hpp"
#include "cogload/simgen.hpp"
#include "cogload/stroop.hpp"

namespace cogload::harness {

struct ExperimentConfig {
  std::uint64_t seed = 1;
  features::Profile profile = features::Profile::kRaw;
  learn::ModelKind model = learn::ModelKind::kMlp;
  std::vector<std::string> features;  // empty = every feature the profile permits
  int folds = 3;
  stroop::LabelStrategy label_strategy = stroop::LabelStrategy::kTlxMental;
  double tlx_threshold = 50.0;
  int cohort = 19;
  int high = 10;
  int new_users = 6;
  int new_high = 3;
  double trace_purity = 0.9;
  int served_trials = 150;     // training trials in each served session
  double served_cap_s = 420.0; // upper bound on a served training phase
  double serve_chunk_s = 0.1;  // closed-loop granularity of the simulated client
  features::ExtractionConfig extraction;
  adapt::ControllerConfig controller;
  learn::RfConfig rf;
  learn::MlpConfig mlp;
  simgen::PopulationConfig population;

  /// Canonical JSON with every field present. Model seeds are not part of
  /// the document; they derive from `seed`.
  std::string to_json() const;
  /// Fingerprint of to_json().
  std::string hash() const;

  /// Missing keys keep their defaults. Throws harness.UNKNOWN_CONFIG_KEY and
  /// harness.BAD_CONFIG.
  static ExperimentConfig from_json(std::string_view text);
  static ExperimentConfig load(const std::string& path);

  /// Throws harness.BAD_CONFIG.
  void validate() const;

  std::vector<std::string> feature_order() const;
  learn::ModelSpec model_spec() const;
  server::ServerConfig server_config() const;
};

/// Canonical JSON of an extraction configuration and its fingerprint.
std::string extraction_json(const features::ExtractionConfig&);
std::string extraction_hash(const features::ExtractionConfig&);

/// Labelled windows of one cohort member.
std::vector<features::FeatureVector> extract_and_label(const simgen::CohortMember& member,
                                                       const features::ExtractionConfig& extraction,
                                                       features::Profile profile, stroop::LabelStrategy strategy,
                                                       double tlx_threshold);

struct Phase1Result {
  learn::EvalReport cv;
  learn::TrainedModel model;
  learn::Dataset dataset;
  std::vector<std::string> dropped_features;  // constant over the cohort
};

/// simulate -> extract -> label -> grouped CV -> final model. Files are
/// written under `out_dir` unless it is empty. `provenance` is the hash
/// embedded in outputs (config.hash() when empty); `cohort` reuses an
/// already generated cohort.
Phase1Result run_phase1(const ExperimentConfig& config, const std::string& out_dir,
                        const std::string& provenance = {}, const simgen::Cohort* cohort = nullptr);

/// The phase-1 cohort for `config`.
simgen::Cohort simulate_cohort(const ExperimentConfig& config);

struct SessionRecord {
  protocol::SessionLog session;
  server::CommandLog commands;
  std::optional<stroop::TlxReport> tlx;
};

struct Phase2Result {
  learn::TrainedModel tuned;
  std::vector<SessionRecord> adaptive;
  std::vector<SessionRecord> regular;
};

/// Fine-tunes `base` on the new users' Stroop windows, then serves one
/// closed-loop adaptive session and one REGULAR session per new user.
Phase2Result run_phase2(const ExperimentConfig& config, const learn::TrainedModel& base, const std::string& out_dir,
                        const std::string& provenance = {}, bool serve_regular = true);

/// Serves one closed-loop simulated session.
SessionRecord serve_simulated(const simgen::ParticipantProfile& profile, const simgen::SessionScript& script,
                              const simgen::LoadTrace& trace, std::uint64_t seed, const learn::TrainedModel* model,
                              const server::ServerConfig& config, double chunk_s);

struct ConditionSummary {
  protocol::SessionMode condition = protocol::SessionMode::kRegular;
  std::vector<std::string> sessions;
  std::optional<learn::ClassificationMetrics> classification;
  std::optional<double> mean_completion_s;
  std::optional<double> error_rate;
  long hints = 0;
  long hint_requests = 0;
  long difficulty_changes = 0;
  std::optional<double> mean_final_difficulty;
  std::optional<double> mean_raw_tlx;
};

struct ComparisonReport {
  std::string config_hash;
  std::vector<ConditionSummary> rows;  // ADAPTIVE_RAW, ADAPTIVE_PRIVACY, REGULAR
};

ConditionSummary summarize_condition(protocol::SessionMode mode, std::span<const SessionRecord> sessions);

/// Throws harness.MIXED_CONFIG_HASHES when the command logs disagree.
ComparisonReport build_report(std::span<const SessionRecord> sessions,
                              const std::map<protocol::SessionMode, learn::ClassificationMetrics>& classification);

std::string report_json(const ComparisonReport&);
std::string report_table(const ComparisonReport&);

/// Reads every <id>.session.jsonl in `dir` with its <id>.commands.jsonl and
/// optional <id>.tlx.json, in file-name order.
std::vector<SessionRecord> load_session_records(const std::string& dir);
void write_session_record(const std::string& dir, const SessionRecord&);

/// phase1 and phase2 under both profiles, each with its full feature set,
/// then the comparison report.
ComparisonReport run_phase3(const ExperimentConfig& config, const std::string& out_dir);

}  // namespace cogload::harness
