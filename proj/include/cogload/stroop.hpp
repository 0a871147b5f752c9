#pragma once

// Stroop block generation and scoring, raw NASA-TLX, and window labelling.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cogload/features.hpp"
#include "cogload/protocol.hpp"

namespace cogload::stroop {

enum class Color { kRed, kGreen, kBlue, kYellow };
inline constexpr int kColorCount = 4;

enum class BlockCondition { kCongruent, kIncongruent };

std::string_view to_string(Color);
std::string_view to_string(BlockCondition);
std::optional<Color> parse_color(std::string_view);
std::optional<BlockCondition> parse_condition(std::string_view);

struct StroopTrial {
  int trial_id = 0;
  Color word = Color::kRed;
  Color ink = Color::kRed;
  bool congruent = true;
  std::int64_t presented_us = 0;
  std::optional<Color> response;
  std::optional<std::int64_t> response_us;
  std::optional<bool> correct;
  bool timed_out = false;  // deadline passed with no response

  void respond(Color c, std::int64_t t_us) {
    response = c;
    response_us = t_us;
    correct = (c == ink);
  }
};

struct StroopBlock {
  std::string block_id;
  BlockCondition condition = BlockCondition::kCongruent;
  std::vector<StroopTrial> trials;
  double deadline_ms = 3000.0;
};

inline constexpr double kCongruentDeadlineMs = 3000.0;
inline constexpr double kIncongruentDeadlineMs = 1500.0;

/// Seeded block. Incongruent blocks place congruent fillers on
/// floor(n/5) trials, so at least 80% of trials are incongruent.
StroopBlock generate_block(BlockCondition condition, int n_trials, std::uint64_t seed);

struct BlockScore {
  std::optional<double> mean_rt_ms;  // correct, in-deadline trials
  std::optional<double> error_rate;  // wrong / answered
  double timeout_rate = 0.0;         // timeouts / total
  int answered = 0;
  int timeouts = 0;
};

/// Throws stroop.UNANSWERED_TRIALS if a trial has neither a response nor a
/// timeout.
BlockScore score_block(const StroopBlock& block);

/// Incongruent minus congruent mean RT. Throws stroop.MISSING_RT when either
/// block has no scorable trials.
double stroop_interference(const BlockScore& congruent, const BlockScore& incongruent);

struct TlxReport {
  int mental = 0;
  int physical = 0;
  int temporal = 0;
  int performance = 0;
  int effort = 0;
  int frustration = 0;
  double raw_tlx = 0.0;
};

/// Unweighted (raw) TLX. Each subscale must be in [0,100] in steps of 5,
/// else stroop.OUT_OF_RANGE.
TlxReport score_tlx(const std::array<int, 6>& subscales);

TlxReport read_tlx(std::istream&);
TlxReport read_tlx(const std::string& path);
void write_tlx(std::ostream&, const TlxReport&);
void write_tlx(const std::string& path, const TlxReport&);

enum class LabelStrategy { kBlockCondition, kTlxMental };
std::optional<LabelStrategy> parse_strategy(std::string_view);  // "block" | "tlx"

/// Stroop blocks recovered from a session's event stream, with responses.
std::vector<StroopBlock> blocks_from_log(const protocol::SessionLog& log);

struct BlockSpan {
  std::int64_t start_us;
  std::int64_t end_us;
  BlockCondition condition;
};
std::vector<BlockSpan> block_spans(const protocol::SessionLog& log);

/// BLOCK_CONDITION: windows ending in [start, end) of a congruent block are
/// LOW, of an incongruent block HIGH, others unlabelled. TLX_MENTAL: every
/// TRAINING-phase window is HIGH iff mental >= threshold, others unlabelled.
/// Throws stroop.NO_TLX_REPORT.
std::vector<features::FeatureVector> label_windows(std::vector<features::FeatureVector> vectors,
                                                   const protocol::SessionLog& log, LabelStrategy strategy,
                                                   const TlxReport* tlx = nullptr, double threshold = 50.0);

}  // namespace cogload::stroop
