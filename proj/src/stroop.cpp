#include "cogload/stroop.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "cogload/random.hpp"

namespace cogload::stroop {

using protocol::EventKind;
using protocol::EventRecord;

namespace {

constexpr std::array<std::string_view, kColorCount> kColorNames{"red", "green", "blue", "yellow"};

Color color_at(std::uint64_t i) { return static_cast<Color>(i); }

}  // namespace

std::string_view to_string(Color c) { return kColorNames[static_cast<std::size_t>(c)]; }
std::string_view to_string(BlockCondition c) {
  return c == BlockCondition::kCongruent ? "CONGRUENT" : "INCONGRUENT";
}

std::optional<Color> parse_color(std::string_view s) {
  for (std::size_t i = 0; i < kColorNames.size(); ++i) {
    if (kColorNames[i] == s) return color_at(i);
  }
  return std::nullopt;
}

std::optional<BlockCondition> parse_condition(std::string_view s) {
  if (s == "CONGRUENT") return BlockCondition::kCongruent;
  if (s == "INCONGRUENT") return BlockCondition::kIncongruent;
  return std::nullopt;
}

std::optional<LabelStrategy> parse_strategy(std::string_view s) {
  if (s == "block" || s == "BLOCK_CONDITION") return LabelStrategy::kBlockCondition;
  if (s == "tlx" || s == "TLX_MENTAL") return LabelStrategy::kTlxMental;
  return std::nullopt;
}

StroopBlock generate_block(BlockCondition condition, int n_trials, std::uint64_t seed) {
  if (n_trials < 1) throw Error("stroop", "BAD_BLOCK", "n_trials must be >= 1");
  Rng rng(seed);
  StroopBlock block;
  block.condition = condition;
  block.block_id = std::string(condition == BlockCondition::kCongruent ? "C" : "I") + std::to_string(seed);
  block.deadline_ms = condition == BlockCondition::kCongruent ? kCongruentDeadlineMs : kIncongruentDeadlineMs;

  std::vector<bool> congruent(static_cast<std::size_t>(n_trials), condition == BlockCondition::kCongruent);
  if (condition == BlockCondition::kIncongruent) {
    for (int i = 0; i < n_trials / 5; ++i) congruent[static_cast<std::size_t>(i)] = true;
    rng.shuffle(congruent.begin(), congruent.end());
  }
  for (int i = 0; i < n_trials; ++i) {
    StroopTrial t;
    t.trial_id = i;
    t.ink = color_at(rng.below(kColorCount));
    if (congruent[static_cast<std::size_t>(i)]) {
      t.word = t.ink;
    } else {
      // any of the three other colours
      t.word = color_at((static_cast<std::uint64_t>(t.ink) + 1 + rng.below(kColorCount - 1)) % kColorCount);
    }
    t.congruent = (t.word == t.ink);
    block.trials.push_back(t);
  }
  return block;
}

BlockScore score_block(const StroopBlock& block) {
  BlockScore s;
  int wrong = 0;
  int scored = 0;
  double rt_sum = 0.0;
  for (const auto& t : block.trials) {
    if (t.response) {
      ++s.answered;
      const bool correct = (*t.response == t.ink);
      if (!correct) {
        ++wrong;
      } else if (t.response_us) {
        const double rt = static_cast<double>(*t.response_us - t.presented_us) / 1000.0;
        if (rt <= block.deadline_ms) {
          rt_sum += rt;
          ++scored;
        }
      }
    } else if (t.timed_out) {
      ++s.timeouts;
    } else {
      throw Error("stroop", "UNANSWERED_TRIALS", "trial " + std::to_string(t.trial_id));
    }
  }
  if (scored > 0) s.mean_rt_ms = rt_sum / scored;
  if (s.answered > 0) s.error_rate = static_cast<double>(wrong) / s.answered;
  if (!block.trials.empty()) s.timeout_rate = static_cast<double>(s.timeouts) / static_cast<double>(block.trials.size());
  return s;
}

double stroop_interference(const BlockScore& congruent, const BlockScore& incongruent) {
  if (!congruent.mean_rt_ms || !incongruent.mean_rt_ms) throw Error("stroop", "MISSING_RT");
  return *incongruent.mean_rt_ms - *congruent.mean_rt_ms;
}

TlxReport score_tlx(const std::array<int, 6>& v) {
  for (int x : v) {
    if (x < 0 || x > 100 || x % 5 != 0) {
      throw Error("stroop", "OUT_OF_RANGE", "subscale " + std::to_string(x) + " not in 0..100 step 5");
    }
  }
  TlxReport r{v[0], v[1], v[2], v[3], v[4], v[5], 0.0};
  r.raw_tlx = (v[0] + v[1] + v[2] + v[3] + v[4] + v[5]) / 6.0;
  return r;
}

TlxReport read_tlx(std::istream& in) {
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("stroop", "BAD_TLX_FILE", "not a JSON object");
  static constexpr std::array<const char*, 6> keys{"mental", "physical", "temporal",
                                                   "performance", "effort", "frustration"};
  std::array<int, 6> v{};
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto it = j.find(keys[i]);
    if (it == j.end() || !it->is_number_integer()) {
      throw Error("stroop", "BAD_TLX_FILE", std::string("missing integer '") + keys[i] + "'");
    }
    v[i] = it->get<int>();
  }
  return score_tlx(v);
}

TlxReport read_tlx(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("stroop", "IO_ERROR", "cannot open " + path);
  return read_tlx(in);
}

void write_tlx(std::ostream& out, const TlxReport& r) {
  nlohmann::ordered_json j;
  j["mental"] = r.mental;
  j["physical"] = r.physical;
  j["temporal"] = r.temporal;
  j["performance"] = r.performance;
  j["effort"] = r.effort;
  j["frustration"] = r.frustration;
  out << j.dump() << "\n";
}

void write_tlx(const std::string& path, const TlxReport& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("stroop", "IO_ERROR", "cannot write " + path);
  write_tlx(out, r);
}

namespace {

bool is_stroop_block_event(const EventRecord& e, EventKind kind) {
  return e.kind == kind && features::event_phase(e) == protocol::Phase::kStroop;
}

}  // namespace

std::vector<StroopBlock> blocks_from_log(const protocol::SessionLog& log) {
  std::vector<StroopBlock> blocks;
  StroopBlock* open = nullptr;
  std::map<std::string, std::size_t> index;  // trial id -> position in open block
  for (const auto& m : log.records) {
    const auto* e = std::get_if<EventRecord>(&m);
    if (e == nullptr) continue;
    if (is_stroop_block_event(*e, EventKind::kBlockStart)) {
      auto cond = parse_condition(e->get("condition").value_or(""));
      if (!cond) throw Error("stroop", "BAD_BLOCK", "Stroop block without condition");
      blocks.push_back({});
      open = &blocks.back();
      open->block_id = e->get("block").value_or(std::to_string(blocks.size()));
      open->condition = *cond;
      open->deadline_ms = *cond == BlockCondition::kCongruent ? kCongruentDeadlineMs : kIncongruentDeadlineMs;
      if (auto d = e->get("deadline_ms")) open->deadline_ms = std::stod(*d);
      index.clear();
      continue;
    }
    if (is_stroop_block_event(*e, EventKind::kBlockEnd)) {
      open = nullptr;
      continue;
    }
    if (open == nullptr) continue;
    auto id = e->get("trial");
    if (!id) continue;
    if (e->kind == EventKind::kTrialStart) {
      auto word = parse_color(e->get("word").value_or(""));
      auto ink = parse_color(e->get("ink").value_or(""));
      if (!word || !ink) throw Error("stroop", "BAD_BLOCK", "trial " + *id + " lacks word/ink");
      StroopTrial t;
      t.trial_id = static_cast<int>(open->trials.size());
      t.word = *word;
      t.ink = *ink;
      t.congruent = (*word == *ink);
      t.presented_us = e->t_us;
      index[*id] = open->trials.size();
      open->trials.push_back(t);
    } else if (e->kind == EventKind::kTrialResponse) {
      auto it = index.find(*id);
      if (it == index.end()) throw Error("stroop", "BAD_BLOCK", "response to unknown trial " + *id);
      auto c = parse_color(e->get("response").value_or(""));
      if (!c) throw Error("stroop", "BAD_BLOCK", "trial " + *id + " bad response");
      open->trials[it->second].respond(*c, e->t_us);
    } else if (e->kind == EventKind::kTrialEnd) {
      auto it = index.find(*id);
      if (it != index.end() && e->get("outcome") == "timeout") open->trials[it->second].timed_out = true;
    }
  }
  return blocks;
}

std::vector<BlockSpan> block_spans(const protocol::SessionLog& log) {
  std::vector<BlockSpan> spans;
  std::optional<BlockSpan> open;
  for (const auto& m : log.records) {
    const auto* e = std::get_if<EventRecord>(&m);
    if (e == nullptr) continue;
    if (is_stroop_block_event(*e, EventKind::kBlockStart)) {
      auto cond = parse_condition(e->get("condition").value_or(""));
      if (!cond) throw Error("stroop", "BAD_BLOCK", "Stroop block without condition");
      open = BlockSpan{e->t_us, e->t_us, *cond};
    } else if (open && is_stroop_block_event(*e, EventKind::kBlockEnd)) {
      open->end_us = e->t_us;
      spans.push_back(*open);
      open.reset();
    }
  }
  return spans;
}

std::vector<features::FeatureVector> label_windows(std::vector<features::FeatureVector> vectors,
                                                   const protocol::SessionLog& log, LabelStrategy strategy,
                                                   const TlxReport* tlx, double threshold) {
  using features::LoadLabel;
  if (strategy == LabelStrategy::kTlxMental) {
    if (tlx == nullptr) throw Error("stroop", "NO_TLX_REPORT");
    const LoadLabel label = tlx->mental >= threshold ? LoadLabel::kHigh : LoadLabel::kLow;
    for (auto& v : vectors) {
      v.label = v.phase == protocol::Phase::kTraining ? std::optional(label) : std::nullopt;
    }
    return vectors;
  }
  const auto spans = block_spans(log);
  for (auto& v : vectors) {
    v.label.reset();
    for (const auto& s : spans) {
      if (v.window_end_us >= s.start_us && v.window_end_us < s.end_us) {
        v.label = s.condition == BlockCondition::kCongruent ? LoadLabel::kLow : LoadLabel::kHigh;
        break;
      }
    }
  }
  return vectors;
}

}  // namespace cogload::stroop
