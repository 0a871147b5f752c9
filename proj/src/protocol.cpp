#include "cogload/protocol.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <thread>

#include <json.hpp>

namespace cogload::protocol {

namespace {

using ordered_json = nlohmann::ordered_json;

template <typename Enum, std::size_t N>
std::optional<Enum> parse_from(const std::array<std::string_view, N>& names, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

constexpr std::array<std::string_view, 3> kPhaseNames{"CALIBRATION", "STROOP", "TRAINING"};
constexpr std::array<std::string_view, 3> kModeNames{"ADAPTIVE_RAW", "ADAPTIVE_PRIVACY", "REGULAR"};
constexpr std::array<std::string_view, 8> kEventNames{
    "TRIAL_START", "TRIAL_RESPONSE", "TRIAL_END",     "BLOCK_START",
    "BLOCK_END",   "HINT_REQUEST",   "TASK_COMPLETE", "ERROR_COMMITTED"};
constexpr std::array<std::string_view, 4> kReasonNames{"HIGH_LOAD_STREAK", "LOW_LOAD_STREAK",
                                                       "HINT_GRANTED", "INIT"};

[[noreturn]] void violation(const std::string& detail) {
  throw Error("protocol", "INVARIANT_VIOLATION", detail);
}

std::string_view kind_code(DecodeErrorKind k) {
  switch (k) {
    case DecodeErrorKind::kMalformedLine: return "MALFORMED_LINE";
    case DecodeErrorKind::kUnknownType: return "UNKNOWN_TYPE";
    case DecodeErrorKind::kInvariantViolation: return "INVARIANT_VIOLATION";
  }
  return "MALFORMED_LINE";
}

struct SchemaError {
  std::string detail;
};

const ordered_json& field(const ordered_json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw SchemaError{std::string("missing field '") + name + "'"};
  return *it;
}

std::int64_t get_t(const ordered_json& j) {
  const auto& v = field(j, "t_us");
  if (!v.is_number_integer()) throw SchemaError{"t_us must be an integer"};
  return v.get<std::int64_t>();
}

double get_number(const ordered_json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number()) throw SchemaError{std::string(name) + " must be a number"};
  return v.get<double>();
}

std::string get_string(const ordered_json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_string()) throw SchemaError{std::string(name) + " must be a string"};
  return v.get<std::string>();
}

bool get_bool(const ordered_json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_boolean()) throw SchemaError{std::string(name) + " must be a boolean"};
  return v.get<bool>();
}

template <typename Enum>
Enum get_enum(const ordered_json& j, const char* name, std::optional<Enum> (*parse)(std::string_view)) {
  auto s = get_string(j, name);
  auto e = parse(s);
  if (!e) throw SchemaError{std::string("bad ") + name + " '" + s + "'"};
  return *e;
}

ordered_json to_json(const Message& msg) {
  return std::visit(
      [](const auto& m) -> ordered_json {
        using T = std::decay_t<decltype(m)>;
        ordered_json j;
        if constexpr (std::is_same_v<T, SessionHeader>) {
          j["type"] = "hello";
          j["session_id"] = m.session_id;
          j["participant_pseudonym"] = m.participant_pseudonym;
          j["gaze_rate_hz"] = m.gaze_rate_hz;
          j["phase"] = to_string(m.phase);
          j["mode"] = to_string(m.mode);
          j["started_at"] = m.started_at;
        } else if constexpr (std::is_same_v<T, GazeSample>) {
          j["type"] = "gaze";
          j["t_us"] = m.t_us;
          j["gaze_x_deg"] = m.gaze_x_deg;
          j["gaze_y_deg"] = m.gaze_y_deg;
          j["pupil_mm"] = m.pupil_mm;
          j["valid"] = m.valid;
        } else if constexpr (std::is_same_v<T, RrSample>) {
          j["type"] = "rr";
          j["t_us"] = m.t_us;
          j["rr_ms"] = m.rr_ms;
        } else if constexpr (std::is_same_v<T, EventRecord>) {
          j["type"] = "event";
          j["t_us"] = m.t_us;
          j["kind"] = to_string(m.kind);
          j["payload"] = ordered_json::object();
          for (const auto& [k, v] : m.payload) j["payload"][k] = v;
        } else if constexpr (std::is_same_v<T, AdaptCommand>) {
          j["type"] = "adapt";
          j["t_us"] = m.t_us;
          j["difficulty"] = m.difficulty;
          j["hint"] = m.hint;
          j["reason"] = to_string(m.reason);
        } else {
          j["type"] = "bye";
          j["t_us"] = m.t_us;
        }
        return j;
      },
      msg);
}

Message from_json(const ordered_json& j, std::string_view line) {
  const std::string type = get_string(j, "type");
  if (type == "hello") {
    SessionHeader h;
    h.session_id = get_string(j, "session_id");
    h.participant_pseudonym = get_string(j, "participant_pseudonym");
    h.gaze_rate_hz = get_number(j, "gaze_rate_hz");
    h.phase = get_enum<Phase>(j, "phase", parse_phase);
    h.mode = get_enum<SessionMode>(j, "mode", parse_mode);
    h.started_at = get_string(j, "started_at");
    return h;
  }
  if (type == "gaze") {
    return GazeSample{get_t(j), get_number(j, "gaze_x_deg"), get_number(j, "gaze_y_deg"),
                      get_number(j, "pupil_mm"), get_bool(j, "valid")};
  }
  if (type == "rr") return RrSample{get_t(j), get_number(j, "rr_ms")};
  if (type == "event") {
    EventRecord e;
    e.t_us = get_t(j);
    e.kind = get_enum<EventKind>(j, "kind", parse_event_kind);
    const auto& p = field(j, "payload");
    if (!p.is_object()) throw SchemaError{"payload must be an object"};
    for (const auto& [k, v] : p.items()) {
      if (!v.is_string()) throw SchemaError{"payload values must be strings"};
      e.payload.emplace(k, v.get<std::string>());
    }
    return e;
  }
  if (type == "adapt") {
    const auto& d = field(j, "difficulty");
    if (!d.is_number_integer()) throw SchemaError{"difficulty must be an integer"};
    return AdaptCommand{get_t(j), d.get<int>(), get_bool(j, "hint"),
                        get_enum<AdaptReason>(j, "reason", parse_reason)};
  }
  if (type == "bye") return Bye{get_t(j)};
  throw DecodeError(DecodeErrorKind::kUnknownType, std::string(line), "type '" + type + "'");
}

}  // namespace

std::string_view to_string(Phase p) { return kPhaseNames[static_cast<std::size_t>(p)]; }
std::string_view to_string(SessionMode m) { return kModeNames[static_cast<std::size_t>(m)]; }
std::string_view to_string(EventKind k) { return kEventNames[static_cast<std::size_t>(k)]; }
std::string_view to_string(AdaptReason r) { return kReasonNames[static_cast<std::size_t>(r)]; }
std::optional<Phase> parse_phase(std::string_view s) { return parse_from<Phase>(kPhaseNames, s); }
std::optional<SessionMode> parse_mode(std::string_view s) { return parse_from<SessionMode>(kModeNames, s); }
std::optional<EventKind> parse_event_kind(std::string_view s) {
  return parse_from<EventKind>(kEventNames, s);
}
std::optional<AdaptReason> parse_reason(std::string_view s) {
  return parse_from<AdaptReason>(kReasonNames, s);
}

std::optional<std::int64_t> timestamp_of(const Message& msg) {
  return std::visit(
      [](const auto& m) -> std::optional<std::int64_t> {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, SessionHeader>) {
          return std::nullopt;
        } else {
          return m.t_us;
        }
      },
      msg);
}

void validate(const Message& msg) {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SessionHeader>) {
          if (!(m.gaze_rate_hz > 0.0) || !std::isfinite(m.gaze_rate_hz)) violation("gaze_rate_hz must be > 0");
          if (m.participant_pseudonym.empty()) violation("empty participant_pseudonym");
        } else if constexpr (std::is_same_v<T, GazeSample>) {
          if (!std::isfinite(m.gaze_x_deg) || !std::isfinite(m.gaze_y_deg) || !std::isfinite(m.pupil_mm))
            violation("non-finite gaze field");
          if (m.valid) {
            if (m.pupil_mm < kPupilMinMm || m.pupil_mm > kPupilMaxMm) violation("pupil_mm out of [1,10]");
            if (std::abs(m.gaze_x_deg) > kGazeMaxDeg || std::abs(m.gaze_y_deg) > kGazeMaxDeg)
              violation("gaze beyond 90 deg");
          }
        } else if constexpr (std::is_same_v<T, RrSample>) {
          if (!(m.rr_ms >= kRrMinMs && m.rr_ms <= kRrMaxMs)) violation("rr_ms out of [200,3000]");
        } else if constexpr (std::is_same_v<T, AdaptCommand>) {
          if (m.difficulty < 1 || m.difficulty > 5) violation("difficulty out of [1,5]");
        }
      },
      msg);
}

std::string encode_message(const Message& msg) {
  std::string s = to_json(msg).dump();
  s.push_back('\n');
  return s;
}

DecodeError::DecodeError(DecodeErrorKind kind, std::string line, const std::string& detail)
    : Error("protocol", std::string(kind_code(kind)), detail), kind_(kind), line_(std::move(line)) {}

Message decode_message(std::string_view line) {
  std::string_view body = line;
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);
  ordered_json j = ordered_json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw DecodeError(DecodeErrorKind::kMalformedLine, std::string(line), "not a JSON object");
  }
  Message msg;
  try {
    msg = from_json(j, line);
  } catch (const SchemaError& e) {
    throw DecodeError(DecodeErrorKind::kMalformedLine, std::string(line), e.detail);
  }
  try {
    validate(msg);
  } catch (const Error& e) {
    throw DecodeError(DecodeErrorKind::kInvariantViolation, std::string(line), e.what());
  }
  return msg;
}

std::optional<Message> LineDecoder::feed(std::string_view line) {
  try {
    auto msg = decode_message(line);
    ++decoded_;
    return msg;
  } catch (const DecodeError& e) {
    failures_.push_back({e.kind(), e.line(), e.what()});
    return std::nullopt;
  }
}

void OrderChecker::check(const Message& msg) {
  auto t = timestamp_of(msg);
  if (!t) return;
  auto fail = [](std::int64_t prev, std::int64_t cur) {
    throw Error("protocol", "NON_MONOTONIC_TIMESTAMP",
                "(" + std::to_string(prev) + ", " + std::to_string(cur) + ")");
  };
  if (last_any_ && *t < *last_any_) fail(*last_any_, *t);
  if (std::holds_alternative<GazeSample>(msg)) {
    if (last_gaze_ && *t <= *last_gaze_) fail(*last_gaze_, *t);
    last_gaze_ = t;
  } else if (std::holds_alternative<RrSample>(msg)) {
    if (last_rr_ && *t <= *last_rr_) fail(*last_rr_, *t);
    last_rr_ = t;
  }
  last_any_ = t;
}

SessionLog read_session_log(std::istream& in) {
  SessionLog log;
  bool have_header = false;
  auto stats = replay_session(in, ReplaySpeed::instant(), [&](const Message& m) {
    if (!have_header) {
      log.header = std::get<SessionHeader>(m);
      have_header = true;
    } else {
      log.records.push_back(m);
    }
  });
  log.skipped = std::move(stats.skipped);
  return log;
}

SessionLog read_session_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("protocol", "IO_ERROR", "cannot open " + path);
  return read_session_log(in);
}

void write_session_log(std::ostream& out, const SessionLog& log) {
  out << encode_message(log.header);
  for (const auto& m : log.records) out << encode_message(m);
}

void write_session_log(const std::string& path, const SessionLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("protocol", "IO_ERROR", "cannot write " + path);
  write_session_log(out, log);
}

ReplayStats replay_session(std::istream& in, ReplaySpeed speed,
                           const std::function<void(const Message&)>& sink) {
  ReplayStats stats;
  std::string line;
  bool have_header = false;
  LineDecoder decoder;
  OrderChecker order;
  std::optional<std::int64_t> prev_t;
  while (std::getline(in, line)) {
    if (!have_header) {
      if (line.empty()) continue;
      Message first;
      try {
        first = decode_message(line);
      } catch (const DecodeError&) {
        throw Error("protocol", "MISSING_HEADER", "first line is not a valid hello");
      }
      if (!std::holds_alternative<SessionHeader>(first)) {
        throw Error("protocol", "MISSING_HEADER", "first line is not a hello");
      }
      have_header = true;
      sink(first);
      continue;
    }
    if (line.empty()) continue;
    auto msg = decoder.feed(line);
    if (!msg) continue;
    order.check(*msg);
    if (speed.multiplier) {
      auto t = timestamp_of(*msg);
      if (t && prev_t && *t > *prev_t) {
        const double wait_us = static_cast<double>(*t - *prev_t) / *speed.multiplier;
        std::this_thread::sleep_for(std::chrono::microseconds(static_cast<std::int64_t>(wait_us)));
      }
      if (t) prev_t = t;
    }
    sink(*msg);
    ++stats.records;
  }
  if (!have_header) throw Error("protocol", "MISSING_HEADER", "empty session log");
  stats.skipped = decoder.failures();
  return stats;
}

}  // namespace cogload::protocol
