#pragma once

// Session data model and the line-delimited wire protocol shared by
// sensor/VR clients, the engine, and on-disk session logs.

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cogload/error.hpp"

namespace cogload::protocol {

enum class Phase { kCalibration, kStroop, kTraining };
enum class SessionMode { kAdaptiveRaw, kAdaptivePrivacy, kRegular };
enum class EventKind {
  kTrialStart,
  kTrialResponse,
  kTrialEnd,
  kBlockStart,
  kBlockEnd,
  kHintRequest,
  kTaskComplete,
  kErrorCommitted,
};
enum class AdaptReason { kHighLoadStreak, kLowLoadStreak, kHintGranted, kInit };

std::string_view to_string(Phase);
std::string_view to_string(SessionMode);
std::string_view to_string(EventKind);
std::string_view to_string(AdaptReason);
std::optional<Phase> parse_phase(std::string_view);
std::optional<SessionMode> parse_mode(std::string_view);
std::optional<EventKind> parse_event_kind(std::string_view);
std::optional<AdaptReason> parse_reason(std::string_view);

struct SessionHeader {
  std::string session_id;
  std::string participant_pseudonym;
  double gaze_rate_hz = 120.0;
  Phase phase = Phase::kCalibration;  // phase the session starts in
  SessionMode mode = SessionMode::kRegular;
  std::string started_at;  // metadata only, never used for computation

  bool operator==(const SessionHeader&) const = default;
};

struct GazeSample {
  std::int64_t t_us = 0;
  double gaze_x_deg = 0.0;
  double gaze_y_deg = 0.0;
  double pupil_mm = 0.0;
  bool valid = false;

  bool operator==(const GazeSample&) const = default;
};

struct RrSample {
  std::int64_t t_us = 0;
  double rr_ms = 0.0;

  bool operator==(const RrSample&) const = default;
};

using Payload = std::map<std::string, std::string>;

struct EventRecord {
  std::int64_t t_us = 0;
  EventKind kind = EventKind::kTrialStart;
  Payload payload;

  bool operator==(const EventRecord&) const = default;

  std::optional<std::string> get(const std::string& key) const {
    auto it = payload.find(key);
    if (it == payload.end()) return std::nullopt;
    return it->second;
  }
};

struct AdaptCommand {
  std::int64_t t_us = 0;
  int difficulty = 3;
  bool hint = false;
  AdaptReason reason = AdaptReason::kInit;

  bool operator==(const AdaptCommand&) const = default;
};

struct Bye {
  std::int64_t t_us = 0;

  bool operator==(const Bye&) const = default;
};

using Message = std::variant<SessionHeader, GazeSample, RrSample, EventRecord, AdaptCommand, Bye>;

/// Timestamp of a timed record; nullopt for the header.
std::optional<std::int64_t> timestamp_of(const Message&);

// Ingest-time bounds.
inline constexpr double kPupilMinMm = 1.0;
inline constexpr double kPupilMaxMm = 10.0;
inline constexpr double kGazeMaxDeg = 90.0;
inline constexpr double kRrMinMs = 200.0;
inline constexpr double kRrMaxMs = 3000.0;

/// Throws Error(protocol, INVARIANT_VIOLATION) if the record breaks a
/// type-level invariant.
void validate(const Message&);

/// One LF-terminated JSON object with a "type" discriminator.
std::string encode_message(const Message&);

enum class DecodeErrorKind { kMalformedLine, kUnknownType, kInvariantViolation };

class DecodeError : public Error {
 public:
  DecodeError(DecodeErrorKind kind, std::string line, const std::string& detail);
  DecodeErrorKind kind() const noexcept { return kind_; }
  const std::string& line() const noexcept { return line_; }

 private:
  DecodeErrorKind kind_;
  std::string line_;
};

/// Parses and validates one line (trailing newline optional). Throws DecodeError.
Message decode_message(std::string_view line);

struct DecodeFailure {
  DecodeErrorKind kind;
  std::string line;
  std::string detail;
};

/// Skip-and-count decoding: bad lines are recorded, never fatal.
class LineDecoder {
 public:
  std::optional<Message> feed(std::string_view line);
  const std::vector<DecodeFailure>& failures() const noexcept { return failures_; }
  std::size_t decoded() const noexcept { return decoded_; }

 private:
  std::vector<DecodeFailure> failures_;
  std::size_t decoded_ = 0;
};

/// A persisted session: header line followed by message lines.
struct SessionLog {
  SessionHeader header;
  std::vector<Message> records;  // header excluded
  std::vector<DecodeFailure> skipped;
};

/// Checks header presence and timestamp ordering: non-decreasing across all
/// records, strictly increasing within the gaze and RR streams.
class OrderChecker {
 public:
  void check(const Message&);

 private:
  std::optional<std::int64_t> last_any_;
  std::optional<std::int64_t> last_gaze_;
  std::optional<std::int64_t> last_rr_;
};

SessionLog read_session_log(std::istream&);
SessionLog read_session_log(const std::string& path);
void write_session_log(std::ostream&, const SessionLog&);
void write_session_log(const std::string& path, const SessionLog&);

/// Replay pacing: instant, or a real-time multiplier (2.0 = twice as fast).
struct ReplaySpeed {
  std::optional<double> multiplier;
  static ReplaySpeed instant() { return {}; }
  static ReplaySpeed realtime(double m) { return {m}; }
};

struct ReplayStats {
  std::size_t records = 0;  // excluding header
  std::vector<DecodeFailure> skipped;
};

/// Streams a session log to `sink`, header first, then records in file
/// order after ordering checks. Errors: MISSING_HEADER,
/// NON_MONOTONIC_TIMESTAMP (reports the first offending pair).
ReplayStats replay_session(std::istream&, ReplaySpeed, const std::function<void(const Message&)>& sink);

}  // namespace cogload::protocol
