#pragma once

// Live session loop: ingest -> window -> profile filter -> classify ->
// controller. Also the command log written next to each session log.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cogload/adapt.hpp"
#include "cogload/features.hpp"
#include "cogload/learn/model.hpp"
#include "cogload/protocol.hpp"

namespace cogload::server {

struct ServerConfig {
  features::ExtractionConfig extraction;
  adapt::ControllerConfig controller;
  std::string config_hash;  // provenance, copied into the command log
};

/// One classified training-phase hop.
struct HopRecord {
  std::int64_t t_us = 0;
  adapt::Classification classification = adapt::Classification::kNotInferable;
  std::optional<double> score;

  bool operator==(const HopRecord&) const = default;
};

/// A hint request that the session's mode does not honour.
struct IgnoredHint {
  std::int64_t t_us = 0;

  bool operator==(const IgnoredHint&) const = default;
};

using CommandLogEntry = std::variant<protocol::AdaptCommand, HopRecord, IgnoredHint>;

struct CommandLogHeader {
  std::string session_id;
  std::string participant;
  protocol::SessionMode mode = protocol::SessionMode::kRegular;
  std::optional<features::Profile> profile;  // empty for REGULAR
  std::string config_hash;
  std::optional<int> model_version;

  bool operator==(const CommandLogHeader&) const = default;
};

struct CommandLog {
  CommandLogHeader header;
  std::vector<CommandLogEntry> entries;  // in emission order

  std::vector<protocol::AdaptCommand> commands() const;
  std::vector<HopRecord> hops() const;
  bool operator==(const CommandLog&) const = default;
};

void write_command_log(std::ostream&, const CommandLog&);
void write_command_log(const std::string& path, const CommandLog&);
/// Throws adapt.CORRUPT_COMMAND_LOG.
CommandLog read_command_log(std::istream&);
CommandLog read_command_log(const std::string& path);

/// Serves one session. Adaptive modes need a model whose profile matches
/// the mode (adapt.PROFILE_MISMATCH otherwise); REGULAR mode never
/// classifies and only answers hint requests.
class SessionServer {
 public:
  SessionServer(const learn::TrainedModel* model, ServerConfig config);

  /// Feeds one record. The first must be the header (protocol.MISSING_HEADER).
  /// Returns the commands to send back to the client.
  std::vector<protocol::AdaptCommand> on_message(const protocol::Message& msg);

  /// Flushes pending windows at end of stream (also triggered by `bye`).
  std::vector<protocol::AdaptCommand> finish();

  bool finished() const noexcept { return finished_; }
  const protocol::SessionLog& session_log() const noexcept { return log_; }
  const CommandLog& command_log() const noexcept { return commands_; }
  const adapt::ControllerState& state() const noexcept { return state_; }

 private:
  void start(const protocol::SessionHeader& header);
  void handle_windows(std::vector<features::FeatureVector> windows, std::vector<protocol::AdaptCommand>& out);
  void emit(const protocol::AdaptCommand& cmd, std::vector<protocol::AdaptCommand>& out);

  const learn::TrainedModel* model_;
  ServerConfig config_;
  std::optional<features::StreamingExtractor> extractor_;
  std::optional<protocol::SessionHeader> header_;
  protocol::OrderChecker order_;
  adapt::ControllerState state_;
  protocol::SessionLog log_;
  CommandLog commands_;
  bool finished_ = false;
};

struct ServeResult {
  protocol::SessionLog session;
  CommandLog commands;
  std::size_t skipped_lines = 0;
};

/// Line-oriented session over a pair of streams; commands are written to
/// `out` as they are produced. Malformed lines are skipped and counted.
ServeResult serve_stream(std::istream& in, std::ostream& out, const learn::TrainedModel* model,
                         const ServerConfig& config);

/// Replays a recorded session through a fresh server.
CommandLog replay_commands(const protocol::SessionLog& log, const learn::TrainedModel* model,
                           const ServerConfig& config);

/// Accepts TCP connections on `port`, one session per connection, handled
/// in turn. Session and command logs are written to `out_dir` as
/// <session_id>.session.jsonl and <session_id>.commands.jsonl. Stops after
/// `max_sessions` sessions when that is positive.
void serve_tcp(std::uint16_t port, const std::string& out_dir, const learn::TrainedModel* model,
               const ServerConfig& config, int max_sessions);

}  // namespace cogload::server
