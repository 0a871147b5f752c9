#include "cogload/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace cogload::server {

using protocol::AdaptCommand;
using protocol::Message;
using protocol::SessionMode;
using Json = nlohmann::ordered_json;

// ---- command log --------------------------------------------------------

std::vector<AdaptCommand> CommandLog::commands() const {
  std::vector<AdaptCommand> out;
  for (const auto& e : entries) {
    if (const auto* c = std::get_if<AdaptCommand>(&e)) out.push_back(*c);
  }
  return out;
}

std::vector<HopRecord> CommandLog::hops() const {
  std::vector<HopRecord> out;
  for (const auto& e : entries) {
    if (const auto* h = std::get_if<HopRecord>(&e)) out.push_back(*h);
  }
  return out;
}

namespace {

std::optional<adapt::Classification> parse_classification(std::string_view s) {
  for (auto c : {adapt::Classification::kLow, adapt::Classification::kHigh, adapt::Classification::kNotInferable}) {
    if (adapt::to_string(c) == s) return c;
  }
  return std::nullopt;
}

Json header_json(const CommandLogHeader& h) {
  Json j;
  j["type"] = "command_log";
  j["session_id"] = h.session_id;
  j["participant"] = h.participant;
  j["mode"] = std::string(protocol::to_string(h.mode));
  j["profile"] = h.profile ? Json(std::string(features::to_string(*h.profile))) : Json(nullptr);
  j["config_hash"] = h.config_hash;
  j["model_version"] = h.model_version ? Json(*h.model_version) : Json(nullptr);
  return j;
}

[[noreturn]] void corrupt(const std::string& detail) { throw Error("adapt", "CORRUPT_COMMAND_LOG", detail); }

}  // namespace

void write_command_log(std::ostream& out, const CommandLog& log) {
  out << header_json(log.header).dump() << "\n";
  for (const auto& e : log.entries) {
    if (const auto* c = std::get_if<AdaptCommand>(&e)) {
      out << protocol::encode_message(*c);
    } else if (const auto* h = std::get_if<HopRecord>(&e)) {
      Json j;
      j["type"] = "hop";
      j["t_us"] = h->t_us;
      j["classification"] = std::string(adapt::to_string(h->classification));
      j["score"] = h->score ? Json(*h->score) : Json(nullptr);
      out << j.dump() << "\n";
    } else {
      Json j;
      j["type"] = "hint_ignored";
      j["t_us"] = std::get<IgnoredHint>(e).t_us;
      out << j.dump() << "\n";
    }
  }
}

void write_command_log(const std::string& path, const CommandLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("adapt", "IO_ERROR", "cannot write " + path);
  write_command_log(out, log);
}

CommandLog read_command_log(std::istream& in) {
  CommandLog log;
  std::string line;
  if (!std::getline(in, line)) corrupt("empty file");
  try {
    const Json h = Json::parse(line);
    if (h.at("type") != "command_log") corrupt("missing header");
    log.header.session_id = h.at("session_id").get<std::string>();
    log.header.participant = h.at("participant").get<std::string>();
    auto mode = protocol::parse_mode(h.at("mode").get<std::string>());
    if (!mode) corrupt("bad mode");
    log.header.mode = *mode;
    if (!h.at("profile").is_null()) {
      auto p = features::parse_profile(h.at("profile").get<std::string>());
      if (!p) corrupt("bad profile");
      log.header.profile = *p;
    }
    log.header.config_hash = h.at("config_hash").get<std::string>();
    if (!h.at("model_version").is_null()) log.header.model_version = h.at("model_version").get<int>();

    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const Json j = Json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "adapt") {
        log.entries.emplace_back(std::get<AdaptCommand>(protocol::decode_message(line)));
      } else if (type == "hop") {
        HopRecord r;
        r.t_us = j.at("t_us").get<std::int64_t>();
        auto c = parse_classification(j.at("classification").get<std::string>());
        if (!c) corrupt("bad classification");
        r.classification = *c;
        if (!j.at("score").is_null()) r.score = j.at("score").get<double>();
        log.entries.emplace_back(r);
      } else if (type == "hint_ignored") {
        log.entries.emplace_back(IgnoredHint{j.at("t_us").get<std::int64_t>()});
      } else {
        corrupt("unknown entry type " + type);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    corrupt(e.what());
  } catch (const protocol::DecodeError& e) {
    corrupt(e.what());
  }
  return log;
}

CommandLog read_command_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("adapt", "IO_ERROR", "cannot open " + path);
  return read_command_log(in);
}

// ---- session server -----------------------------------------------------

SessionServer::SessionServer(const learn::TrainedModel* model, ServerConfig config)
    : model_(model), config_(std::move(config)) {
  config_.extraction.window.validate();
  config_.controller.validate(config_.extraction.window.hop_s);
}

void SessionServer::start(const protocol::SessionHeader& header) {
  header_ = header;
  log_.header = header;
  commands_.header.session_id = header.session_id;
  commands_.header.participant = header.participant_pseudonym;
  commands_.header.mode = header.mode;
  commands_.header.config_hash = config_.config_hash;
  if (header.mode != SessionMode::kRegular) {
    const auto profile =
        header.mode == SessionMode::kAdaptiveRaw ? features::Profile::kRaw : features::Profile::kPrivacy;
    if (model_ == nullptr) throw Error("adapt", "NO_MODEL", "adaptive sessions need a trained model");
    const auto& meta = learn::meta_of(*model_);
    if (meta.profile != profile) {
      throw Error("adapt", "PROFILE_MISMATCH",
                  std::string(protocol::to_string(header.mode)) + " session with a " +
                      std::string(features::to_string(meta.profile)) + " model");
    }
    commands_.header.profile = profile;
    commands_.header.model_version = meta.version;
    extractor_.emplace(header, config_.extraction, profile);
  }
}

void SessionServer::emit(const AdaptCommand& cmd, std::vector<AdaptCommand>& out) {
  commands_.entries.emplace_back(cmd);
  out.push_back(cmd);
}

void SessionServer::handle_windows(std::vector<features::FeatureVector> windows, std::vector<AdaptCommand>& out) {
  for (const auto& v : windows) {
    if (v.phase != protocol::Phase::kTraining) continue;
    HopRecord hop{v.window_end_us, adapt::Classification::kNotInferable, std::nullopt};
    if (v.inferable) {
      try {
        const auto p = learn::predict(*model_, v);
        hop.classification =
            p.label == features::LoadLabel::kHigh ? adapt::Classification::kHigh : adapt::Classification::kLow;
        hop.score = p.score;
      } catch (const Error& e) {
        if (e.qualified_code() != "learn.MISSING_FEATURE") throw;
      }
    }
    commands_.entries.emplace_back(hop);
    if (auto cmd = adapt::step(state_, hop.classification, hop.t_us, config_.controller)) emit(*cmd, out);
  }
}

std::vector<AdaptCommand> SessionServer::on_message(const Message& msg) {
  std::vector<AdaptCommand> out;
  if (finished_) return out;
  if (const auto* h = std::get_if<protocol::SessionHeader>(&msg)) {
    if (header_) throw Error("protocol", "INVARIANT_VIOLATION", "second header in session");
    start(*h);
    emit(adapt::initial_command(state_, 0), out);
    return out;
  }
  if (!header_) throw Error("protocol", "MISSING_HEADER", "first record is not a header");
  if (std::holds_alternative<AdaptCommand>(msg)) return out;  // client echo; not part of the session
  order_.check(msg);
  log_.records.push_back(msg);
  if (std::holds_alternative<protocol::Bye>(msg)) {
    auto rest = finish();
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
  }
  if (extractor_) handle_windows(extractor_->push(msg), out);
  if (const auto* e = std::get_if<protocol::EventRecord>(&msg); e && e->kind == protocol::EventKind::kHintRequest) {
    if (auto cmd = adapt::handle_hint_request(state_, header_->mode, e->t_us)) {
      emit(*cmd, out);
    } else {
      commands_.entries.emplace_back(IgnoredHint{e->t_us});
    }
  }
  return out;
}

std::vector<AdaptCommand> SessionServer::finish() {
  std::vector<AdaptCommand> out;
  if (finished_ || !header_) return out;
  finished_ = true;
  if (extractor_) handle_windows(extractor_->finish(), out);
  return out;
}

ServeResult serve_stream(std::istream& in, std::ostream& out, const learn::TrainedModel* model,
                         const ServerConfig& config) {
  SessionServer server(model, config);
  protocol::LineDecoder decoder;
  std::string line;
  while (!server.finished() && std::getline(in, line)) {
    if (line.empty()) continue;
    auto msg = decoder.feed(line);
    if (!msg) continue;
    for (const auto& c : server.on_message(*msg)) out << protocol::encode_message(c);
    out.flush();
  }
  for (const auto& c : server.finish()) out << protocol::encode_message(c);
  out.flush();
  ServeResult r{server.session_log(), server.command_log(), decoder.failures().size()};
  r.session.skipped = decoder.failures();
  return r;
}

CommandLog replay_commands(const protocol::SessionLog& log, const learn::TrainedModel* model,
                           const ServerConfig& config) {
  SessionServer server(model, config);
  server.on_message(log.header);
  for (const auto& m : log.records) server.on_message(m);
  server.finish();
  return server.command_log();
}

// ---- TCP ----------------------------------------------------------------

namespace {

class FdBuf : public std::streambuf {
 public:
  explicit FdBuf(int fd) : fd_(fd) { setg(in_, in_, in_); setp(out_, out_ + sizeof out_); }
  ~FdBuf() override { sync(); }

 protected:
  int_type underflow() override {
    ssize_t n;
    do {
      n = ::recv(fd_, in_, sizeof in_, 0);
    } while (n < 0 && errno == EINTR);
    if (n <= 0) return traits_type::eof();
    setg(in_, in_, in_ + n);
    return traits_type::to_int_type(in_[0]);
  }
  int_type overflow(int_type c) override {
    if (sync() != 0) return traits_type::eof();
    if (!traits_type::eq_int_type(c, traits_type::eof())) {
      *pptr() = traits_type::to_char_type(c);
      pbump(1);
    }
    return traits_type::not_eof(c);
  }
  int sync() override {
    const char* p = pbase();
    while (p < pptr()) {
      const ssize_t n = ::send(fd_, p, static_cast<std::size_t>(pptr() - p), MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return -1;
      p += n;
    }
    setp(out_, out_ + sizeof out_);
    return 0;
  }

 private:
  int fd_;
  char in_[8192];
  char out_[8192];
};

}  // namespace

void serve_tcp(std::uint16_t port, const std::string& out_dir, const learn::TrainedModel* model,
               const ServerConfig& config, int max_sessions) {
  std::filesystem::create_directories(out_dir);
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw Error("adapt", "IO_ERROR", std::string("socket: ") + std::strerror(errno));
  const int yes = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listener, 8) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listener);
    throw Error("adapt", "IO_ERROR", "cannot listen on port " + std::to_string(port) + ": " + why);
  }
  for (int served = 0; max_sessions <= 0 || served < max_sessions; ++served) {
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    ServeResult r;
    try {
      FdBuf buf(fd);
      std::istream in(&buf);
      std::ostream out(&buf);
      r = serve_stream(in, out, model, config);
    } catch (const Error& e) {
      std::cerr << "session aborted: " << e.what() << "\n";
      ::close(fd);
      continue;
    }
    ::close(fd);
    const std::string base = out_dir + "/" + (r.session.header.session_id.empty() ? "session" : r.session.header.session_id);
    protocol::write_session_log(base + ".session.jsonl", r.session);
    write_command_log(base + ".commands.jsonl", r.commands);
  }
  ::close(listener);
}

}  // namespace cogload::server
