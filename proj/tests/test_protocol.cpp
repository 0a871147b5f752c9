#include <sstream>

#include "cogload/protocol.hpp"
#include "support.hpp"

using namespace cogload;
using namespace cogload::protocol;

TEST(Protocol, GazeLineCarriesTypeAndFields) {
  const auto line = encode_message(GazeSample{1000, 0.0, 0.0, 3.5, true});
  EXPECT_NE(line.find("\"type\":\"gaze\""), std::string::npos);
  for (const char* key : {"t_us", "gaze_x_deg", "gaze_y_deg", "pupil_mm", "valid"}) {
    EXPECT_NE(line.find(key), std::string::npos) << key;
  }
  EXPECT_EQ(line.back(), '\n');
}

TEST(Protocol, RrRoundTrip) {
  const Message m = RrSample{0, 800.0};
  EXPECT_EQ(decode_message(encode_message(m)), m);
}

TEST(Protocol, DecodeRr) {
  const auto m = decode_message(R"({"type":"rr","t_us":500,"rr_ms":820})");
  ASSERT_TRUE(std::holds_alternative<RrSample>(m));
  EXPECT_EQ(std::get<RrSample>(m), (RrSample{500, 820.0}));
}

TEST(Protocol, DecodeErrorsCarryKindAndLine) {
  auto kind_of = [](const std::string& line) {
    try {
      decode_message(line);
    } catch (const DecodeError& e) {
      EXPECT_EQ(e.line(), line);
      return e.kind();
    }
    ADD_FAILURE() << "no error for " << line;
    return DecodeErrorKind::kMalformedLine;
  };
  EXPECT_EQ(kind_of(R"({"type":"rr","t_us":500,"rr_ms":50})"), DecodeErrorKind::kInvariantViolation);
  EXPECT_EQ(kind_of("\x01\x02garbage{"), DecodeErrorKind::kMalformedLine);
  EXPECT_EQ(kind_of(R"({"type":"teleport","t_us":1})"), DecodeErrorKind::kUnknownType);
  EXPECT_EQ(kind_of(R"({"type":"gaze","t_us":1,"gaze_x_deg":0,"gaze_y_deg":0,"pupil_mm":12,"valid":true})"),
            DecodeErrorKind::kInvariantViolation);
  EXPECT_EQ(kind_of(R"({"type":"adapt","t_us":1,"difficulty":6,"hint":false,"reason":"INIT"})"),
            DecodeErrorKind::kInvariantViolation);
}

TEST(Protocol, FuzzedRoundTrip) {
  Rng rng(42);
  for (int i = 0; i < 10000; ++i) {
    const auto m = testsupport::random_message(rng, static_cast<std::int64_t>(rng.below(1'000'000'000)));
    ASSERT_EQ(decode_message(encode_message(m)), m) << encode_message(m);
  }
}

TEST(Protocol, SkipAndCount) {
  Rng rng(5);
  LineDecoder dec;
  std::size_t good = 0, bad = 0;
  for (int i = 0; i < 500; ++i) {
    if (rng.bernoulli(0.2)) {
      dec.feed("not json " + std::to_string(i));
      ++bad;
    } else {
      ASSERT_TRUE(dec.feed(encode_message(testsupport::random_message(rng, i))).has_value());
      ++good;
    }
  }
  EXPECT_EQ(dec.decoded(), good);
  EXPECT_EQ(dec.failures().size(), bad);
}

TEST(Protocol, ReplayInstantKeepsOrder) {
  SessionHeader h{"S1", "P01", 120.0, Phase::kCalibration, SessionMode::kRegular, ""};
  std::stringstream ss;
  ss << encode_message(h) << encode_message(RrSample{10, 800.0}) << encode_message(GazeSample{20, 0, 0, 3.0, true})
     << encode_message(Bye{30});
  std::vector<std::int64_t> ts;
  const auto stats = replay_session(ss, ReplaySpeed::instant(), [&](const Message& m) {
    if (auto t = timestamp_of(m)) ts.push_back(*t);
  });
  EXPECT_EQ(stats.records, 3u);
  EXPECT_EQ(ts, (std::vector<std::int64_t>{10, 20, 30}));
}

TEST(Protocol, ReplayRejectsBackwardsTime) {
  SessionHeader h{"S1", "P01", 120.0, Phase::kCalibration, SessionMode::kRegular, ""};
  std::stringstream ss;
  ss << encode_message(h) << encode_message(RrSample{100, 800.0}) << encode_message(RrSample{90, 800.0});
  try {
    replay_session(ss, ReplaySpeed::instant(), [](const Message&) {});
    FAIL() << "expected NON_MONOTONIC_TIMESTAMP";
  } catch (const Error& e) {
    EXPECT_EQ(e.qualified_code(), "protocol.NON_MONOTONIC_TIMESTAMP");
    EXPECT_NE(std::string(e.what()).find("(100, 90)"), std::string::npos);
  }
}

TEST(Protocol, ReplayNeedsHeader) {
  std::stringstream ss;
  ss << encode_message(RrSample{10, 800.0});
  EXPECT_CODE(replay_session(ss, ReplaySpeed::instant(), [](const Message&) {}), "protocol.MISSING_HEADER");
  std::stringstream empty;
  EXPECT_CODE(read_session_log(empty), "protocol.MISSING_HEADER");
}

TEST(Protocol, SessionLogRoundTripIsByteIdentical) {
  simgen::SessionScript script = testsupport::short_script(SessionMode::kRegular, 30.0);
  const auto log = simgen::generate_session(simgen::generate_participant(3), script,
                                            simgen::LoadTrace::constant(features::LoadLabel::kLow), 9);
  std::stringstream a;
  write_session_log(a, log);
  const auto back = read_session_log(a);
  std::stringstream b;
  write_session_log(b, back);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_TRUE(back.skipped.empty());
}
