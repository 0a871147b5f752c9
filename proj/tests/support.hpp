#pragma once

#include <functional>
#include <string>

#include <gtest/gtest.h>

#include "cogload/error.hpp"
#include "cogload/protocol.hpp"
#include "cogload/random.hpp"
#include "cogload/simgen.hpp"

namespace testsupport {

/// Qualified code of the cogload::Error thrown by `f`, or "" when none is.
inline std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const cogload::Error& e) {
    return e.qualified_code();
  }
  return "";
}

#define EXPECT_CODE(stmt, code) EXPECT_EQ(testsupport::error_code([&] { stmt; }), code)

inline cogload::protocol::Message random_message(cogload::Rng& rng, std::int64_t t) {
  using namespace cogload::protocol;
  switch (rng.below(6)) {
    case 0: {
      SessionHeader h;
      h.session_id = "S" + std::to_string(rng.below(1000));
      h.participant_pseudonym = "P" + std::to_string(rng.below(100));
      h.gaze_rate_hz = rng.uniform(1.0, 1000.0);
      h.phase = static_cast<Phase>(rng.below(3));
      h.mode = static_cast<SessionMode>(rng.below(3));
      h.started_at = "2026-01-0" + std::to_string(1 + rng.below(9)) + "T10:00:00Z";
      return h;
    }
    case 1: {
      GazeSample g{t, rng.uniform(-90.0, 90.0), rng.uniform(-90.0, 90.0), rng.uniform(1.0, 10.0), rng.bernoulli(0.8)};
      return g;
    }
    case 2: return RrSample{t, rng.uniform(200.0, 3000.0)};
    case 3: {
      EventRecord e{t, static_cast<EventKind>(rng.below(8)), {}};
      const auto n = rng.below(4);
      for (std::uint64_t k = 0; k < n; ++k) e.payload["k" + std::to_string(k)] = std::to_string(rng.next());
      return e;
    }
    case 4:
      return AdaptCommand{t, static_cast<int>(1 + rng.below(5)), rng.bernoulli(0.5),
                          static_cast<AdaptReason>(rng.below(4))};
    default: return Bye{t};
  }
}

/// Calibration, optional Stroop blocks, then a training phase.
inline cogload::simgen::SessionScript short_script(cogload::protocol::SessionMode mode, double training_s,
                                                   bool stroop = false) {
  cogload::simgen::SessionScript s;
  s.mode = mode;
  s.training_s = training_s;
  if (!stroop) s.stroop_blocks.clear();
  return s;
}

}  // namespace testsupport
