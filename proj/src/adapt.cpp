#include "cogload/adapt.hpp"

#include <cmath>
#include <string>

#include "cogload/error.hpp"

namespace cogload::adapt {

using protocol::AdaptCommand;
using protocol::AdaptReason;

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::kLow: return "LOW";
    case Classification::kHigh: return "HIGH";
    case Classification::kNotInferable: return "NOT_INFERABLE";
  }
  return "?";
}

void ControllerConfig::validate(double hop_s) const {
  if (k_high < 1 || k_low < 1) throw Error("adapt", "BAD_CONFIG", "k_high and k_low must be >= 1");
  if (!(cooldown_s >= hop_s)) throw Error("adapt", "BAD_CONFIG", "cooldown_s must be >= the hop interval");
}

std::int64_t ControllerConfig::cooldown_us() const { return std::llround(cooldown_s * 1e6); }

std::optional<AdaptCommand> step(ControllerState& s, Classification c, std::int64_t t_us,
                                 const ControllerConfig& config) {
  if (s.last_t_us && t_us < *s.last_t_us) {
    throw Error("adapt", "TIME_REGRESSION", std::to_string(t_us) + " < " + std::to_string(*s.last_t_us));
  }
  s.last_t_us = t_us;
  switch (c) {
    case Classification::kHigh:
      ++s.streak_high;
      s.streak_low = 0;
      break;
    case Classification::kLow:
      ++s.streak_low;
      s.streak_high = 0;
      break;
    case Classification::kNotInferable:
      s.streak_high = 0;
      s.streak_low = 0;
      return std::nullopt;
  }
  const bool cooled = !s.last_change_us || t_us - *s.last_change_us >= config.cooldown_us();
  if (!cooled) return std::nullopt;

  if (s.streak_high == config.k_high && s.difficulty > kMinDifficulty) {
    --s.difficulty;
    s.streak_high = s.streak_low = 0;
    s.last_change_us = t_us;
    return AdaptCommand{t_us, s.difficulty, config.hint_on_ease, AdaptReason::kHighLoadStreak};
  }
  if (s.streak_low == config.k_low && s.difficulty < kMaxDifficulty) {
    ++s.difficulty;
    s.streak_high = s.streak_low = 0;
    s.last_change_us = t_us;
    return AdaptCommand{t_us, s.difficulty, false, AdaptReason::kLowLoadStreak};
  }
  return std::nullopt;
}

std::optional<AdaptCommand> handle_hint_request(ControllerState& s, protocol::SessionMode mode, std::int64_t t_us) {
  if (mode != protocol::SessionMode::kRegular) return std::nullopt;
  ++s.hints_granted;
  return AdaptCommand{t_us, s.difficulty, true, AdaptReason::kHintGranted};
}

AdaptCommand initial_command(const ControllerState& s, std::int64_t t_us) {
  return {t_us, s.difficulty, false, AdaptReason::kInit};
}

}  // namespace cogload::adapt
