#pragma once

// Difficulty controller: consecutive-hop streaks with a cooldown between
// difficulty changes. Easing reacts after k_high HIGH hops, hardening after
// k_low LOW hops.

#include <cstdint>
#include <optional>
#include <string_view>

#include "cogload/protocol.hpp"

namespace cogload::adapt {

enum class Classification { kLow, kHigh, kNotInferable };
std::string_view to_string(Classification);

inline constexpr int kMinDifficulty = 1;
inline constexpr int kMaxDifficulty = 5;
inline constexpr int kStartDifficulty = 3;

struct ControllerConfig {
  int k_high = 3;
  int k_low = 5;
  double cooldown_s = 10.0;
  bool hint_on_ease = true;

  /// Throws adapt.BAD_CONFIG unless k_high, k_low >= 1 and cooldown >= hop.
  void validate(double hop_s) const;
  std::int64_t cooldown_us() const;
};

struct ControllerState {
  int difficulty = kStartDifficulty;
  int streak_high = 0;
  int streak_low = 0;
  std::optional<std::int64_t> last_change_us;
  std::optional<std::int64_t> last_t_us;
  int hints_granted = 0;

  bool operator==(const ControllerState&) const = default;
};

/// Advances the state by one hop. A change fires on the hop where the
/// relevant streak reaches exactly its threshold, provided the cooldown
/// since the last change has elapsed and the difficulty is not already at
/// the bound; both streaks then reset. A streak that reaches its threshold
/// inside the cooldown does not fire later. Throws adapt.TIME_REGRESSION if t_us goes backwards.
std::optional<protocol::AdaptCommand> step(ControllerState& state, Classification c, std::int64_t t_us,
                                           const ControllerConfig& config);

/// REGULAR mode grants every request with the difficulty unchanged;
/// adaptive modes ignore requests.
std::optional<protocol::AdaptCommand> handle_hint_request(ControllerState& state, protocol::SessionMode mode,
                                                          std::int64_t t_us);

/// Announces the starting difficulty.
protocol::AdaptCommand initial_command(const ControllerState& state, std::int64_t t_us);

}  // namespace cogload::adapt
