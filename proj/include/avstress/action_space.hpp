#pragma once

#include <stdexcept>

#include "avstress/types.hpp"

namespace avs {

/// Discrete action space for background vehicles: 31 acceleration levels
/// from -4.0 to +2.0 m/s^2 in 0.2 steps (indices 0..30, index 20 is
/// exactly zero), then left (31) and right (32) lane changes.
inline constexpr int kActionCount = 33;
inline constexpr int kAccelActionCount = 31;
inline constexpr int kLeftAction = 31;
inline constexpr int kRightAction = 32;
inline constexpr int kZeroAccelAction = 20;

inline DriverAction decode_action(int action) {
  if (action < 0 || action >= kActionCount) {
    throw std::invalid_argument("decode_action: index out of range");
  }
  if (action == kLeftAction) return {Maneuver::kLeft, 0.0};
  if (action == kRightAction) return {Maneuver::kRight, 0.0};
  // (2i - 40) / 10 keeps every level an exact multiple of 0.1 in binary
  //-rounded terms and makes index 20 exactly 0.0.
  return {Maneuver::kKeep, static_cast<double>(2 * action - 40) / 10.0};
}

}  // namespace avs
