// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace hetersched {

/// Simulation time. One tick is one microsecond.
using Tick = std::uint64_t;

/// Sentinel for "no next event".
inline constexpr Tick kNever = std::numeric_limits<Tick>::max();

/// Converts a millisecond decimal to ticks, rounding half up.
Tick ms_to_ticks(double ms);

/// Rounds a non-negative real tick count half up.
Tick round_ticks(double ticks);

double ticks_to_seconds(Tick t);

enum class DeviceKind : std::uint8_t { CpuCore, Gpu };

const char* to_string(DeviceKind kind);

using InstanceId = std::uint32_t;
inline constexpr InstanceId kNoInstance = std::numeric_limits<InstanceId>::max();

enum class ErrorCode : std::uint8_t {
  // workflow validation
  CycleDetected,
  UnknownReference,
  NonPositiveCost,
  InvalidStructure,
  // workflow execution
  DoubleCompletion,
  // scheduling
  EmptyQueue,
  DuplicateInstance,
  UnknownOpId,
  // engine / cluster
  NoPendingWork,
  NoWorkRemaining,
  MismatchedWorkload,
  // input handling
  ParseError,
  ConfigError,
};

const char* to_string(ErrorCode code);

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for errors that stem from an invalid workload description.
  bool is_validation() const noexcept {
    switch (code_) {
      case ErrorCode::CycleDetected:
      case ErrorCode::UnknownReference:
      case ErrorCode::NonPositiveCost:
      case ErrorCode::InvalidStructure:
      case ErrorCode::ParseError:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

}  // namespace hetersched
