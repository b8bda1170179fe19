// SPDX-FileCopyrightText: Copyright (c) 2026 The hetersched Authors
// SPDX-License-Identifier: Apache-2.0

#include "hetersched/types.hpp"

#include <cmath>

namespace hetersched {

Tick round_ticks(double ticks) {
  if (!(ticks > 0.0)) return 0;
  // Half-up on the nearest representable value; the small bias absorbs
  // products such as 1100 * 1.1 = 1210.0000000000002.
  return static_cast<Tick>(std::floor(ticks + 0.5 + 1e-9));
}

Tick ms_to_ticks(double ms) { return round_ticks(ms * 1000.0); }

double ticks_to_seconds(Tick t) { return static_cast<double>(t) / 1e6; }

const char* to_string(DeviceKind kind) { return kind == DeviceKind::Gpu ? "gpu" : "cpu"; }

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::UnknownReference: return "UnknownReference";
    case ErrorCode::NonPositiveCost: return "NonPositiveCost";
    case ErrorCode::InvalidStructure: return "InvalidStructure";
    case ErrorCode::DoubleCompletion: return "DoubleCompletion";
    case ErrorCode::EmptyQueue: return "EmptyQueue";
    case ErrorCode::DuplicateInstance: return "DuplicateInstance";
    case ErrorCode::UnknownOpId: return "UnknownOpId";
    case ErrorCode::NoPendingWork: return "NoPendingWork";
    case ErrorCode::NoWorkRemaining: return "NoWorkRemaining";
    case ErrorCode::MismatchedWorkload: return "MismatchedWorkload";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Error";
}

}  // namespace hetersched
