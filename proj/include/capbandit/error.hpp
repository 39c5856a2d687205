#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace capbandit {

enum class ErrorKind {
  SumViolation,
  RangeViolation,
  NoConstrainedAgent,
  ParseError,
  DimensionMismatch,
  NonBinaryReward,
  CholeskyFailure,
  InvalidAgent,
  CountMismatch,
  InfeasibleCounts,
  CapacityOutsideWindow,
  Infeasible,
  ScoreOverflow,
  NetworkMalformed,
  InvalidSpec,
  CheckpointError,
  UnknownKey,
  TypeError,
  ValidationError,
  EmptyTable,
  IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SumViolation: return "SumViolation";
    case ErrorKind::RangeViolation: return "RangeViolation";
    case ErrorKind::NoConstrainedAgent: return "NoConstrainedAgent";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonBinaryReward: return "NonBinaryReward";
    case ErrorKind::CholeskyFailure: return "CholeskyFailure";
    case ErrorKind::InvalidAgent: return "InvalidAgent";
    case ErrorKind::CountMismatch: return "CountMismatch";
    case ErrorKind::InfeasibleCounts: return "InfeasibleCounts";
    case ErrorKind::CapacityOutsideWindow: return "CapacityOutsideWindow";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::ScoreOverflow: return "ScoreOverflow";
    case ErrorKind::NetworkMalformed: return "NetworkMalformed";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::CheckpointError: return "CheckpointError";
    case ErrorKind::UnknownKey: return "UnknownKey";
    case ErrorKind::TypeError: return "TypeError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::EmptyTable: return "EmptyTable";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the library; `kind()` tells callers what failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace capbandit
