#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sango {

enum class ErrorCode {
  EmptyImage,
  DegenerateWorld,
  PlacementOverflow,
  InvalidAction,
  NoPath,
  NoReachableGoal,
  NonMonotonicStep,
  NoAgentPath,
  EpisodeFinished,
  ShapeMismatch,
  LengthMismatch,
  NonFiniteLoss,
  IncompleteLog,
  EmptyBatch,
  CheckpointShapeMismatch,
  MissingArm,
  ParseError,
  IoError,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code);

/// All engine failures surface as this exception type; `code()` names the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sango
