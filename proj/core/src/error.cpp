#include "sango/error.hpp"

namespace sango {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyImage: return "EmptyImage";
    case ErrorCode::DegenerateWorld: return "DegenerateWorld";
    case ErrorCode::PlacementOverflow: return "PlacementOverflow";
    case ErrorCode::InvalidAction: return "InvalidAction";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::NoReachableGoal: return "NoReachableGoal";
    case ErrorCode::NonMonotonicStep: return "NonMonotonicStep";
    case ErrorCode::NoAgentPath: return "NoAgentPath";
    case ErrorCode::EpisodeFinished: return "EpisodeFinished";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::IncompleteLog: return "IncompleteLog";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::CheckpointShapeMismatch: return "CheckpointShapeMismatch";
    case ErrorCode::MissingArm: return "MissingArm";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace sango
