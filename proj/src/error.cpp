#include "ood/error.hpp"

namespace ood {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kEmptyVector: return "EmptyVector";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kZeroNorm: return "ZeroNorm";
    case ErrorCode::kDegenerateData: return "DegenerateData";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kSamePair: return "SamePair";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kTooFewNodes: return "TooFewNodes";
    case ErrorCode::kEmptyGraph: return "EmptyGraph";
    case ErrorCode::kUnassignedNode: return "UnassignedNode";
    case ErrorCode::kAllNodesIsolated: return "AllNodesIsolated";
    case ErrorCode::kEmptyHoldout: return "EmptyHoldout";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNonFiniteScore: return "NonFiniteScore";
  }
  return "Unknown";
}

}  // namespace ood
