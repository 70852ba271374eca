#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ood {

enum class ErrorCode {
  kBadMagic,
  kTruncatedFile,
  kNonFiniteValue,
  kEmptyMatrix,
  kEmptyVector,
  kLengthMismatch,
  kIoError,
  kParseError,
  kDimMismatch,
  kZeroNorm,
  kDegenerateData,
  kTooFewSamples,
  kIndexOutOfRange,
  kSamePair,
  kInvalidArgument,
  kKTooLarge,
  kTooFewNodes,
  kEmptyGraph,
  kUnassignedNode,
  kAllNodesIsolated,
  kEmptyHoldout,
  kEmptyInput,
  kNonFiniteScore,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ood
