#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace lesionbench {

// Every failure the tool can surface carries a stable machine-readable code.
// The CLI prints diagnostics as "ERROR: <code>: <message>" and exits 2.
class BenchError : public std::runtime_error {
 public:
  BenchError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

namespace errc {
inline constexpr const char* kDimensionMismatch = "DimensionMismatch";
inline constexpr const char* kDomainError = "DomainError";
inline constexpr const char* kInsufficientData = "InsufficientData";
inline constexpr const char* kMissingPrediction = "MissingPrediction";
inline constexpr const char* kInvalidProbability = "InvalidProbability";
inline constexpr const char* kEmptyMatrix = "EmptyMatrix";
inline constexpr const char* kDegenerateLabels = "DegenerateLabels";
inline constexpr const char* kUnknownMetric = "UnknownMetric";
inline constexpr const char* kDegenerateFit = "DegenerateFit";
inline constexpr const char* kMissingPartitionScores = "MissingPartitionScores";
inline constexpr const char* kParseError = "ParseError";
inline constexpr const char* kDuplicateImageId = "DuplicateImageId";
inline constexpr const char* kMissingField = "MissingField";
inline constexpr const char* kDecodeError = "DecodeError";
inline constexpr const char* kUnsupportedFormat = "UnsupportedFormat";
inline constexpr const char* kHeaderMismatch = "HeaderMismatch";
inline constexpr const char* kValueOutOfRange = "ValueOutOfRange";
inline constexpr const char* kMissingRows = "MissingRows";
inline constexpr const char* kExtraRows = "ExtraRows";
inline constexpr const char* kInvalidConfig = "InvalidConfig";
inline constexpr const char* kIoError = "IoError";
}  // namespace errc

}  // namespace lesionbench
