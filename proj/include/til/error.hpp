#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace til {

enum class ErrorKind {
  InvalidDepth,
  DegenerateTrack,
  TooShort,
  Config,
  LengthMismatch,
  WindowTooLarge,
  MissingHand,
  MixedFrameSizes,
  EmptyCandidates,
  CandidatesExhausted,
  Unparseable,
  BackendUnavailable,
  TestScript,
  Validation,
  Parse,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` distinguishes the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace til
