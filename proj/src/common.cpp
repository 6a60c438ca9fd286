#include <string>

#include "til/error.hpp"
#include "til/types.hpp"

namespace til {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidDepth: return "invalid-depth";
    case ErrorKind::DegenerateTrack: return "degenerate-track";
    case ErrorKind::TooShort: return "too-short";
    case ErrorKind::Config: return "config";
    case ErrorKind::LengthMismatch: return "length-mismatch";
    case ErrorKind::WindowTooLarge: return "window-too-large";
    case ErrorKind::MissingHand: return "missing-hand";
    case ErrorKind::MixedFrameSizes: return "mixed-frame-sizes";
    case ErrorKind::EmptyCandidates: return "empty-candidates";
    case ErrorKind::CandidatesExhausted: return "candidates-exhausted";
    case ErrorKind::Unparseable: return "unparseable-response";
    case ErrorKind::BackendUnavailable: return "backend-unavailable";
    case ErrorKind::TestScript: return "test-script";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::Discriminator: return "discriminator";
    case Role::Localizer: return "localizer";
    case Role::Checker: return "checker";
  }
  return "unknown";
}

std::string_view to_string(Attribute attribute) noexcept {
  return attribute == Attribute::Contact ? "contact" : "separation";
}

Role role_from_string(std::string_view name) {
  if (name == "discriminator") return Role::Discriminator;
  if (name == "localizer") return Role::Localizer;
  if (name == "checker") return Role::Checker;
  throw Error(ErrorKind::Parse, "unknown role '" + std::string(name) + "'");
}

Attribute attribute_from_string(std::string_view name) {
  if (name == "contact") return Attribute::Contact;
  if (name == "separation") return Attribute::Separation;
  throw Error(ErrorKind::Parse, "unknown attribute '" + std::string(name) + "'");
}

}  // namespace til
