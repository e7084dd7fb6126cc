#pragma once

#include <stdexcept>
#include <string>

namespace infodyn {

enum class ErrorKind {
  InvalidValue,
  InvalidArgument,
  Io,
  InsufficientSamples,
  SingularCovariance,
  StateSpaceTooLarge,
  DuplicatePoints,
  InsufficientPermutations,
  DegenerateTarget,
  EmptyLinkSet,
  Unstable,
  Config,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidValue: return "InvalidValue";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorKind::DuplicatePoints: return "DuplicatePoints";
    case ErrorKind::InsufficientPermutations: return "InsufficientPermutations";
    case ErrorKind::DegenerateTarget: return "DegenerateTarget";
    case ErrorKind::EmptyLinkSet: return "EmptyLinkSet";
    case ErrorKind::Unstable: return "Unstable";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (and the
/// CLI's exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace infodyn
