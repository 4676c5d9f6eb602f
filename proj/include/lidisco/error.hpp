#pragma once

#include <stdexcept>
#include <string>

namespace lidisco {

enum class ErrorKind {
  MissingFile,
  MalformedHeader,
  NonMonotonicTimestamps,
  InvalidPose,
  MalformedRecord,
  InvalidConfig,
  InfeasiblePlacement,
  EmptyCluster,
  NoLabels,
  SpecMismatch,
  InvalidBuckets,
  Io,
};

const char* to_string(ErrorKind kind);

/// Every typed failure raised by the library. `what()` carries the location.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorKind::InvalidPose: return "InvalidPose";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InfeasiblePlacement: return "InfeasiblePlacement";
    case ErrorKind::EmptyCluster: return "EmptyCluster";
    case ErrorKind::NoLabels: return "NoLabels";
    case ErrorKind::SpecMismatch: return "SpecMismatch";
    case ErrorKind::InvalidBuckets: return "InvalidBuckets";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace lidisco
