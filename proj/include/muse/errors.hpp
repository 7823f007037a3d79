#pragma once

#include <stdexcept>
#include <string>

namespace muse {

/// Base class for all library errors; catch this at the CLI boundary.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A cached intermediate (e.g. a forward cache) does not match the object
/// it is being replayed against.
class InvalidState : public Error {
 public:
  using Error::Error;
};

class CorruptCheckpoint : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

/// Inner linear solve failed to reach its residual target within the
/// iteration cap.
class SolverStalled : public Error {
 public:
  using Error::Error;
};

/// A solve stage produced a non-finite objective.
class SolveDiverged : public Error {
 public:
  SolveDiverged(int stage, const std::string& what) : Error(what), stage_(stage) {}
  int stage() const { return stage_; }

 private:
  int stage_;
};

}  // namespace muse
