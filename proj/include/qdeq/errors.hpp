#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qdeq {

// Shape / range violations on public entry points.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A rotation-only operation was asked to act on a gate it cannot handle.
class UnsupportedGate : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Input that cannot be turned into a quantum state (e.g. amplitude-encoding
// the zero vector).
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SolverDiverged : public std::runtime_error {
 public:
  SolverDiverged(const std::string& what, int step)
      : std::runtime_error(what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LengthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qdeq
