#pragma once

#include <stdexcept>
#include <string>

namespace smrep {

/// Input outside the domain an operation is defined on (motor range, counts, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Point sets or design matrices that make a computation ill-posed.
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch between a network and its inputs.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite activations or loss during training.
class TrainingFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed binary file. The message names the byte offset where parsing failed.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace smrep
