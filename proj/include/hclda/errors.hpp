#pragma once

#include <stdexcept>

namespace hclda {

/// Violations of an input contract (bad data, bad dimensions, bad files).
/// The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDataset : public InputError {
 public:
  using InputError::InputError;
};

class InvalidDimension : public InputError {
 public:
  using InputError::InputError;
};

class InvalidInput : public InputError {
 public:
  using InputError::InputError;
};

class InvalidPartition : public InputError {
 public:
  using InputError::InputError;
};

class InsufficientData : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

/// Failures of the numerics themselves (near-singular systems, leverages at
/// one, vanishing eigenvalues). The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrix : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateEigenvalue : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class LeverageOverflow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace hclda
