// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace purikit {

// Bad arguments (shape, range, non-Hermitian input, bad flags) use
// std::invalid_argument directly. Everything below signals that the
// numbers themselves went wrong.

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A protocol or projector annihilated the input: the normalization
/// (success probability) fell below the degeneracy floor.
class DegenerateInput : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Hit-and-run could not find an accepted point on a chord.
class ChainStall : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// File could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace purikit
