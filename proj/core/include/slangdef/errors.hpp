#pragma once

#include <stdexcept>
#include <string>

namespace slangdef {

/// Incompatible matrix or sequence shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Token id outside a vocabulary or table.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Unreadable or malformed input data (corpus, vocabulary, manifest).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint file that cannot be read back into a model.
class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};

/// Non-finite loss or gradient during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Backward pass given a cache produced before the parameters last changed.
class StaleCacheError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace slangdef
