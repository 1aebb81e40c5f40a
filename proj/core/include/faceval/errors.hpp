#pragma once

#include <stdexcept>
#include <string>

namespace faceval {

/// Base class of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. The message carries "<path>:<line>: ..." when known.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A record, config value or argument violates a documented invariant.
/// The message names the offending id or field.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Degenerate geometry: rank-deficient fits, non-invertible maps,
/// points at infinity after projective division.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// An evaluation cannot be carried out as requested (zero ground truth,
/// empty score sets, missing embeddings, pair-count ceiling exceeded).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Filesystem-level failure (unreadable path, short read, rename failure).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace faceval
