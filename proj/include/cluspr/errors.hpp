#pragma once

#include <stdexcept>
#include <string>

namespace cluspr {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (index, manifest, model, qrels, plan).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Workspace or pipeline precondition not met (missing artifacts, bad flags).
class StateError : public Error {
 public:
  using Error::Error;
};

class EmptyDocument : public Error {
 public:
  using Error::Error;
};

class EmptyAfterTrim : public Error {
 public:
  using Error::Error;
};

class ZeroRow : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class EmptyModel : public FormatError {
 public:
  using FormatError::FormatError;
};

class MissingPlaintext : public Error {
 public:
  using Error::Error;
};

class InsufficientVocabulary : public Error {
 public:
  using Error::Error;
};

class NoDefinedClusters : public Error {
 public:
  using Error::Error;
};

}  // namespace cluspr
