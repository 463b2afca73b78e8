#pragma once

#include <stdexcept>
#include <string>

namespace rotmatch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input rejected before any computation ran. The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class InvalidBox : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InvalidArgument : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateHull : public Error {
 public:
  using Error::Error;
};

class DegenerateBox : public Error {
 public:
  using Error::Error;
};

class InfeasibleAssignment : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class SizeLimit : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

}  // namespace rotmatch
