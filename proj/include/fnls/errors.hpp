#pragma once

#include <stdexcept>
#include <string>

namespace fnls {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid grid parameters or mismatched grids between operands.
class GridError : public Error {
public:
  using Error::Error;
};

/// A region, well or shifted profile does not fit the periodic box.
class GeometryError : public Error {
public:
  using Error::Error;
};

/// NaN/Inf encountered, division guard hit, solver divergence.
class NumericError : public Error {
public:
  using Error::Error;
};

/// A model or parameter set violates one of the standing assumptions.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Descent could not find an acceptable step.
class StagnationError : public NumericError {
public:
  using NumericError::NumericError;
};

/// Corrupt or malformed persisted data.
class FormatError : public Error {
public:
  using Error::Error;
};

/// The barycenter density vanished: input is too far from the dictionary.
class OutOfTubeError : public Error {
public:
  using Error::Error;
};

} // namespace fnls
