// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace e2eqr {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or widths that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Token id or target outside its valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Caller violated a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A sequence exceeds a configured maximum length.
class LengthError : public Error {
 public:
  using Error::Error;
};

/// Document graph cannot be serialized (disconnected documents).
class ArrangementError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (dataset records, config files).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint and vocabulary/dataset disagree.
class CompatibilityError : public DataError {
 public:
  using DataError::DataError;
};

/// Prediction and reference files do not cover the same ids.
class AlignmentError : public DataError {
 public:
  using DataError::DataError;
};

/// Non-finite values during training or evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace e2eqr
