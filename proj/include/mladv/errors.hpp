// include/mladv/errors.hpp
//
// Copyright 2026  The mladv authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MLADV_ERRORS_HPP_
#define MLADV_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mladv {

// Common base so callers can catch anything raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or size disagreement between tensors.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Class label outside the valid range.
class LabelError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A cache or model handed to a backward pass does not match the forward pass
// that produced it (stale parameters, wrong layer, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

// Corrupt or mismatched on-disk data (corpora, checkpoints, CSVs).
class FormatError : public Error {
 public:
  using Error::Error;
};

// A numeric operation produced a non-finite value where one is not allowed.
class NumericError : public Error {
 public:
  using Error::Error;
};

// An utterance could not be routed to a model head (unknown language id).
class RoutingError : public Error {
 public:
  using Error::Error;
};

// Evaluation over an empty or incomplete set.
class EvalError : public Error {
 public:
  using Error::Error;
};

// Training failure (divergence, bad run setup).
class TrainError : public Error {
 public:
  using Error::Error;
};

}  // namespace mladv

#endif  // MLADV_ERRORS_HPP_
