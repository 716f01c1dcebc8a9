// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cider {

enum class ErrorKind {
  Config,        // invalid hyperparameters or kernel geometry
  Input,         // bad data values (NaN, negative pixels, ...)
  Shape,         // incompatible tensor shapes
  Format,        // malformed file
  Architecture,  // weights file does not match the declared network
  Contract,      // API misuse (non-scalar loss, mismatched state)
  Budget,        // parameter guardrail
  Usage,         // CLI misuse
  Internal,      // non-finite loss and other runtime failures
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
        kind_(kind),
        detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }
  /// Same kind, message prefixed with "<context>: ".
  Error in(std::string_view context) const { return Error(kind_, std::string(context) + ": " + detail_); }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace cider
