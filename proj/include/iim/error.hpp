// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iim {

enum class ErrorCode {
  MultipleCrossings,
  InsufficientPoints,
  RankDeficient,
  SingularWallStencil,
  SingularInterfaceSystem,
  UnsupportedOrder,
  TooLarge,
  Breakdown,
  BadResolution,
  ZeroDiagonal,
  Singular,
  NoConvergence,
  MaxIterations,
  Stagnation,
  Incompatible,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying one of the library error codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace iim
