// Copyright 2026 The ecloo Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ecloo {

enum class Errc {
  IntegrabilityViolation,
  RangeError,
  NonConvergence,
  DecompositionFailure,
  DomainError,
  InfeasibleTilt,
  VarianceCollapse,
  NotConverged,
  SingularHessian,
  RankOneSingularity,
  AllPointsFailed,
  NonMonotoneDetected,
  ConfigError,
  ParseError,
  MissingTarget,
  NonNumericCell,
  DimensionMismatch,
  IoError,
};

std::string_view to_string(Errc code) noexcept;

// Every failure raised by the library is an ecloo::Error carrying one of the
// codes above; the message is prefixed with the code name.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

class VarianceCollapse : public Error {
 public:
  VarianceCollapse(std::size_t coordinate, double variance);

  std::size_t coordinate() const noexcept { return coordinate_; }
  double variance() const noexcept { return variance_; }

 private:
  std::size_t coordinate_;
  double variance_;
};

// Row and column are 1-based and refer to the physical line of the file.
class ParseError : public Error {
 public:
  ParseError(Errc code, std::size_t row, std::size_t column,
             const std::string& detail);

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

}  // namespace ecloo
