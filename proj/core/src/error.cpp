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

#include "ecloo/error.hpp"

#include <sstream>

namespace ecloo {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::IntegrabilityViolation: return "IntegrabilityViolation";
    case Errc::RangeError: return "RangeError";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::DecompositionFailure: return "DecompositionFailure";
    case Errc::DomainError: return "DomainError";
    case Errc::InfeasibleTilt: return "InfeasibleTilt";
    case Errc::VarianceCollapse: return "VarianceCollapse";
    case Errc::NotConverged: return "NotConverged";
    case Errc::SingularHessian: return "SingularHessian";
    case Errc::RankOneSingularity: return "RankOneSingularity";
    case Errc::AllPointsFailed: return "AllPointsFailed";
    case Errc::NonMonotoneDetected: return "NonMonotoneDetected";
    case Errc::ConfigError: return "ConfigError";
    case Errc::ParseError: return "ParseError";
    case Errc::MissingTarget: return "MissingTarget";
    case Errc::NonNumericCell: return "NonNumericCell";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string collapse_message(std::size_t coordinate, double variance) {
  std::ostringstream os;
  os << "posterior variance " << variance << " at coordinate " << coordinate
     << " is below the variance floor";
  return os.str();
}

std::string location_message(std::size_t row, std::size_t column,
                             const std::string& detail) {
  std::ostringstream os;
  os << "row " << row << ", column " << column << ": " << detail;
  return os.str();
}

}  // namespace

VarianceCollapse::VarianceCollapse(std::size_t coordinate, double variance)
    : Error(Errc::VarianceCollapse, collapse_message(coordinate, variance)),
      coordinate_(coordinate),
      variance_(variance) {}

ParseError::ParseError(Errc code, std::size_t row, std::size_t column,
                       const std::string& detail)
    : Error(code, location_message(row, column, detail)),
      row_(row),
      column_(column) {}

}  // namespace ecloo
