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

// Text formats for fits, sweep tables, LOO reports and calibration tables.
//
// Numbers are written in the shortest decimal form that parses back to the
// same binary64 value. CSV tables may start with '#' comment lines carrying
// the settings that produced them.

#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecloo/ec.hpp"
#include "ecloo/hyper.hpp"
#include "ecloo/loocv.hpp"

namespace ecloo {

std::string format_double(double value);
// Accepts an optional leading '+', "nan", "inf" and "-inf". Returns nullopt
// unless the whole string is consumed.
std::optional<double> parse_double(std::string_view text);

// Fit file (JSON).
struct FitRecord {
  Eigen::VectorXd m;
  Eigen::VectorXd h;
  Eigen::VectorXd Mi;
  Eigen::VectorXd inclusion_probs;
  double E = 0.0;
  double free_energy = 0.0;
  bool converged = false;
  int iterations = 0;
  double beta = 0.0;
  PriorSpec prior;
  FitSettings settings;
};

FitRecord to_record(const FitResult& fit);
void write_fit_json(std::ostream& out, const FitResult& fit,
                    const std::vector<std::string>& comments = {});
FitRecord read_fit_json(std::istream& in);

inline constexpr std::string_view kSweepColumns =
    "beta,rho,sigma_w2,eps,eps_loo,free_energy,converged";
inline constexpr std::string_view kLooColumns =
    "mu,residual_full,leverage,residual_loo,flagged";

// Failed points keep their row; the reason goes into a trailing comment.
void write_sweep_csv(std::ostream& out, const SweepResult& result,
                     const std::vector<std::string>& comments = {});
std::vector<SweepPoint> read_sweep_csv(std::istream& in);

// `mu` is the 0-based sample index. Extra columns residual_loo_literal and
// residual_kfold are appended when the corresponding report is given.
void write_loo_csv(std::ostream& out, const LooReport& approx,
                   const LooReport* literal = nullptr,
                   const LooReport* kfold = nullptr,
                   const std::vector<std::string>& comments = {});

struct CalibrationRow {
  double K = 0.0;
  double rho = 0.0;
  double achieved_K = 0.0;
  double beta = 0.0;
  double eps_loo_approx = 0.0;
  std::optional<double> eps_loo_literal;
  double eps = 0.0;
};

inline constexpr std::string_view kCalibrationColumns =
    "K,rho,achieved_K,beta,eps_loo_approx,eps_loo_literal,eps";

void write_calibration_csv(std::ostream& out,
                           const std::vector<CalibrationRow>& rows,
                           const std::vector<std::string>& comments = {});

// Opens `path` for writing and hands the stream to `writer`; IoError on
// failure.
template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer);

void check_stream(const std::ostream& out, const std::filesystem::path& path);

}  // namespace ecloo

#include <fstream>

namespace ecloo {

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  check_stream(out, path);
  writer(out);
  out.flush();
  check_stream(out, path);
}

}  // namespace ecloo
