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

// Synthetic teacher-student data, CSV ingestion and error summaries.
//
// CSV orientation: one sample per row, one feature per column. The library's
// design matrix is features x samples, so loading transposes the table.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ecloo/dataset.hpp"

namespace ecloo {

struct SynthConfig {
  Index N = 1000;
  double alpha = 0.5;
  double rho0 = 0.1;
  double sigma_w0_sq = 10.0;
  double sigma_n0_sq = 0.1;
  std::uint64_t seed = 0;
  Index test_samples = 0;

  Index samples() const;
  void validate() const;  // throws Errc::ConfigError
};

struct GroundTruth {
  Eigen::VectorXd w0;
  std::vector<Index> support;
};

struct SyntheticData {
  Dataset train;
  GroundTruth truth;
  std::optional<Dataset> test;
};

// X_{i mu} ~ N(0, 1/N), w0_i ~ (1 - rho0) delta + rho0 N(0, sigma_w0_sq),
// y = X^T w0 + n with n_mu ~ N(0, sigma_n0_sq). Each component draws from
// its own counter-based stream, so the output is a pure function of the
// config.
SyntheticData gen_synthetic(const SynthConfig& config);

struct CenteringRecord {
  bool centered = false;
  Eigen::VectorXd feature_means;
  double target_mean = 0.0;
};

struct Table {
  std::vector<std::string> feature_names;
  std::string target_name;
};

struct LoadedData {
  Dataset dataset;
  CenteringRecord centering;
  Table columns;
};

// Lines starting with '#' are comments. The first non-comment line is the
// header. Empty cells are an error; nothing is imputed.
LoadedData load_csv(const std::filesystem::path& path,
                    const std::string& target_column, bool center);
LoadedData parse_csv(std::istream& in, const std::string& target_column,
                     bool center);

// Subtracts per-feature means and the response mean.
std::pair<Dataset, CenteringRecord> center_dataset(const Dataset& dataset);

// Writes the dataset as a sample-per-row table with exact decimal rendering.
void write_csv(std::ostream& out, const Dataset& dataset,
               const std::vector<std::string>& comments = {},
               const Table& columns = {});
void write_csv(const std::filesystem::path& path, const Dataset& dataset,
               const std::vector<std::string>& comments = {},
               const Table& columns = {});

struct ErrorSummary {
  double eps = 0.0;
  std::optional<double> eps_g;
};

// eps = (1/2M) sum (y - x^T m)^2 on the training set; eps_g is the same
// average over the test set when one is given.
ErrorSummary error_summary(const Eigen::VectorXd& m, const Dataset& train,
                           const Dataset* test = nullptr);

}  // namespace ecloo
