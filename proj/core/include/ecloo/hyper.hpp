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

#include <optional>
#include <string>
#include <vector>

#include "ecloo/dataset.hpp"
#include "ecloo/ec.hpp"
#include "ecloo/loocv.hpp"
#include "ecloo/prior.hpp"

namespace ecloo {

struct SweepGrid {
  std::vector<double> beta_values;
  std::vector<double> rho_values;
  // Ignored for the Bernoulli-Uniform family.
  std::vector<double> sigma_w2_values{1.0};
};

struct SweepPoint {
  double beta = 0.0;
  double rho = 0.0;
  double sigma_w2 = 0.0;  // NaN for families without a slab variance
  double eps = 0.0;
  double eps_loo = 0.0;
  double free_energy = 0.0;
  bool converged = false;
  std::string failure;  // empty unless the point failed
};

struct SweepResult {
  PriorFamily family = PriorFamily::BernoulliGauss;
  std::vector<SweepPoint> points;
  std::optional<std::size_t> best;  // argmin eps_loo over converged points
};

struct SweepOptions {
  int workers = 1;
  FitSettings fit_settings;
  LooOptions loo;
};

// Fits every grid point from m = 0 and reports training error, approximate
// LOO error and free energy. Points are listed beta-major, then rho, then
// sigma_w2, in the order given. Ties in eps_loo go to the smallest beta,
// then the smallest rho, then the smallest sigma_w2.
SweepResult sweep(const Dataset& dataset, PriorFamily family,
                  const SweepGrid& grid, const SweepOptions& options = {});

struct BetaSelection {
  double beta = 0.0;
  FitResult fit;
  LooReport report;
  SweepResult table;
};

// Minimizes the approximate LOO error over a beta grid at fixed prior. The
// grid is sorted and de-duplicated first, so its order is irrelevant.
BetaSelection select_beta(const Dataset& dataset, const PriorSpec& prior,
                          std::vector<double> beta_grid,
                          const SweepOptions& options = {});

struct CalibrationProbe {
  double rho = 0.0;
  double achieved_K = 0.0;
  bool converged = false;
};

struct CalibrationResult {
  double K = 0.0;
  double rho = 0.0;
  double achieved_K = 0.0;
  int iterations = 0;
  bool used_grid_fallback = false;
  std::vector<CalibrationProbe> probes;
  FitResult fit;
};

struct CalibrationOptions {
  double rel_tol = 1e-6;  // |achieved - K| <= rel_tol * max(1, K)
  int max_probes = 200;
  FitSettings fit_settings;
};

// Finds rho such that the posterior inclusion probabilities of the converged
// fit sum to K. Probes warm-start from the previous probe.
CalibrationResult calibrate_rho(const Dataset& dataset, double beta, double K,
                                PriorFamily family,
                                std::optional<double> sigma_w2 = std::nullopt,
                                const CalibrationOptions& options = {});

struct KSelectionRow {
  double beta = 0.0;
  double rho = 0.0;
  double achieved_K = 0.0;
  double eps = 0.0;
  double eps_loo = 0.0;
  bool converged = false;
  std::string failure;
};

struct KSelection {
  double K = 0.0;
  double beta = 0.0;
  double rho = 0.0;
  double achieved_K = 0.0;
  double eps = 0.0;
  FitResult fit;
  LooReport report;
  std::vector<KSelectionRow> table;  // one row per beta, ascending
};

// Sparsity-controlled model selection: for every beta of the grid, rho is
// calibrated so that the posterior expects K non-zero components, and the
// beta with the smallest approximate LOO error is returned (ties go to the
// smaller beta). Grid points run in parallel.
KSelection calibrate_and_select(const Dataset& dataset, double K,
                                PriorFamily family,
                                std::optional<double> sigma_w2,
                                std::vector<double> beta_grid,
                                const CalibrationOptions& calibration = {},
                                const SweepOptions& options = {});

}  // namespace ecloo
