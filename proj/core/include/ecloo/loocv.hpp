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

// Leave-one-out error of an expectation-consistent fit.
//
// Removing sample mu perturbs the fields by dh = beta x_mu r_mu with
// r_mu = y_mu - x_mu^T m; the linear response of the reduced system is
// (H - beta x_mu x_mu^T)^{-1}, so the held-out residual becomes
//
//   y_mu - x_mu^T m_{-mu} = r_mu / (1 - beta x_mu^T H^{-1} x_mu)
//
// and the LOO error follows from the full fit alone. The literal and k-fold
// harnesses refit on reduced datasets to validate it.

#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ecloo/dataset.hpp"
#include "ecloo/ec.hpp"
#include "ecloo/prior.hpp"

namespace ecloo {

struct LooSample {
  Index index = 0;
  double residual_full = 0.0;
  double leverage = 0.0;
  double residual_loo_approx = 0.0;
  std::optional<double> residual_loo_literal;
  std::optional<Eigen::VectorXd> cavity_field;
  bool flagged = false;
};

enum class LooMethod { Approx, Literal, KFold };

struct LooReport {
  double eps_loo = 0.0;
  std::vector<LooSample> samples;
  std::vector<Index> flagged;
  LooMethod method = LooMethod::Approx;
  int folds = 0;  // k for KFold, M for Literal
  std::vector<Index> failed_folds;
  std::chrono::duration<double> wall_time{0.0};
};

std::string describe(const LooReport& report);

struct LooOptions {
  double denominator_floor = 1e-8;
  bool cavity_fields = false;
  int workers = 1;
  FitSettings fit_settings;
  std::uint64_t seed = 0;       // k-fold permutation
  double max_failed_fraction = 0.05;
};

// Approximate LOO error from the full fit: one pass of O(N^2) work per
// sample against the cached inverse Hessian, no refits.
LooReport approx_looe(const FitResult& fit, const Dataset& dataset,
                      double beta, const LooOptions& options = {});

// Cavity estimator m_{-mu} = m - (H - beta x x^T)^{-1} dh_mu using a rank-one
// downdate of the inverse Hessian.
Eigen::VectorXd loo_estimator(const FitResult& fit, const Dataset& dataset,
                              double beta, Index mu,
                              const LooOptions& options = {});

// (H - beta x x^T)^{-1} from H^{-1} by Sherman-Morrison.
Eigen::MatrixXd downdated_inverse(const Eigen::MatrixXd& hessian_inverse,
                                  const Eigen::VectorXd& x, double beta,
                                  double denominator_floor = 1e-8);

// Refits with every sample left out in turn, warm-started from the full fit.
// If `full_fit` is null the full fit is computed first.
LooReport literal_loocv(const Dataset& dataset, const PriorSpec& prior,
                        double beta, const LooOptions& options = {},
                        const FitResult* full_fit = nullptr);

// k-fold CV: seeded permutation, contiguous blocks, remainder spread one per
// fold. k == M gives the same numbers as literal_loocv.
LooReport kfold_cv(const Dataset& dataset, const PriorSpec& prior, double beta,
                   int k, const LooOptions& options = {},
                   const FitResult* full_fit = nullptr);

// Fold assignment used by kfold_cv; fold[mu] in [0, k).
std::vector<int> kfold_assignment(Index samples, int k, std::uint64_t seed);

}  // namespace ecloo
