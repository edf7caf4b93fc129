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

// Expectation-consistent free energy of Bayesian linear regression with a
// factorized spike-and-slab prior, minimized over the estimator m by damped
// Newton iterations.
//
// With chi = Q - q, q = |m|^2 / N and lambda_k the eigenvalues of X X^T, the
// free energy minimized here is
//
//   Phi(m) = beta RSS(m) + 1/2 sum_k ln(lambda_k + L) - N beta L chi / 2
//            + N/2 ln(beta chi) + N/2 - N E Q / 2
//            + h.m - sum_i ln Z_i(h_i, E)
//
// extremized over (L, Q, E, h). The stationarity conditions are
//
//   (1/N) sum_k 1 / (lambda_k + L) = beta chi          (secular equation)
//   E = 1/chi - beta L
//   Q = (1/N) sum_i M_i,  m_i = f(h_i; E)
//
// For a Gaussian prior this reproduces -ln Z exactly at the minimizer.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "ecloo/dataset.hpp"
#include "ecloo/prior.hpp"

namespace ecloo {

// Root L > -lambda_min of (1/N) sum_k 1/(lambda_k + L) = beta * chi.
double solve_lambda(const Spectrum& spectrum, double beta, double chi);

// Extremized tilt (h, E) and the prior moments at a given m.
struct TiltState {
  Eigen::VectorXd h;
  Eigen::VectorXd second_moments;  // M_i
  Eigen::VectorXd variances;       // M_i - m_i^2, evaluated stably
  Eigen::VectorXd inclusion_probs;
  double sum_log_partition = 0.0;
  double E = 0.0;
  double Q = 0.0;
  double q = 0.0;
  double chi = 0.0;
  double lambda_tilde = 0.0;
  double e_residual = 0.0;  // F(E) - E at the returned E
  int evaluations = 0;
};

struct TiltOptions {
  double e_tol = 1e-10;
  int max_inner = 200;
  std::optional<double> e_hint;
  const Eigen::VectorXd* h_hint = nullptr;
};

TiltState solve_tilt(const Eigen::VectorXd& m, const PriorSpec& prior,
                     double beta, const Spectrum& spectrum,
                     const TiltOptions& options = {});

// -beta X (y - X^T m) - E m + h
Eigen::VectorXd gradient(const Eigen::VectorXd& m, const Eigen::VectorXd& h,
                         double E, const Dataset& dataset, double beta);

// beta X X^T + diag(1 / (M_i - m_i^2) - E). Throws VarianceCollapse when a
// posterior variance is below variance_floor.
Eigen::MatrixXd hessian(const Eigen::VectorXd& m, const Eigen::VectorXd& Mi,
                        double E, const Dataset& dataset, double beta,
                        double variance_floor = 1e-12);
Eigen::MatrixXd hessian_from_variances(const Eigen::VectorXd& variances,
                                       double E, const Dataset& dataset,
                                       double beta,
                                       double variance_floor = 1e-12);

struct ECState {
  Eigen::VectorXd m;
  Eigen::VectorXd h;
  Eigen::VectorXd Mi;
  double E = 0.0;
  double Q = 0.0;
  double q = 0.0;
  double chi = 0.0;
  double lambda_tilde = 0.0;
  double free_energy = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct FitSettings {
  double grad_tol = 1e-8;   // relative to max(1, |beta X y|_inf)
  double step_tol = 1e-10;  // relative to max(1, |m|_inf)
  int max_outer = 500;
  double min_step = 1.0 / 1048576.0;  // 2^-20
  double armijo = 1e-4;
  double variance_floor = 1e-12;
  double e_tol = 1e-10;
  int max_inner = 200;
};

struct FitResult {
  ECState state;
  Eigen::MatrixXd hessian;
  Eigen::MatrixXd hessian_inverse;
  Eigen::VectorXd inclusion_probs;
  Eigen::VectorXd variances;
  bool hessian_positive_definite = false;
  double beta = 0.0;
  PriorSpec prior;
  FitSettings settings;
  // Per accepted Newton step: free energy after the step and the step size.
  std::vector<double> energy_trace;
  std::vector<double> step_trace;
  int shifted_steps = 0;  // steps that needed a Levenberg shift
};

// Bracketed objective of the free energy at m with (h, E, Q, L)
// re-extremized. The returned state carries the tilt and the free energy.
ECState evaluate_state(const Eigen::VectorXd& m, const Dataset& dataset,
                       const PriorSpec& prior, double beta,
                       const TiltOptions& options = {});

// Free energy of a state whose tilt fields satisfy the stationarity
// conditions. Only differences are meaningful for model comparison, but the
// constant is fixed so that the Gaussian case equals -ln Z.
double free_energy(const ECState& state, const Dataset& dataset, double beta,
                   const PriorSpec& prior);

FitResult fit(const Dataset& dataset, const PriorSpec& prior, double beta,
              const std::optional<Eigen::VectorXd>& init = std::nullopt,
              const FitSettings& settings = {});

// Residuals of the stationarity conditions at a fitted state, recomputed
// from scratch rather than read back from the solver.
struct FixedPointAudit {
  double mean_residual = 0.0;      // max_i |m_i - f(h_i; E)|
  double field_residual = 0.0;     // max_i |h_i - beta (X r)_i - E m_i|
  double field_scale = 1.0;        // max(1, |h|_inf)
  double e_residual = 0.0;         // |1/chi - beta L - E| / max(1, |E|)
  double secular_residual = 0.0;   // relative residual of the L equation
  bool energy_monotone = true;     // no accepted step raised Phi by more
                                   // than 1e-10 relative

  bool passed(double mean_tol = 1e-8, double field_tol = 1e-6,
              double e_tol = 1e-8, double secular_tol = 1e-12) const {
    return mean_residual <= mean_tol &&
           field_residual <= field_tol * field_scale && e_residual <= e_tol &&
           secular_residual <= secular_tol && energy_monotone;
  }
};

FixedPointAudit audit_fixed_point(const FitResult& fit, const Dataset& dataset);

// Number of fit() invocations in this process.
std::uint64_t fit_invocations() noexcept;

}  // namespace ecloo
