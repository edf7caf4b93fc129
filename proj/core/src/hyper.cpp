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

#include "ecloo/hyper.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include "ecloo/data_io.hpp"
#include "ecloo/error.hpp"
#include "ecloo/parallel.hpp"

namespace ecloo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_positive_finite(const std::vector<double>& values,
                             const char* what) {
  if (values.empty()) {
    throw Error(Errc::ConfigError, std::string(what) + " grid is empty");
  }
  for (double v : values) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw Error(Errc::ConfigError,
                  std::string(what) + " grid has a non-positive entry");
    }
  }
}

PriorSpec make_prior(PriorFamily family, double rho, double sigma_w2) {
  switch (family) {
    case PriorFamily::BernoulliGauss:
      return PriorSpec::bernoulli_gauss(rho, sigma_w2);
    case PriorFamily::BernoulliUniform:
      return PriorSpec::bernoulli_uniform(rho);
    case PriorFamily::Custom:
      break;
  }
  throw Error(Errc::ConfigError, "custom slabs cannot be swept by family");
}

bool has_slab_variance(PriorFamily family) {
  return family == PriorFamily::BernoulliGauss;
}

struct PointOutcome {
  SweepPoint row;
  std::optional<FitResult> fit;
  std::optional<LooReport> report;
};

PointOutcome evaluate_point(const Dataset& dataset, PriorFamily family,
                            double beta, double rho, double sigma_w2,
                            const SweepOptions& options, bool keep) {
  PointOutcome out;
  SweepPoint& row = out.row;
  row.beta = beta;
  row.rho = rho;
  row.sigma_w2 = has_slab_variance(family) ? sigma_w2 : kNaN;
  row.eps = row.eps_loo = row.free_energy = kNaN;
  try {
    const PriorSpec prior = make_prior(family, rho, sigma_w2);
    FitResult result =
        fit(dataset, prior, beta, std::nullopt, options.fit_settings);
    row.eps = error_summary(result.state.m, dataset).eps;
    row.free_energy = result.state.free_energy;
    if (!result.state.converged) {
      row.failure = "fit did not converge";
      return out;
    }
    LooOptions loo = options.loo;
    loo.workers = 1;  // the grid is the parallel axis
    LooReport report = approx_looe(result, dataset, beta, loo);
    row.eps_loo = report.eps_loo;
    row.converged = std::isfinite(row.eps_loo);
    if (!row.converged) row.failure = "LOO error is not finite";
    if (keep) {
      out.fit = std::move(result);
      out.report = std::move(report);
    }
  } catch (const Error& e) {
    row.converged = false;
    row.failure = e.what();
  }
  return out;
}

// Smaller key wins; NaN sigma_w2 compares equal to itself here.
bool better(const SweepPoint& a, const SweepPoint& b) {
  auto key = [](const SweepPoint& p) {
    const double s = std::isnan(p.sigma_w2) ? 0.0 : p.sigma_w2;
    return std::make_tuple(p.eps_loo, p.beta, p.rho, s);
  };
  return key(a) < key(b);
}

std::vector<PointOutcome> run_grid(const Dataset& dataset, PriorFamily family,
                                   const SweepGrid& grid,
                                   const SweepOptions& options, bool keep,
                                   SweepResult& result) {
  require_positive_finite(grid.beta_values, "beta");
  require_positive_finite(grid.rho_values, "rho");
  for (double r : grid.rho_values) {
    if (r > 1.0) throw Error(Errc::ConfigError, "rho grid exceeds 1");
  }
  std::vector<double> sigmas = grid.sigma_w2_values;
  if (has_slab_variance(family)) {
    require_positive_finite(sigmas, "sigma_w2");
  } else {
    sigmas = {kNaN};
  }

  struct Coord {
    double beta, rho, sigma;
  };
  std::vector<Coord> coords;
  for (double b : grid.beta_values) {
    for (double r : grid.rho_values) {
      for (double s : sigmas) coords.push_back({b, r, s});
    }
  }

  std::vector<PointOutcome> outcomes(coords.size());
  parallel_for(coords.size(), options.workers, [&](std::size_t i) {
    outcomes[i] = evaluate_point(dataset, family, coords[i].beta,
                                 coords[i].rho, coords[i].sigma, options, keep);
  });

  result.family = family;
  result.points.clear();
  result.best.reset();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    result.points.push_back(outcomes[i].row);
    const SweepPoint& p = result.points.back();
    if (!p.converged) continue;
    if (!result.best || better(p, result.points[*result.best])) {
      result.best = i;
    }
  }
  if (!result.best) {
    throw Error(Errc::AllPointsFailed, "no grid point produced a converged fit");
  }
  return outcomes;
}

}  // namespace

SweepResult sweep(const Dataset& dataset, PriorFamily family,
                  const SweepGrid& grid, const SweepOptions& options) {
  SweepResult result;
  run_grid(dataset, family, grid, options, false, result);
  return result;
}

BetaSelection select_beta(const Dataset& dataset, const PriorSpec& prior,
                          std::vector<double> beta_grid,
                          const SweepOptions& options) {
  prior.validate();
  if (prior.family == PriorFamily::Custom) {
    throw Error(Errc::ConfigError, "beta selection needs a named prior family");
  }
  std::sort(beta_grid.begin(), beta_grid.end());
  beta_grid.erase(std::unique(beta_grid.begin(), beta_grid.end()),
                  beta_grid.end());
  SweepGrid grid;
  grid.beta_values = std::move(beta_grid);
  grid.rho_values = {prior.rho};
  grid.sigma_w2_values = {prior.sigma_w2};

  BetaSelection out;
  std::vector<PointOutcome> outcomes =
      run_grid(dataset, prior.family, grid, options, true, out.table);
  PointOutcome& best = outcomes[*out.table.best];
  out.beta = best.row.beta;
  out.fit = std::move(*best.fit);
  out.report = std::move(*best.report);
  return out;
}

// ---------------------------------------------------------------------------
// rho-from-K calibration.
//
// The search runs in t = logit(rho). Probes are bracketed by stepping t in
// units of 2 from logit(K/N), then refined with TOMS 748. Every probe is
// checked against the ones before it; a decrease of achieved K with rho
// switches to grid refinement of the current bracket.

namespace {

double logit(double p) { return std::log(p) - std::log1p(-p); }
double logistic(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t))
                  : std::exp(t) / (1.0 + std::exp(t));
}

constexpr double kMaxLogit = 36.0;  // rho within ~2e-16 of 0 or 1

struct NonMonotone {};

class Calibrator {
 public:
  Calibrator(const Dataset& dataset, double beta, double K, PriorFamily family,
             double sigma_w2, const CalibrationOptions& options)
      : dataset_(dataset),
        beta_(beta),
        K_(K),
        family_(family),
        sigma_w2_(sigma_w2),
        options_(options),
        tol_(options.rel_tol * std::max(1.0, K)) {}

  // Achieved minus target at t; records the probe and the best fit so far.
  double residual(double t) {
    if (static_cast<int>(result_.probes.size()) >= options_.max_probes) {
      throw Error(Errc::NonConvergence, "calibration probe budget exhausted");
    }
    const double rho = logistic(t);
    const PriorSpec prior = make_prior(family_, rho, sigma_w2_);
    FitResult r = probe_fit(prior);
    const double achieved = r.inclusion_probs.sum();
    result_.probes.push_back({rho, achieved, r.state.converged});
    ++result_.iterations;
    warm_ = r.state.m;
    const double f = achieved - K_;
    if (!best_ || std::abs(f) < std::abs(best_f_)) {
      best_f_ = f;
      best_rho_ = rho;
      best_ = std::move(r);
    }
    if (!result_.used_grid_fallback) check_monotone();
    return f;
  }

  bool done() const { return best_ && std::abs(best_f_) <= tol_; }

  CalibrationResult finish() {
    if (!done()) {
      std::ostringstream os;
      os << "calibration reached |achieved - K| = " << std::abs(best_f_)
         << " above tolerance " << tol_;
      throw Error(result_.used_grid_fallback ? Errc::NonMonotoneDetected
                                             : Errc::NonConvergence,
                  os.str());
    }
    result_.K = K_;
    result_.rho = best_rho_;
    result_.achieved_K = best_->inclusion_probs.sum();
    result_.fit = std::move(*best_);
    return std::move(result_);
  }

  void mark_fallback() { result_.used_grid_fallback = true; }

 private:
  FitResult probe_fit(const PriorSpec& prior) {
    std::optional<Eigen::VectorXd> init;
    if (warm_.size() > 0) init = warm_;
    try {
      FitResult r = fit(dataset_, prior, beta_, init, options_.fit_settings);
      if (r.state.converged) return r;
    } catch (const Error&) {
      if (!init) throw;
    }
    // A warm start can land in a poor basin after a large step in rho.
    FitResult r = fit(dataset_, prior, beta_, std::nullopt,
                      options_.fit_settings);
    if (!r.state.converged) {
      std::ostringstream os;
      os << "fit at rho = " << prior.rho << " did not converge";
      throw Error(Errc::NonConvergence, os.str());
    }
    return r;
  }

  void check_monotone() const {
    std::vector<CalibrationProbe> sorted = result_.probes;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.rho < b.rho; });
    const double slack = 1e-9 * std::max(1.0, K_);
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i].achieved_K < sorted[i - 1].achieved_K - slack) {
        throw NonMonotone{};
      }
    }
  }

  const Dataset& dataset_;
  double beta_;
  double K_;
  PriorFamily family_;
  double sigma_w2_;
  CalibrationOptions options_;
  double tol_;
  CalibrationResult result_;
  Eigen::VectorXd warm_;
  std::optional<FitResult> best_;
  double best_f_ = 0.0;
  double best_rho_ = 0.0;
};

// Repeatedly samples nine interior points of [a, b] and keeps the first
// sub-interval with a sign change. Works for any continuous response, not
// only monotone ones.
void grid_refine(Calibrator& cal, double a, double b) {
  cal.mark_fallback();
  constexpr int kPoints = 9;
  for (int round = 0; round < 64 && !cal.done(); ++round) {
    double prev_t = a;
    double prev_f = -1.0;
    bool narrowed = false;
    for (int j = 1; j <= kPoints; ++j) {
      const double t = a + (b - a) * j / (kPoints + 1);
      const double f = cal.residual(t);
      if (cal.done()) return;
      if (f > 0.0 && prev_f < 0.0) {
        a = prev_t;
        b = t;
        narrowed = true;
        break;
      }
      prev_t = t;
      prev_f = f;
    }
    if (!narrowed) a = prev_t;  // the crossing lies in the last sub-interval
    if (b - a < 1e-14 * std::max(1.0, std::abs(a))) return;
  }
}

}  // namespace

CalibrationResult calibrate_rho(const Dataset& dataset, double beta, double K,
                                PriorFamily family,
                                std::optional<double> sigma_w2,
                                const CalibrationOptions& options) {
  const double n = static_cast<double>(dataset.features());
  if (!std::isfinite(K) || K <= 0.0 || K >= n) {
    throw Error(Errc::DomainError, "K must lie strictly between 0 and N");
  }
  if (!std::isfinite(beta) || beta <= 0.0) {
    throw Error(Errc::DomainError, "beta must be positive");
  }
  if (has_slab_variance(family) && !sigma_w2) {
    throw Error(Errc::ConfigError, "this prior family needs sigma_w2");
  }
  const double s2 = sigma_w2.value_or(1.0);

  Calibrator cal(dataset, beta, K, family, s2, options);
  double lo = 0.0;
  double hi = 0.0;
  try {
    double t = logit(K / n);
    double f = cal.residual(t);
    if (cal.done()) return cal.finish();
    const double step = f < 0.0 ? 2.0 : -2.0;
    double t_prev = t;
    double f_prev = f;
    for (;;) {
      const double t_next = std::clamp(t + step, -kMaxLogit, kMaxLogit);
      if (t_next == t) {
        throw Error(Errc::NonConvergence,
                    "target K is not reachable for rho in (0, 1)");
      }
      t_prev = t;
      f_prev = f;
      t = t_next;
      f = cal.residual(t);
      if (cal.done()) return cal.finish();
      if ((f > 0.0) != (f_prev > 0.0)) break;
    }
    lo = std::min(t, t_prev);
    hi = std::max(t, t_prev);

    auto fn = [&](double x) {
      const double r = cal.residual(x);
      return cal.done() ? 0.0 : r;
    };
    auto stop = [&](double a, double b) {
      return cal.done() || std::abs(b - a) <= 1e-14 * std::max(1.0, std::abs(a));
    };
    const double f_lo = lo == t ? f : f_prev;
    const double f_hi = hi == t ? f : f_prev;
    boost::uintmax_t iters = static_cast<boost::uintmax_t>(options.max_probes);
    boost::math::tools::toms748_solve(fn, lo, hi, f_lo, f_hi, stop, iters);
  } catch (const NonMonotone&) {
    if (!(hi > lo)) {
      lo = -kMaxLogit;
      hi = kMaxLogit;
    }
    grid_refine(cal, lo, hi);
  }
  return cal.finish();
}

KSelection calibrate_and_select(const Dataset& dataset, double K,
                                PriorFamily family,
                                std::optional<double> sigma_w2,
                                std::vector<double> beta_grid,
                                const CalibrationOptions& calibration,
                                const SweepOptions& options) {
  require_positive_finite(beta_grid, "beta");
  std::sort(beta_grid.begin(), beta_grid.end());
  beta_grid.erase(std::unique(beta_grid.begin(), beta_grid.end()),
                  beta_grid.end());

  struct Outcome {
    KSelectionRow row;
    std::optional<CalibrationResult> cal;
    std::optional<LooReport> report;
  };
  std::vector<Outcome> outcomes(beta_grid.size());
  parallel_for(outcomes.size(), options.workers, [&](std::size_t i) {
    Outcome& o = outcomes[i];
    o.row.beta = beta_grid[i];
    o.row.rho = o.row.achieved_K = o.row.eps = o.row.eps_loo = kNaN;
    try {
      CalibrationResult cal =
          calibrate_rho(dataset, beta_grid[i], K, family, sigma_w2, calibration);
      LooOptions loo = options.loo;
      loo.workers = 1;
      LooReport report = approx_looe(cal.fit, dataset, beta_grid[i], loo);
      o.row.rho = cal.rho;
      o.row.achieved_K = cal.achieved_K;
      o.row.eps = error_summary(cal.fit.state.m, dataset).eps;
      o.row.eps_loo = report.eps_loo;
      o.row.converged = std::isfinite(report.eps_loo);
      if (!o.row.converged) o.row.failure = "LOO error is not finite";
      o.cal = std::move(cal);
      o.report = std::move(report);
    } catch (const Error& e) {
      o.row.failure = e.what();
    }
  });

  KSelection out;
  out.K = K;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    out.table.push_back(outcomes[i].row);
    if (!outcomes[i].row.converged) continue;
    // Strict comparison keeps the smaller beta on ties.
    if (!best || outcomes[i].row.eps_loo < outcomes[*best].row.eps_loo) best = i;
  }
  if (!best) {
    throw Error(Errc::AllPointsFailed,
                "calibration failed at every beta of the grid");
  }
  Outcome& b = outcomes[*best];
  out.beta = b.row.beta;
  out.rho = b.row.rho;
  out.achieved_K = b.row.achieved_K;
  out.eps = b.row.eps;
  out.fit = std::move(b.cal->fit);
  out.report = std::move(*b.report);
  return out;
}

}  // namespace ecloo
