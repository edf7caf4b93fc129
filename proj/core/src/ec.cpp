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

#include "ecloo/ec.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include "ecloo/error.hpp"

namespace ecloo {

namespace {

std::atomic<std::uint64_t> g_fit_invocations{0};

constexpr double kImproperFloor = 1e-6;
constexpr double kFlatSlope = 1e-9;

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0;
}

struct SecularSum {
  double value = 0.0;  // (1/N) sum 1/(lambda + L)
  double slope = 0.0;  // d/dL, negative
};

SecularSum secular_sum(const Spectrum& s, double L) {
  const auto& vals = s.nonzero_eigenvalues();
  double sum = 0.0;
  double sum2 = 0.0;
  for (Index k = 0; k < vals.size(); ++k) {
    const double inv = 1.0 / (vals[k] + L);
    sum += inv;
    sum2 += inv * inv;
  }
  const double n0 = static_cast<double>(s.zero_count());
  if (n0 > 0.0) {
    sum += n0 / L;
    sum2 += n0 / (L * L);
  }
  const double n = static_cast<double>(s.size());
  return {sum / n, -sum2 / n};
}

double log_det_shifted(const Spectrum& s, double L) {
  const auto& vals = s.nonzero_eigenvalues();
  double acc = 0.0;
  for (Index k = 0; k < vals.size(); ++k) acc += std::log(vals[k] + L);
  acc += static_cast<double>(s.zero_count()) * std::log(L);
  return acc;
}

// One evaluation of the E map at a trial E: invert every m_i, accumulate
// the moments, and solve the secular equation at the implied chi.
struct TiltEval {
  double E = 0.0;
  double F = 0.0;
  double residual = 0.0;
  TiltState state;
};

class TiltSolver {
 public:
  TiltSolver(const Eigen::VectorXd& m, const PriorSpec& prior, double beta,
             const Spectrum& spectrum, const TiltOptions& options)
      : m_(m), prior_(prior), beta_(beta), spectrum_(spectrum),
        options_(options) {
    if (options.h_hint != nullptr && options.h_hint->size() == m.size()) {
      h_hint_ = *options.h_hint;
    } else {
      h_hint_ = Eigen::VectorXd::Zero(m.size());
    }
  }

  TiltEval evaluate(double E) {
    ++evaluations_;
    const Index n = m_.size();
    TiltEval ev;
    ev.E = E;
    TiltState& st = ev.state;
    st.h.resize(n);
    st.second_moments.resize(n);
    st.variances.resize(n);
    st.inclusion_probs.resize(n);
    double sum_var = 0.0;
    double sum_second = 0.0;
    double sum_logz = 0.0;
    InvertOptions inv;
    for (Index i = 0; i < n; ++i) {
      inv.hint = h_hint_[i];
      const double hi = invert_mean(prior_, m_[i], E, inv);
      const ScalarMoments mom = moments(prior_, hi, E);
      st.h[i] = hi;
      st.second_moments[i] = mom.second_moment;
      st.variances[i] = mom.variance;
      st.inclusion_probs[i] = mom.inclusion_prob;
      sum_var += mom.variance;
      sum_second += mom.second_moment;
      sum_logz += mom.log_partition;
    }
    h_hint_ = st.h;
    const double nd = static_cast<double>(n);
    st.sum_log_partition = sum_logz;
    st.q = m_.squaredNorm() / nd;
    st.Q = sum_second / nd;
    st.chi = sum_var / nd;
    st.E = E;
    if (!(st.chi > 0.0)) {
      throw Error(Errc::InfeasibleTilt,
                  "posterior variance vanishes for every coordinate");
    }
    st.lambda_tilde = solve_lambda(spectrum_, beta_, st.chi);
    ev.F = 1.0 / st.chi - beta_ * st.lambda_tilde;
    ev.residual = ev.F - E;
    st.e_residual = ev.residual;
    st.evaluations = evaluations_;
    return ev;
  }

  double tolerance(double E) const {
    return options_.e_tol * std::max(1.0, std::abs(E));
  }

  int evaluations() const { return evaluations_; }

 private:
  const Eigen::VectorXd& m_;
  const PriorSpec& prior_;
  double beta_;
  const Spectrum& spectrum_;
  const TiltOptions& options_;
  Eigen::VectorXd h_hint_;
  int evaluations_ = 0;
};

}  // namespace

double solve_lambda(const Spectrum& spectrum, double beta, double chi) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw Error(Errc::DomainError, "beta must be positive");
  }
  if (!(chi > 0.0) || !std::isfinite(chi)) {
    throw Error(Errc::DomainError, "chi must be positive");
  }
  const double target = beta * chi;
  const double pole = -spectrum.min_eigenvalue();
  // Jensen bounds on the root.
  double lo = std::max(1.0 / target - spectrum.mean_eigenvalue(), pole);
  double hi = 1.0 / target + pole;
  const bool lo_open = !(lo > pole);
  if (!(hi > lo)) return hi;  // all eigenvalues equal

  double x = lo_open ? hi : lo;
  for (int it = 0; it < 200; ++it) {
    const SecularSum s = secular_sum(spectrum, x);
    const double g = s.value - target;
    if (std::abs(g) <= 1e-15 * target) return x;
    if (g > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    double next = x - g / s.slope;
    if (!(next > lo && next < hi)) {
      next = (lo == pole) ? pole + 0.5 * (hi - pole) : 0.5 * (lo + hi);
    }
    if (next == x || hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() *
                                     std::max(std::abs(lo), std::abs(hi))) {
      break;
    }
    x = next;
  }
  const SecularSum s = secular_sum(spectrum, x);
  if (std::abs(s.value - target) > 1e-12 * target) {
    std::ostringstream os;
    os << "secular equation residual " << (s.value - target) / target;
    throw Error(Errc::NonConvergence, os.str());
  }
  return x;
}

TiltState solve_tilt(const Eigen::VectorXd& m, const PriorSpec& prior,
                     double beta, const Spectrum& spectrum,
                     const TiltOptions& options) {
  if (!m.allFinite()) {
    throw Error(Errc::DomainError, "estimator contains non-finite entries");
  }
  if (m.size() != spectrum.size()) {
    throw Error(Errc::DimensionMismatch, "estimator length differs from N");
  }
  prior.validate();
  TiltSolver solver(m, prior, beta, spectrum, options);

  // F maps [0, beta * mean eigenvalue] into itself, so every root lies there.
  const double e_top = beta * spectrum.mean_eigenvalue();
  const bool improper = !(prior.min_precision() < 0.0);
  // Improper slabs have a degenerate root at E -> 0 where the tilted slab
  // swallows the null space of X^T; roots that low are not admissible.
  const double e_floor =
      improper ? std::max(prior.min_precision(), kImproperFloor * e_top)
               : std::max(0.0, prior.min_precision());
  const bool floor_open = !(e_floor > prior.min_precision());

  if (e_top <= e_floor) {
    if (improper) {
      throw Error(Errc::InfeasibleTilt,
                  "no admissible E: the data carry no curvature for this "
                  "improper prior");
    }
    return solver.evaluate(e_top).state;
  }

  TiltEval best;
  bool have_best = false;
  auto consider = [&](const TiltEval& ev) {
    if (!have_best || std::abs(ev.residual) < std::abs(best.residual)) {
      best = ev;
      have_best = true;
    }
  };
  auto accept = [&](const TiltEval& ev) {
    return std::abs(ev.residual) <= solver.tolerance(ev.E);
  };

  double start = e_top;
  if (options.e_hint && *options.e_hint > e_floor && *options.e_hint <= e_top) {
    start = *options.e_hint;
  }
  TiltEval a = solver.evaluate(start);
  consider(a);
  if (accept(a)) return a.state;

  // Bracket the crossing: r > 0 at the low end, r < 0 at the high end. The
  // search descends from above so that for improper slabs the spurious root
  // at E -> 0 is never selected.
  TiltEval lo_ev;
  TiltEval hi_ev;
  if (a.residual < 0.0) {
    hi_ev = a;
    double step = std::abs(a.residual);
    double cand = a.E;
    for (int k = 0;; ++k) {
      if (solver.evaluations() >= options.max_inner) {
        throw Error(Errc::NonConvergence, "could not bracket E from above");
      }
      // Never more than halve the distance to the floor: a long jump can
      // step over the whole interval where the residual is positive.
      double next = std::max(cand - step, e_floor + 0.5 * (cand - e_floor));
      if (cand - e_floor <= 1e-9 * (e_top - e_floor)) {
        if (floor_open) {
          throw Error(Errc::InfeasibleTilt, "no admissible E for this m");
        }
        next = e_floor;
      }
      if (next == cand) {
        throw Error(Errc::InfeasibleTilt, "no admissible E for this m");
      }
      TiltEval ev = solver.evaluate(next);
      consider(ev);
      if (accept(ev)) return ev.state;
      cand = next;
      if (ev.residual > 0.0) {
        lo_ev = ev;
        break;
      }
      hi_ev = ev;
      if (!floor_open && next == e_floor) {
        throw Error(Errc::InfeasibleTilt, "no admissible E for this m");
      }
      step *= 2.0;
    }
  } else {
    lo_ev = a;
    double step = std::abs(a.residual);
    double cand = a.E;
    for (;;) {
      if (solver.evaluations() >= options.max_inner) {
        throw Error(Errc::NonConvergence, "could not bracket E from below");
      }
      const double next = std::min(cand + step, e_top);
      TiltEval ev = solver.evaluate(next);
      consider(ev);
      if (accept(ev)) return ev.state;
      if (ev.residual < 0.0) {
        hi_ev = ev;
        break;
      }
      lo_ev = ev;
      if (next == e_top) {
        // Rounding pushed F slightly above the upper bound. F is a difference
        // of two terms of size 1/chi, so the rounding scales with 1/chi.
        const double scale = std::max({1.0, e_top, 1.0 / ev.state.chi});
        if (std::abs(ev.residual) <= 1e-8 * scale) {
          return ev.state;
        }
        throw Error(Errc::NonConvergence, "E map exceeds its upper bound");
      }
      cand = next;
      step *= 2.0;
    }
  }

  bool done = false;
  auto residual_fn = [&](double E) {
    if (E == lo_ev.E) return lo_ev.residual;
    if (E == hi_ev.E) return hi_ev.residual;
    TiltEval ev = solver.evaluate(E);
    consider(ev);
    if (accept(ev)) done = true;
    return ev.residual;
  };
  auto stop = [&](double x0, double x1) {
    return done || std::abs(x1 - x0) <=
                       4.0 * std::numeric_limits<double>::epsilon() *
                           std::max(std::abs(x0), std::abs(x1));
  };
  std::uintmax_t iters = static_cast<std::uintmax_t>(
      std::max(1, options.max_inner - solver.evaluations()));
  boost::math::tools::toms748_solve(residual_fn, lo_ev.E, hi_ev.E,
                                    lo_ev.residual, hi_ev.residual, stop,
                                    iters);
  if (!accept(best)) {
    std::ostringstream os;
    os << "E fixed point residual " << best.residual << " at E = " << best.E;
    throw Error(Errc::NonConvergence, os.str());
  }
  return best.state;
}

Eigen::VectorXd gradient(const Eigen::VectorXd& m, const Eigen::VectorXd& h,
                         double E, const Dataset& dataset, double beta) {
  const Eigen::VectorXd residual = dataset.y() - dataset.X().transpose() * m;
  return -beta * (dataset.X() * residual) - E * m + h;
}

Eigen::MatrixXd hessian_from_variances(const Eigen::VectorXd& variances,
                                       double E, const Dataset& dataset,
                                       double beta, double variance_floor) {
  Eigen::MatrixXd H = beta * dataset.gram();
  for (Index i = 0; i < variances.size(); ++i) {
    if (!(variances[i] >= variance_floor)) {
      throw VarianceCollapse(static_cast<std::size_t>(i), variances[i]);
    }
    H(i, i) += 1.0 / variances[i] - E;
  }
  return H;
}

Eigen::MatrixXd hessian(const Eigen::VectorXd& m, const Eigen::VectorXd& Mi,
                        double E, const Dataset& dataset, double beta,
                        double variance_floor) {
  if (m.size() != Mi.size() || m.size() != dataset.features()) {
    throw Error(Errc::DimensionMismatch, "hessian inputs disagree in length");
  }
  const Eigen::VectorXd variances = Mi - m.cwiseProduct(m);
  return hessian_from_variances(variances, E, dataset, beta, variance_floor);
}

namespace {

double free_energy_terms(const Eigen::VectorXd& m, const Eigen::VectorXd& h,
                         double sum_log_partition, double E, double Q,
                         double chi, double lambda_tilde,
                         const Dataset& dataset, double beta) {
  const double n = static_cast<double>(m.size());
  const Eigen::VectorXd residual = dataset.y() - dataset.X().transpose() * m;
  const double rss = 0.5 * residual.squaredNorm();
  double phi = beta * rss;
  phi += 0.5 * log_det_shifted(dataset.spectrum(), lambda_tilde);
  phi -= 0.5 * n * beta * lambda_tilde * chi;
  phi += 0.5 * n * std::log(beta * chi) + 0.5 * n;
  phi -= 0.5 * n * E * Q;
  phi += h.dot(m) - sum_log_partition;
  return phi;
}

ECState make_state(const Eigen::VectorXd& m, const TiltState& tilt,
                   const Dataset& dataset, double beta) {
  ECState st;
  st.m = m;
  st.h = tilt.h;
  st.Mi = tilt.second_moments;
  st.E = tilt.E;
  st.Q = tilt.Q;
  st.q = tilt.q;
  st.chi = tilt.chi;
  st.lambda_tilde = tilt.lambda_tilde;
  st.free_energy =
      free_energy_terms(m, tilt.h, tilt.sum_log_partition, tilt.E, tilt.Q,
                        tilt.chi, tilt.lambda_tilde, dataset, beta);
  st.grad_norm = inf_norm(gradient(m, tilt.h, tilt.E, dataset, beta));
  return st;
}

}  // namespace

ECState evaluate_state(const Eigen::VectorXd& m, const Dataset& dataset,
                       const PriorSpec& prior, double beta,
                       const TiltOptions& options) {
  const TiltState tilt =
      solve_tilt(m, prior, beta, dataset.spectrum(), options);
  return make_state(m, tilt, dataset, beta);
}

double free_energy(const ECState& state, const Dataset& dataset, double beta,
                   const PriorSpec& prior) {
  const Index n = dataset.features();
  if (state.m.size() != n || state.h.size() != n) {
    throw Error(Errc::DomainError, "state does not match the dataset");
  }
  if (!(state.chi > 0.0) || !(beta > 0.0)) {
    throw Error(Errc::DomainError, "state has non-positive chi");
  }
  if (!(state.lambda_tilde > -dataset.spectrum().min_eigenvalue())) {
    throw Error(Errc::DomainError, "lambda_tilde outside the secular domain");
  }
  double sum_logz = 0.0;
  for (Index i = 0; i < n; ++i) {
    sum_logz += moments(prior, state.h[i], state.E).log_partition;
  }
  return free_energy_terms(state.m, state.h, sum_logz, state.E, state.Q,
                           state.chi, state.lambda_tilde, dataset, beta);
}

FixedPointAudit audit_fixed_point(const FitResult& fit,
                                  const Dataset& dataset) {
  const ECState& st = fit.state;
  const Index n = dataset.features();
  if (st.m.size() != n || st.h.size() != n) {
    throw Error(Errc::DimensionMismatch, "fit does not match the dataset");
  }
  const double beta = fit.beta;
  FixedPointAudit a;
  double var_sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const ScalarMoments mo = moments(fit.prior, st.h[i], st.E);
    a.mean_residual = std::max(a.mean_residual, std::abs(st.m[i] - mo.mean));
    var_sum += mo.variance;
  }
  // The gradient is exactly h - beta X r - E m.
  a.field_residual = inf_norm(gradient(st.m, st.h, st.E, dataset, beta));
  a.field_scale = std::max(1.0, inf_norm(st.h));

  const double chi = var_sum / static_cast<double>(n);
  const double L = solve_lambda(dataset.spectrum(), beta, chi);
  a.e_residual =
      std::abs(1.0 / chi - beta * L - st.E) / std::max(1.0, std::abs(st.E));
  const SecularSum sec = secular_sum(dataset.spectrum(), L);
  a.secular_residual = std::abs(sec.value - beta * chi) / (beta * chi);

  for (std::size_t k = 1; k < fit.energy_trace.size(); ++k) {
    const double prev = fit.energy_trace[k - 1];
    const double slack = 1e-10 * std::max(1.0, std::abs(prev));
    if (fit.energy_trace[k] > prev + slack) a.energy_monotone = false;
  }
  return a;
}

std::uint64_t fit_invocations() noexcept {
  return g_fit_invocations.load(std::memory_order_relaxed);
}

FitResult fit(const Dataset& dataset, const PriorSpec& prior, double beta,
              const std::optional<Eigen::VectorXd>& init,
              const FitSettings& settings) {
  g_fit_invocations.fetch_add(1, std::memory_order_relaxed);
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw Error(Errc::DomainError, "beta must be positive");
  }
  prior.validate();
  const Index n = dataset.features();

  FitResult result;
  result.beta = beta;
  result.prior = prior;
  result.settings = settings;

  Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
  if (init) {
    if (init->size() != n || !init->allFinite()) {
      throw Error(Errc::DimensionMismatch, "initial estimator is invalid");
    }
    m = *init;
  }

  TiltOptions topt;
  topt.e_tol = settings.e_tol;
  topt.max_inner = settings.max_inner;

  TiltState tilt = solve_tilt(m, prior, beta, dataset.spectrum(), topt);
  ECState state = make_state(m, tilt, dataset, beta);
  Eigen::VectorXd g = gradient(m, tilt.h, tilt.E, dataset, beta);
  const double gtol = settings.grad_tol * std::max(1.0, beta * inf_norm(dataset.xy()));

  bool converged = false;
  int it = 0;
  for (; it < settings.max_outer; ++it) {
    if (inf_norm(g) <= gtol) {
      converged = true;
      break;
    }
    Eigen::MatrixXd H = hessian_from_variances(tilt.variances, tilt.E, dataset,
                                               beta, settings.variance_floor);
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) {
      // Indefinite curvature: shift until positive definite.
      double tau = 1e-8 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
      for (int k = 0; k < 40; ++k, tau *= 10.0) {
        llt.compute(H + tau * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) break;
      }
      if (llt.info() != Eigen::Success) {
        throw Error(Errc::SingularHessian, "cannot regularize the Hessian");
      }
      ++result.shifted_steps;
    }
    const Eigen::VectorXd d = -llt.solve(g);
    const double slope = g.dot(d);

    double s = 1.0;
    bool accepted = false;
    TiltState trial_tilt;
    ECState trial;
    Eigen::VectorXd trial_g;
    while (s >= settings.min_step) {
      const Eigen::VectorXd mt = m + s * d;
      TiltOptions o = topt;
      o.e_hint = tilt.E;
      o.h_hint = &tilt.h;
      try {
        trial_tilt = solve_tilt(mt, prior, beta, dataset.spectrum(), o);
      } catch (const Error&) {
        s *= 0.5;
        continue;
      }
      trial = make_state(mt, trial_tilt, dataset, beta);
      const double decrease = trial.free_energy - state.free_energy;
      // Near the minimum the predicted decrease falls below the noise of the
      // re-extremized objective; there the gradient norm decides.
      const double scale = std::max(1.0, std::abs(state.free_energy));
      const bool flat = std::abs(slope) <= kFlatSlope * scale;
      if (decrease <= settings.armijo * s * slope ||
          ((decrease <= 1e-13 * scale || flat) &&
           trial.grad_norm < state.grad_norm)) {
        trial_g = gradient(mt, trial_tilt.h, trial_tilt.E, dataset, beta);
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;

    const double step_size = s * inf_norm(d);
    m += s * d;
    tilt = std::move(trial_tilt);
    state = std::move(trial);
    g = std::move(trial_g);
    result.energy_trace.push_back(state.free_energy);
    result.step_trace.push_back(s);
    if (inf_norm(g) <= gtol ||
        step_size <= settings.step_tol * std::max(1.0, inf_norm(m))) {
      converged = true;
      ++it;
      break;
    }
  }

  state.iterations = it;
  state.converged = converged;
  state.grad_norm = inf_norm(g);

  result.hessian = hessian_from_variances(tilt.variances, tilt.E, dataset,
                                          beta, settings.variance_floor);
  Eigen::LLT<Eigen::MatrixXd> llt(result.hessian);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  if (llt.info() == Eigen::Success) {
    result.hessian_positive_definite = true;
    result.hessian_inverse = llt.solve(identity);
  } else {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(result.hessian);
    result.hessian_inverse = lu.solve(identity);
  }
  result.hessian_inverse =
      0.5 * (result.hessian_inverse + result.hessian_inverse.transpose());
  result.inclusion_probs = tilt.inclusion_probs;
  result.variances = tilt.variances;
  result.state = std::move(state);
  return result;
}

}  // namespace ecloo
