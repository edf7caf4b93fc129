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

#include "ecloo/loocv.hpp"

#include <boost/random/uniform_int_distribution.hpp>

#include <cmath>
#include <numeric>
#include <sstream>

#include "ecloo/error.hpp"
#include "ecloo/parallel.hpp"
#include "ecloo/rng.hpp"

namespace ecloo {

namespace {

using Clock = std::chrono::steady_clock;

void require_usable(const FitResult& fit, const Dataset& dataset) {
  if (!fit.state.converged) {
    throw Error(Errc::NotConverged, "full fit did not converge");
  }
  const Index n = dataset.features();
  if (fit.state.m.size() != n || fit.hessian_inverse.rows() != n ||
      fit.hessian_inverse.cols() != n) {
    throw Error(Errc::DimensionMismatch, "fit does not match the dataset");
  }
  if (!fit.hessian_inverse.allFinite()) {
    throw Error(Errc::SingularHessian, "inverse Hessian is not finite");
  }
}

double clipped(double denom, double floor, bool& flagged) {
  flagged = std::abs(denom) < floor;
  if (!flagged) return denom;
  return denom < 0.0 ? -floor : floor;
}

// Approximate quantities for every sample, shared by all report kinds.
std::vector<LooSample> approx_samples(const FitResult& fit,
                                      const Dataset& dataset, double beta,
                                      const LooOptions& options) {
  const Eigen::MatrixXd& X = dataset.X();
  const Eigen::VectorXd residual =
      dataset.y() - X.transpose() * fit.state.m;
  const Eigen::MatrixXd hx = fit.hessian_inverse * X;
  std::vector<LooSample> out(static_cast<std::size_t>(dataset.samples()));
  for (Index mu = 0; mu < dataset.samples(); ++mu) {
    LooSample& s = out[static_cast<std::size_t>(mu)];
    s.index = mu;
    s.residual_full = residual[mu];
    s.leverage = beta * X.col(mu).dot(hx.col(mu));
    bool flagged = false;
    const double denom =
        clipped(1.0 - s.leverage, options.denominator_floor, flagged);
    s.flagged = flagged;
    s.residual_loo_approx = s.residual_full / denom;
    if (options.cavity_fields) {
      s.cavity_field = Eigen::VectorXd(beta * s.residual_full * X.col(mu));
    }
  }
  return out;
}

double half_mean_square(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += v * v;
  return acc / (2.0 * static_cast<double>(values.size()));
}

FitResult full_fit_or_compute(const Dataset& dataset, const PriorSpec& prior,
                              double beta, const LooOptions& options,
                              const FitResult* full_fit) {
  if (full_fit != nullptr) return *full_fit;
  return fit(dataset, prior, beta, std::nullopt, options.fit_settings);
}

// Held-out residuals of one refit on the complement of `held_out`.
struct FoldOutcome {
  std::vector<double> residuals;
  bool ok = false;
};

FoldOutcome run_fold(const Dataset& dataset, const PriorSpec& prior,
                     double beta, const std::vector<Index>& held_out,
                     const Eigen::VectorXd& warm, const LooOptions& options) {
  FoldOutcome out;
  Eigen::VectorXd m;
  if (static_cast<Index>(held_out.size()) == dataset.samples()) {
    // No training data left: the prediction is the prior mean, zero for the
    // symmetric slabs.
    m = Eigen::VectorXd::Zero(dataset.features());
    out.ok = true;
  } else {
    try {
      const Dataset train = dataset.without_samples(held_out);
      FitResult r = fit(train, prior, beta, warm, options.fit_settings);
      out.ok = r.state.converged;
      m = std::move(r.state.m);
    } catch (const Error&) {
      out.ok = false;
      return out;
    }
  }
  for (Index mu : held_out) {
    out.residuals.push_back(dataset.y()[mu] - dataset.X().col(mu).dot(m));
  }
  return out;
}

LooReport cross_validate(const Dataset& dataset, const PriorSpec& prior,
                         double beta, const std::vector<int>& assignment,
                         int folds, LooMethod method,
                         const LooOptions& options, const FitResult* full_fit) {
  const auto start = Clock::now();
  const FitResult full =
      full_fit_or_compute(dataset, prior, beta, options, full_fit);

  LooReport report;
  report.method = method;
  report.folds = folds;
  if (full.state.converged && full.hessian_inverse.rows() == dataset.features()) {
    report.samples = approx_samples(full, dataset, beta, options);
  } else {
    report.samples.resize(static_cast<std::size_t>(dataset.samples()));
    for (Index mu = 0; mu < dataset.samples(); ++mu) {
      LooSample& s = report.samples[static_cast<std::size_t>(mu)];
      s.index = mu;
      s.residual_full =
          dataset.y()[mu] - dataset.X().col(mu).dot(full.state.m);
      s.residual_loo_approx = std::nan("");
      s.leverage = std::nan("");
    }
  }

  std::vector<std::vector<Index>> members(static_cast<std::size_t>(folds));
  for (Index mu = 0; mu < dataset.samples(); ++mu) {
    members[static_cast<std::size_t>(assignment[static_cast<std::size_t>(mu)])]
        .push_back(mu);
  }

  std::vector<FoldOutcome> outcomes(static_cast<std::size_t>(folds));
  parallel_for(outcomes.size(), options.workers, [&](std::size_t f) {
    outcomes[f] =
        run_fold(dataset, prior, beta, members[f], full.state.m, options);
  });

  std::size_t failed_samples = 0;
  std::vector<double> residuals;
  std::vector<double> by_sample(static_cast<std::size_t>(dataset.samples()),
                                0.0);
  std::vector<char> have(by_sample.size(), 0);
  for (std::size_t f = 0; f < outcomes.size(); ++f) {
    if (!outcomes[f].ok) {
      report.failed_folds.push_back(static_cast<Index>(f));
      failed_samples += members[f].size();
      continue;
    }
    for (std::size_t j = 0; j < members[f].size(); ++j) {
      const auto mu = static_cast<std::size_t>(members[f][j]);
      by_sample[mu] = outcomes[f].residuals[j];
      have[mu] = 1;
    }
  }
  // Reduce in sample order so the aggregate does not depend on the fold
  // layout or on scheduling.
  for (std::size_t mu = 0; mu < by_sample.size(); ++mu) {
    if (have[mu]) {
      report.samples[mu].residual_loo_literal = by_sample[mu];
      residuals.push_back(by_sample[mu]);
    }
  }
  for (const LooSample& s : report.samples) {
    if (s.flagged) report.flagged.push_back(s.index);
  }
  const double failed_fraction = static_cast<double>(failed_samples) /
                                 static_cast<double>(dataset.samples());
  if (failed_fraction > options.max_failed_fraction) {
    std::ostringstream os;
    os << report.failed_folds.size() << " of " << folds
       << " folds failed to converge";
    throw Error(Errc::NonConvergence, os.str());
  }
  report.eps_loo = half_mean_square(residuals);
  report.wall_time = Clock::now() - start;
  return report;
}

}  // namespace

std::string describe(const LooReport& report) {
  std::ostringstream os;
  switch (report.method) {
    case LooMethod::Approx:
      os << "approx";
      break;
    case LooMethod::Literal:
      os << "literal";
      break;
    case LooMethod::KFold:
      os << "kfold(" << report.folds << ")";
      break;
  }
  return os.str();
}

LooReport approx_looe(const FitResult& fit, const Dataset& dataset,
                      double beta, const LooOptions& options) {
  const auto start = Clock::now();
  require_usable(fit, dataset);
  LooReport report;
  report.method = LooMethod::Approx;
  report.samples = approx_samples(fit, dataset, beta, options);
  std::vector<double> residuals;
  residuals.reserve(report.samples.size());
  for (const LooSample& s : report.samples) {
    residuals.push_back(s.residual_loo_approx);
    if (s.flagged) report.flagged.push_back(s.index);
  }
  report.eps_loo = half_mean_square(residuals);
  report.wall_time = Clock::now() - start;
  return report;
}

Eigen::MatrixXd downdated_inverse(const Eigen::MatrixXd& hessian_inverse,
                                  const Eigen::VectorXd& x, double beta,
                                  double denominator_floor) {
  const Eigen::VectorXd u = hessian_inverse * x;
  const double denom = 1.0 - beta * x.dot(u);
  if (std::abs(denom) < denominator_floor) {
    throw Error(Errc::RankOneSingularity,
                "1 - beta x^T H^{-1} x is below the denominator floor");
  }
  return hessian_inverse + (beta / denom) * u * u.transpose();
}

Eigen::VectorXd loo_estimator(const FitResult& fit, const Dataset& dataset,
                              double beta, Index mu,
                              const LooOptions& options) {
  require_usable(fit, dataset);
  if (mu < 0 || mu >= dataset.samples()) {
    throw Error(Errc::DimensionMismatch, "sample index out of range");
  }
  const Eigen::VectorXd x = dataset.X().col(mu);
  const double residual = dataset.y()[mu] - x.dot(fit.state.m);
  const Eigen::VectorXd cavity_field = beta * residual * x;
  const Eigen::MatrixXd c =
      downdated_inverse(fit.hessian_inverse, x, beta, options.denominator_floor);
  return fit.state.m - c * cavity_field;
}

std::vector<int> kfold_assignment(Index samples, int k, std::uint64_t seed) {
  if (k < 2 || static_cast<Index>(k) > samples) {
    throw Error(Errc::ConfigError, "k-fold CV needs 2 <= k <= M");
  }
  std::vector<Index> perm(static_cast<std::size_t>(samples));
  std::iota(perm.begin(), perm.end(), Index{0});
  CounterRng rng(seed, streams::kFoldPermutation);
  // Fisher-Yates with a portable integer distribution.
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    boost::random::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(perm[i], perm[pick(rng)]);
  }
  std::vector<int> fold(perm.size(), 0);
  const std::size_t base = perm.size() / static_cast<std::size_t>(k);
  const std::size_t extra = perm.size() % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    for (std::size_t j = 0; j < size; ++j) {
      fold[static_cast<std::size_t>(perm[pos++])] = f;
    }
  }
  return fold;
}

LooReport literal_loocv(const Dataset& dataset, const PriorSpec& prior,
                        double beta, const LooOptions& options,
                        const FitResult* full_fit) {
  std::vector<int> assignment(static_cast<std::size_t>(dataset.samples()));
  std::iota(assignment.begin(), assignment.end(), 0);
  return cross_validate(dataset, prior, beta, assignment,
                        static_cast<int>(dataset.samples()), LooMethod::Literal,
                        options, full_fit);
}

LooReport kfold_cv(const Dataset& dataset, const PriorSpec& prior, double beta,
                   int k, const LooOptions& options,
                   const FitResult* full_fit) {
  const std::vector<int> assignment =
      kfold_assignment(dataset.samples(), k, options.seed);
  return cross_validate(dataset, prior, beta, assignment, k, LooMethod::KFold,
                        options, full_fit);
}

}  // namespace ecloo
