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

#include "ecloo/prior.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ecloo/error.hpp"

namespace ecloo {

namespace {

struct Slab {
  SlabMoments moments;
  double variance = 0.0;
  // s2 when the tilted slab is Gaussian with mean h * s2, 0 otherwise.
  double gaussian_s2 = 0.0;
};

void check_precision(const PriorSpec& prior, double h, double E) {
  if (!std::isfinite(h) || !std::isfinite(E)) {
    throw Error(Errc::IntegrabilityViolation, "non-finite h or E");
  }
  if (!(E > prior.min_precision())) {
    std::ostringstream os;
    os << "tilted " << to_string(prior.family)
       << " slab is not integrable for E = " << E << " (need E > "
       << prior.min_precision() << ")";
    throw Error(Errc::IntegrabilityViolation, os.str());
  }
}

Slab evaluate_slab(const PriorSpec& prior, double h, double E) {
  Slab slab;
  switch (prior.family) {
    case PriorFamily::BernoulliGauss: {
      const double a = 1.0 + E * prior.sigma_w2;
      const double s2 = prior.sigma_w2 / a;
      const double mu = h * s2;
      slab.moments.log_partition = -0.5 * std::log(a) + 0.5 * h * mu;
      slab.moments.mean = mu;
      slab.moments.second_moment = s2 + mu * mu;
      slab.variance = s2;
      slab.gaussian_s2 = s2;
      break;
    }
    case PriorFamily::BernoulliUniform: {
      const double s2 = 1.0 / E;
      const double mu = h * s2;
      slab.moments.log_partition =
          0.5 * std::log(2.0 * std::numbers::pi * s2) + 0.5 * h * mu;
      slab.moments.mean = mu;
      slab.moments.second_moment = s2 + mu * mu;
      slab.variance = s2;
      slab.gaussian_s2 = s2;
      break;
    }
    case PriorFamily::Custom: {
      slab.moments = prior.custom->evaluate(h, E);
      slab.variance = slab.moments.second_moment -
                      slab.moments.mean * slab.moments.mean;
      break;
    }
  }
  return slab;
}

}  // namespace

std::string_view to_string(PriorFamily family) noexcept {
  switch (family) {
    case PriorFamily::BernoulliGauss:
      return "bernoulli-gauss";
    case PriorFamily::BernoulliUniform:
      return "bernoulli-uniform";
    case PriorFamily::Custom:
      return "custom";
  }
  return "unknown";
}

PriorFamily parse_prior_family(std::string_view name) {
  if (name == "bernoulli-gauss" || name == "bg" || name == "gauss") {
    return PriorFamily::BernoulliGauss;
  }
  if (name == "bernoulli-uniform" || name == "bu" || name == "uniform") {
    return PriorFamily::BernoulliUniform;
  }
  throw Error(Errc::ConfigError,
              "unknown prior family '" + std::string(name) + "'");
}

PriorSpec PriorSpec::bernoulli_gauss(double rho, double sigma_w2) {
  PriorSpec p;
  p.family = PriorFamily::BernoulliGauss;
  p.rho = rho;
  p.sigma_w2 = sigma_w2;
  p.validate();
  return p;
}

PriorSpec PriorSpec::bernoulli_uniform(double rho) {
  PriorSpec p;
  p.family = PriorFamily::BernoulliUniform;
  p.rho = rho;
  p.validate();
  return p;
}

PriorSpec PriorSpec::custom_slab(double rho, CustomSlab slab) {
  PriorSpec p;
  p.family = PriorFamily::Custom;
  p.rho = rho;
  p.custom = std::move(slab);
  p.validate();
  return p;
}

void PriorSpec::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw Error(Errc::DomainError, "rho must lie in [0, 1]");
  }
  if (family == PriorFamily::BernoulliGauss &&
      !(sigma_w2 > 0.0 && std::isfinite(sigma_w2))) {
    throw Error(Errc::DomainError, "sigma_w2 must be positive and finite");
  }
  if (family == PriorFamily::Custom && (!custom || !custom->evaluate)) {
    throw Error(Errc::DomainError, "custom prior without a slab evaluator");
  }
}

double PriorSpec::min_precision() const {
  switch (family) {
    case PriorFamily::BernoulliGauss:
      return -1.0 / sigma_w2;
    case PriorFamily::BernoulliUniform:
      return 0.0;
    case PriorFamily::Custom:
      return custom->min_precision;
  }
  return 0.0;
}

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string PriorSpec::describe() const {
  std::ostringstream os;
  os << to_string(family) << "(rho=" << shortest(rho);
  if (family == PriorFamily::BernoulliGauss) {
    os << ", sigma_w2=" << shortest(sigma_w2);
  }
  if (family == PriorFamily::Custom) os << ", slab=" << custom->name;
  os << ")";
  return os.str();
}

ScalarMoments moments(const PriorSpec& prior, double h, double E) {
  check_precision(prior, h, E);
  ScalarMoments out;
  if (prior.rho == 0.0) {
    // Pure spike.
    return out;
  }
  const Slab slab = evaluate_slab(prior, h, E);
  const SlabMoments& s = slab.moments;
  if (prior.rho == 1.0) {
    out.log_partition = s.log_partition;
    out.mean = s.mean;
    out.second_moment = s.second_moment;
    out.variance = slab.variance;
    out.inclusion_prob = 1.0;
    return out;
  }
  const double log_spike = std::log1p(-prior.rho);
  const double log_slab = std::log(prior.rho) + s.log_partition;
  const double d = log_slab - log_spike;
  // pi = 1 / (1 + e^{-d}), 1 - pi = 1 / (1 + e^{d})
  const double pi = 1.0 / (1.0 + std::exp(-d));
  const double one_minus_pi = 1.0 / (1.0 + std::exp(d));
  out.log_partition = std::max(log_spike, log_slab) + std::log1p(std::exp(-std::abs(d)));
  out.inclusion_prob = pi;
  out.mean = pi * s.mean;
  out.second_moment = pi * s.second_moment;
  out.variance = pi * slab.variance + pi * one_minus_pi * s.mean * s.mean;
  return out;
}

double invert_mean(const PriorSpec& prior, double m_target, double E,
                   const InvertOptions& options) {
  check_precision(prior, 0.0, E);
  if (!std::isfinite(m_target)) {
    throw Error(Errc::RangeError, "non-finite target mean");
  }
  if (m_target == 0.0) return 0.0;
  if (prior.rho == 0.0) {
    throw Error(Errc::RangeError,
                "a pure spike prior only attains the mean 0");
  }

  // Symmetric slabs: solve for |m| and restore the sign.
  const double sign = m_target < 0.0 ? -1.0 : 1.0;
  const double target = std::abs(m_target);
  const double tol = options.rel_tol * std::max(1.0, target);

  double lo = 0.0;
  const Slab at_zero = evaluate_slab(prior, 0.0, E);
  if (at_zero.gaussian_s2 > 0.0) {
    const double s2 = at_zero.gaussian_s2;
    // mean = pi * h * s2 <= h * s2, so target / s2 never overshoots.
    lo = target / s2;
    if (prior.rho == 1.0) return sign * lo;
  }

  auto mean_at = [&](double h) { return moments(prior, h, E); };

  double hi = std::max(2.0 * lo, lo + 1.0);
  double x = lo;
  if (options.hint && std::isfinite(*options.hint)) {
    const double guess = sign * *options.hint;
    if (guess > lo) {
      const ScalarMoments mg = mean_at(guess);
      if (std::abs(mg.mean - target) <= tol) return sign * guess;
      if (mg.mean < target) {
        lo = guess;
        hi = std::max(2.0 * guess, guess + 1.0);
      } else {
        hi = guess;
      }
      x = guess;
    }
  }

  int expansions = 0;
  while (mean_at(hi).mean < target) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > 1100 || !std::isfinite(hi)) {
      throw Error(Errc::RangeError, "target mean is not attainable");
    }
  }

  // Safeguarded Newton: the mean is sigmoidal where the slab weight switches
  // on, so Newton from the steep side creeps. A bisection is forced whenever
  // the bracket fails to halve twice in a row.
  double last_width = hi - lo;
  int slow = 0;
  for (int it = 0; it < options.max_iterations; ++it) {
    const ScalarMoments mx = mean_at(x);
    const double r = mx.mean - target;
    if (std::abs(r) <= tol) return sign * x;
    if (r < 0.0) {
      lo = std::max(lo, x);
    } else {
      hi = std::min(hi, x);
    }
    const double width = hi - lo;
    slow = width > 0.5 * last_width ? slow + 1 : 0;
    last_width = width;
    double next = mx.variance > 0.0 ? x - r / mx.variance : lo;
    if (!(next > lo && next < hi) || slow >= 2) {
      next = 0.5 * (lo + hi);
      slow = 0;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      // The bracket is a few ulps wide: where the mean is steep, no double
      // h gets closer to the target than this.
      return sign * 0.5 * (lo + hi);
    }
    x = next;
  }
  throw Error(Errc::NonConvergence, "invert_mean did not converge");
}

}  // namespace ecloo
