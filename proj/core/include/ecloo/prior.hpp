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

// Scalar spike-and-slab prior
//
//   phi(w) = (1 - rho) delta(w) + rho f(w)
//
// tilted by exp(-E w^2 / 2 + h w). All quantities are produced from the slab
// triple (log partition, mean, second moment) and mixed with the spike through
// a log-sum-exp, so large h^2 / E never overflows.
//
// Closed forms for the shipped slabs (s2 is the tilted slab variance):
//
//   Bernoulli-Gauss, f = N(0, sigma_w2), requires 1 + E sigma_w2 > 0:
//     s2 = sigma_w2 / (1 + E sigma_w2)
//     ln S = -ln(1 + E sigma_w2) / 2 + h^2 s2 / 2
//   Bernoulli-Uniform, f = 1 (improper), requires E > 0:
//     s2 = 1 / E
//     ln S = ln(2 pi / E) / 2 + h^2 / (2 E)
//
// In both cases the tilted slab is N(h s2, s2), the inclusion probability is
// pi = rho S / ((1 - rho) + rho S), mean = pi h s2 and
// second moment = pi (s2 + (h s2)^2).

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace ecloo {

enum class PriorFamily { BernoulliGauss, BernoulliUniform, Custom };

std::string_view to_string(PriorFamily family) noexcept;
PriorFamily parse_prior_family(std::string_view name);

// Tilted integral of a user slab: ln \int f(w) exp(-E w^2/2 + h w) dw and the
// first two moments of the normalized tilted slab.
struct SlabMoments {
  double log_partition = 0.0;
  double mean = 0.0;
  double second_moment = 0.0;
};

struct CustomSlab {
  std::function<SlabMoments(double h, double E)> evaluate;
  // Tilted integrals exist for E strictly greater than this.
  double min_precision = 0.0;
  std::string name = "custom";
};

struct PriorSpec {
  PriorFamily family = PriorFamily::BernoulliGauss;
  double rho = 1.0;
  double sigma_w2 = 1.0;  // BernoulliGauss only
  std::optional<CustomSlab> custom;

  static PriorSpec bernoulli_gauss(double rho, double sigma_w2);
  static PriorSpec bernoulli_uniform(double rho);
  static PriorSpec custom_slab(double rho, CustomSlab slab);

  // Throws Errc::DomainError when the parameters violate the invariants.
  void validate() const;

  // Infimum of the admissible E (exclusive).
  double min_precision() const;

  std::string describe() const;
};

struct ScalarMoments {
  double log_partition = 0.0;
  double mean = 0.0;
  double second_moment = 0.0;
  // Posterior variance, evaluated without the second_moment - mean^2
  // cancellation.
  double variance = 0.0;
  double inclusion_prob = 0.0;
};

ScalarMoments moments(const PriorSpec& prior, double h, double E);

struct InvertOptions {
  double rel_tol = 1e-12;
  int max_iterations = 200;
  std::optional<double> hint;
};

// Solves moments(prior, h, E).mean == m_target for h. The mean is strictly
// increasing in h so the root is unique.
double invert_mean(const PriorSpec& prior, double m_target, double E,
                   const InvertOptions& options = {});

}  // namespace ecloo
