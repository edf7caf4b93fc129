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

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

#include "ecloo/data_io.hpp"
#include "ecloo/dataset.hpp"

namespace ecloo::testing {

// Dense Gaussian design with entries of variance 1/N and a noisy dense
// linear target.
inline Dataset random_dataset(Index N, Index M, std::uint64_t seed,
                              double noise = 0.3) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(N, M);
  for (Index j = 0; j < M; ++j) {
    for (Index i = 0; i < N; ++i) {
      X(i, j) = normal(gen) / std::sqrt(static_cast<double>(N));
    }
  }
  Eigen::VectorXd w(N);
  for (Index i = 0; i < N; ++i) w[i] = normal(gen);
  Eigen::VectorXd y = X.transpose() * w;
  for (Index j = 0; j < M; ++j) y[j] += noise * normal(gen);
  return Dataset(std::move(X), std::move(y));
}

inline SynthConfig small_synth(Index N, double alpha, std::uint64_t seed) {
  SynthConfig c;
  c.N = N;
  c.alpha = alpha;
  c.seed = seed;
  return c;
}

}  // namespace ecloo::testing
