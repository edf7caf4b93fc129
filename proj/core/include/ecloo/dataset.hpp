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

#include <memory>
#include <span>

namespace ecloo {

using Index = Eigen::Index;

// Eigen-structure of X X^T (N x N). Only the rank-r nonzero part is stored;
// the remaining N - r eigenvalues are exactly zero.
class Spectrum {
 public:
  Spectrum() = default;
  explicit Spectrum(const Eigen::MatrixXd& X);

  Index size() const { return n_; }
  Index rank() const { return values_.size(); }
  Index zero_count() const { return n_ - rank(); }

  // All N eigenvalues in ascending order (zeros first).
  Eigen::VectorXd eigenvalues() const;
  // Nonzero eigenvalues, ascending, with orthonormal eigenvectors (N x r).
  const Eigen::VectorXd& nonzero_eigenvalues() const { return values_; }
  const Eigen::MatrixXd& eigenvectors() const { return vectors_; }

  double min_eigenvalue() const;
  double max_eigenvalue() const;
  double mean_eigenvalue() const { return trace_ / static_cast<double>(n_); }

  // (X X^T + shift I)^{-1} v, valid for shift > -min_eigenvalue().
  Eigen::VectorXd apply_shifted_inverse(double shift,
                                        const Eigen::VectorXd& v) const;

 private:
  Index n_ = 0;
  double trace_ = 0.0;
  Eigen::VectorXd values_;
  Eigen::MatrixXd vectors_;
};

// Design matrix X (N features x M samples) and response y (length M).
// Immutable; copies share storage and the lazily built caches.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd X, Eigen::VectorXd y);

  const Eigen::MatrixXd& X() const;
  const Eigen::VectorXd& y() const;
  Index features() const { return X().rows(); }
  Index samples() const { return X().cols(); }
  double alpha() const {
    return static_cast<double>(samples()) / static_cast<double>(features());
  }

  // Cached; thread-safe on first use.
  const Spectrum& spectrum() const;
  const Eigen::MatrixXd& gram() const;  // X X^T
  const Eigen::VectorXd& xy() const;    // X y

  // Dataset with the listed sample columns removed (order preserved).
  Dataset without_samples(std::span<const Index> drop) const;
  Dataset select_samples(std::span<const Index> keep) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

const Spectrum& spectrum(const Dataset& dataset);

}  // namespace ecloo
