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

#include "ecloo/dataset.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <mutex>
#include <vector>

#include "ecloo/error.hpp"

namespace ecloo {

namespace {

constexpr double kClampRelative = 1e-12;

}  // namespace

Spectrum::Spectrum(const Eigen::MatrixXd& X) : n_(X.rows()) {
  if (!X.allFinite()) {
    throw Error(Errc::DecompositionFailure, "non-finite design matrix");
  }
  const Index n = X.rows();
  const Index m = X.cols();
  Eigen::VectorXd vals;
  Eigen::MatrixXd vecs;
  bool via_samples = m < n;
  if (via_samples) {
    // X^T X shares the nonzero spectrum and is the smaller problem.
    Eigen::MatrixXd g = X.transpose() * X;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    if (es.info() != Eigen::Success) {
      throw Error(Errc::DecompositionFailure, "eigensolver failed on X^T X");
    }
    vals = es.eigenvalues();
    vecs = es.eigenvectors();
  } else {
    Eigen::MatrixXd g = X * X.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    if (es.info() != Eigen::Success) {
      throw Error(Errc::DecompositionFailure, "eigensolver failed on X X^T");
    }
    vals = es.eigenvalues();
    vecs = es.eigenvectors();
  }

  const double top = vals.size() > 0 ? std::max(vals.maxCoeff(), 0.0) : 0.0;
  const double cut = kClampRelative * top;
  std::vector<Index> keep;
  for (Index k = 0; k < vals.size(); ++k) {
    if (vals[k] > cut && vals[k] > 0.0) keep.push_back(k);
  }
  values_.resize(static_cast<Index>(keep.size()));
  vectors_.resize(n, static_cast<Index>(keep.size()));
  for (Index j = 0; j < values_.size(); ++j) {
    const Index k = keep[static_cast<std::size_t>(j)];
    values_[j] = vals[k];
    if (via_samples) {
      vectors_.col(j) = X * vecs.col(k) / std::sqrt(vals[k]);
    } else {
      vectors_.col(j) = vecs.col(k);
    }
  }
  trace_ = values_.sum();
}

Eigen::VectorXd Spectrum::eigenvalues() const {
  Eigen::VectorXd all = Eigen::VectorXd::Zero(n_);
  all.tail(values_.size()) = values_;
  return all;
}

double Spectrum::min_eigenvalue() const {
  if (zero_count() > 0 || values_.size() == 0) return 0.0;
  return values_.minCoeff();
}

double Spectrum::max_eigenvalue() const {
  return values_.size() > 0 ? values_.maxCoeff() : 0.0;
}

Eigen::VectorXd Spectrum::apply_shifted_inverse(
    double shift, const Eigen::VectorXd& v) const {
  if (!(shift > -min_eigenvalue()) || (zero_count() > 0 && shift == 0.0)) {
    throw Error(Errc::DomainError, "shifted Gram matrix is singular");
  }
  const Eigen::VectorXd coeff = vectors_.transpose() * v;
  Eigen::VectorXd out = vectors_ * (coeff.array() /
                                    (values_.array() + shift)).matrix();
  if (zero_count() > 0) {
    // Null-space component.
    out += (v - vectors_ * coeff) / shift;
  }
  return out;
}

struct Dataset::Impl {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;

  mutable std::once_flag spectrum_once;
  mutable Spectrum spectrum;
  mutable std::once_flag gram_once;
  mutable Eigen::MatrixXd gram;
  mutable std::once_flag xy_once;
  mutable Eigen::VectorXd xy;
};

Dataset::Dataset(Eigen::MatrixXd X, Eigen::VectorXd y) {
  if (X.rows() < 1 || X.cols() < 1) {
    throw Error(Errc::DimensionMismatch,
                "dataset needs at least one feature and one sample");
  }
  if (y.size() != X.cols()) {
    throw Error(Errc::DimensionMismatch,
                "response length differs from the number of samples");
  }
  if (!X.allFinite() || !y.allFinite()) {
    throw Error(Errc::DomainError, "dataset contains non-finite entries");
  }
  auto impl = std::make_shared<Impl>();
  impl->X = std::move(X);
  impl->y = std::move(y);
  impl_ = std::move(impl);
}

const Eigen::MatrixXd& Dataset::X() const { return impl_->X; }
const Eigen::VectorXd& Dataset::y() const { return impl_->y; }

const Spectrum& Dataset::spectrum() const {
  std::call_once(impl_->spectrum_once,
                 [this] { impl_->spectrum = Spectrum(impl_->X); });
  return impl_->spectrum;
}

const Eigen::MatrixXd& Dataset::gram() const {
  std::call_once(impl_->gram_once, [this] {
    const Index n = impl_->X.rows();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    g.selfadjointView<Eigen::Lower>().rankUpdate(impl_->X);
    impl_->gram = g.selfadjointView<Eigen::Lower>();
  });
  return impl_->gram;
}

const Eigen::VectorXd& Dataset::xy() const {
  std::call_once(impl_->xy_once,
                 [this] { impl_->xy = impl_->X * impl_->y; });
  return impl_->xy;
}

Dataset Dataset::select_samples(std::span<const Index> keep) const {
  Eigen::MatrixXd X(features(), static_cast<Index>(keep.size()));
  Eigen::VectorXd y(static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    const Index mu = keep[j];
    if (mu < 0 || mu >= samples()) {
      throw Error(Errc::DimensionMismatch, "sample index out of range");
    }
    X.col(static_cast<Index>(j)) = impl_->X.col(mu);
    y[static_cast<Index>(j)] = impl_->y[mu];
  }
  return Dataset(std::move(X), std::move(y));
}

Dataset Dataset::without_samples(std::span<const Index> drop) const {
  std::vector<char> dropped(static_cast<std::size_t>(samples()), 0);
  for (Index mu : drop) {
    if (mu < 0 || mu >= samples()) {
      throw Error(Errc::DimensionMismatch, "sample index out of range");
    }
    dropped[static_cast<std::size_t>(mu)] = 1;
  }
  std::vector<Index> keep;
  for (Index mu = 0; mu < samples(); ++mu) {
    if (!dropped[static_cast<std::size_t>(mu)]) keep.push_back(mu);
  }
  return select_samples(keep);
}

const Spectrum& spectrum(const Dataset& dataset) { return dataset.spectrum(); }

}  // namespace ecloo
