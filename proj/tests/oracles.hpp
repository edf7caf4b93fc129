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

// Reference computations used only by tests. None of them call into the
// library's numerical code; they recompute quantities from definitions with
// quadrature, dense factorizations or explicit refits.

#pragma once

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <vector>

namespace ecloo::oracle {

struct PriorMoments {
  double log_partition;
  double mean;
  double second_moment;
  double inclusion_prob;
};

// Moments of (1 - rho) delta(w) + rho f(w) tilted by exp(-E w^2 / 2 + h w),
// with f = N(0, slab_var) when gaussian_slab, else f = 1 (improper flat slab).
// The slab integrals are evaluated by adaptive Gauss-Kronrod quadrature on a
// window of +-40 standard deviations around the tilted mode.
inline PriorMoments quadrature_moments(bool gaussian_slab, double rho,
                                       double slab_var, double h, double E) {
  const double a = gaussian_slab ? 1.0 / slab_var + E : E;  // total precision
  const double mode = h / a;
  const double c = 0.5 * h * mode;  // maximum of the exponent
  const double half_width = 40.0 / std::sqrt(a);
  auto weight = [&](double w) { return std::exp(-0.5 * a * w * w + h * w - c); };

  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double lo = mode - half_width;
  const double hi = mode + half_width;
  // Integrate moments about the mode to avoid cancellation at large |h|.
  const double i0 = GK::integrate(weight, lo, hi, 20, 1e-15);
  const double i1 = GK::integrate(
      [&](double w) { return (w - mode) * weight(w); }, lo, hi, 20, 1e-15);
  const double i2 = GK::integrate(
      [&](double w) { return (w - mode) * (w - mode) * weight(w); }, lo, hi, 20,
      1e-15);

  double log_slab = c + std::log(i0);
  if (gaussian_slab) {
    log_slab -= 0.5 * std::log(2.0 * std::numbers::pi * slab_var);
  }
  const double slab_mean = mode + i1 / i0;
  const double slab_second = i2 / i0 + 2.0 * mode * (i1 / i0) + mode * mode;

  PriorMoments out{};
  if (rho == 1.0) {
    out.log_partition = log_slab;
    out.inclusion_prob = 1.0;
  } else {
    const double ls = std::log(rho) + log_slab;
    const double lz = std::log1p(-rho);
    const double top = std::max(ls, lz);
    out.log_partition = top + std::log(std::exp(ls - top) + std::exp(lz - top));
    out.inclusion_prob = std::exp(ls - out.log_partition);
  }
  out.mean = out.inclusion_prob * slab_mean;
  out.second_moment = out.inclusion_prob * slab_second;
  return out;
}

struct PriorGridPoint {
  bool gaussian_slab;
  double rho;
  double slab_var;  // ignored for the flat slab
  double h;
  double E;
};

// 405 Gaussian-slab points and 135 flat-slab points.
inline std::vector<PriorGridPoint> prior_grid() {
  const double rhos[] = {0.01, 0.1, 0.5, 0.9, 1.0};
  const double slab_vars[] = {0.1, 1.0, 10.0};
  const double hs[] = {-8.0, -3.0, -1.0, -0.3, 0.0, 0.3, 1.0, 3.0, 8.0};
  const double Es[] = {0.1, 1.0, 10.0};
  std::vector<PriorGridPoint> grid;
  for (double rho : rhos) {
    for (double h : hs) {
      for (double E : Es) {
        for (double v : slab_vars) grid.push_back({true, rho, v, h, E});
        grid.push_back({false, rho, 0.0, h, E});
      }
    }
  }
  return grid;
}

// Posterior mean of w under w ~ N(0, s2 I), y ~ N(X^T w, 1/beta).
inline Eigen::VectorXd ridge_mean(const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& y, double beta,
                                  double s2) {
  Eigen::MatrixXd A = beta * X * X.transpose();
  A.diagonal().array() += 1.0 / s2;
  return A.ldlt().solve(beta * X * y);
}

// Held-out residuals from M explicit refits.
inline Eigen::VectorXd ridge_loo_residuals(const Eigen::MatrixXd& X,
                                           const Eigen::VectorXd& y,
                                           double beta, double s2) {
  const Eigen::Index M = X.cols();
  Eigen::VectorXd out(M);
  for (Eigen::Index mu = 0; mu < M; ++mu) {
    Eigen::MatrixXd Xr(X.rows(), M - 1);
    Eigen::VectorXd yr(M - 1);
    for (Eigen::Index nu = 0, k = 0; nu < M; ++nu) {
      if (nu == mu) continue;
      Xr.col(k) = X.col(nu);
      yr[k++] = y[nu];
    }
    const Eigen::VectorXd m = M > 1 ? ridge_mean(Xr, yr, beta, s2)
                                    : Eigen::VectorXd::Zero(X.rows()).eval();
    out[mu] = y[mu] - X.col(mu).dot(m);
  }
  return out;
}

inline double half_mean_square(const Eigen::VectorXd& r) {
  return r.squaredNorm() / (2.0 * static_cast<double>(r.size()));
}

// -ln of  integral dw N(w; 0, s2 I) exp(-beta/2 |y - X^T w|^2).
inline double gaussian_neg_log_evidence(const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& y, double beta,
                                        double s2) {
  const Eigen::VectorXd m = ridge_mean(X, y, beta, s2);
  const Eigen::VectorXd r = y - X.transpose() * m;
  Eigen::MatrixXd B = beta * s2 * X * X.transpose();
  B.diagonal().array() += 1.0;
  const Eigen::LLT<Eigen::MatrixXd> llt(B);
  const double logdet =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return 0.5 * beta * r.squaredNorm() + 0.5 * m.squaredNorm() / s2 +
         0.5 * logdet;
}

// (1/N) trace((X X^T + L I)^{-1}) by dense inversion.
inline double mean_resolvent(const Eigen::MatrixXd& X, double L) {
  Eigen::MatrixXd A = X * X.transpose();
  A.diagonal().array() += L;
  return A.inverse().trace() / static_cast<double>(X.rows());
}

}  // namespace ecloo::oracle
