/*
 * Copyright 2026 The gdgpirt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gdgpirt {

/// Squared-exponential kernel exp(-(x - x')^2 / (2 l^2)).
double rbf(double x, double x_prime, double len_scale);

/// Matern-5/2 kernel (1 + sqrt5 d/l + 5d^2/(3l^2)) exp(-sqrt5 d/l), d = |t - t'|.
double matern52(double t, double t_prime, double len_scale);

/// Covariance of the random walk x_1 ~ N(0, anchor_var),
/// x_t ~ N(x_{t-1}, diffusion_vars[t-2]). Periods are 1-based.
double wiener_cov(int t, int t_prime, double anchor_var, std::span<const double> diffusion_vars);

struct KernelSpec {
  enum class Kind { Rbf, Matern52, Wiener, Static };

  Kind kind = Kind::Rbf;
  double len_scale = 1.0;
  double anchor_var = 1.0;
  std::vector<double> diffusion_vars;  // Wiener only, entry k is sigma^2_{k+2}
  double jitter = 1e-6;

  static KernelSpec rbf(double len_scale, double jitter = 1e-6);
  static KernelSpec matern52(double len_scale, double jitter = 1e-6);
  /// Constant diffusion variance over `periods` periods.
  static KernelSpec wiener(double anchor_var, double diffusion_var, int periods, double jitter = 1e-6);
  static KernelSpec identity(double jitter = 1e-6);

  /// Kernel value without jitter. Wiener and Static interpret points as
  /// 1-based period indices.
  double operator()(double a, double b) const;
  void validate() const;
};

/// K(points, points) + jitter * I.
Eigen::MatrixXd gram(std::span<const double> points, const KernelSpec& spec);

/// K(a, b), no jitter.
Eigen::MatrixXd cross_gram(std::span<const double> a, std::span<const double> b, const KernelSpec& spec);

/// Lower Cholesky factor of a jittered covariance along with the jitter that
/// made the factorization succeed.
struct StableFactor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;

  Eigen::Index size() const { return lower.rows(); }
  /// Solves (L L^T) x = rhs.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  /// Solves L x = rhs.
  Eigen::VectorXd whiten(const Eigen::VectorXd& rhs) const;
  /// L z.
  Eigen::VectorXd colour(const Eigen::VectorXd& z) const;
};

/// Factorizes `cov + jitter * I`. On failure the jitter is multiplied by 10
/// until it exceeds 1e-2, after which a NumericalError naming `context` is
/// thrown. `cov` must not already include jitter.
StableFactor stable_cholesky(const Eigen::MatrixXd& cov, double jitter, std::string_view context);

struct AffineMean {
  double slope = 0.0;
  double intercept = 0.0;
  double operator()(double x) const { return slope * x + intercept; }
};

struct GpPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Posterior of a GP with affine prior mean at test_x given noiseless values
/// train_f at train_x (jitter on the training Gram only):
///   mean = m(x*) + K(x*, X) V^{-1} (f - m(X)),
///   cov  = K(x*, x*) - K(x*, X) V^{-1} K(X, x*),  V = K(X, X) + jitter I.
GpPosterior gp_conditional(std::span<const double> train_x, std::span<const double> train_f,
                           std::span<const double> test_x, const KernelSpec& spec, const AffineMean& mean_fn);

/// Mean part of gp_conditional without forming the test covariance.
Eigen::VectorXd gp_conditional_mean(std::span<const double> train_x, std::span<const double> train_f,
                                    std::span<const double> test_x, const KernelSpec& spec,
                                    const AffineMean& mean_fn);

/// Low-rank square root R with R R^T = cov, keeping eigenvalues above
/// rel_tol times the largest. Suited to near-singular smooth-kernel Grams.
Eigen::MatrixXd low_rank_root(const Eigen::MatrixXd& cov, double rel_tol = 1e-12);

inline constexpr double kMaxJitter = 1e-2;

}  // namespace gdgpirt
