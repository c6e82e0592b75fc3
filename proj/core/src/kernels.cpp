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

#include "gdgpirt/kernels.hpp"

#include "gdgpirt/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace gdgpirt {
namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw ConfigError(std::string(what) + " must be strictly positive");
}

int period_index(double p) { return static_cast<int>(std::lround(p)); }

}  // namespace

double rbf(double x, double x_prime, double len_scale) {
  require_positive(len_scale, "RBF length scale");
  const double r = (x - x_prime) / len_scale;
  return std::exp(-0.5 * r * r);
}

double matern52(double t, double t_prime, double len_scale) {
  require_positive(len_scale, "Matern length scale");
  const double r = std::sqrt(5.0) * std::abs(t - t_prime) / len_scale;
  return (1.0 + r + r * r / 3.0) * std::exp(-r);
}

double wiener_cov(int t, int t_prime, double anchor_var, std::span<const double> diffusion_vars) {
  if (t < 1 || t_prime < 1) throw ConfigError("Wiener covariance periods are 1-based");
  const int upto = std::min(t, t_prime);
  if (static_cast<std::size_t>(std::max(t, t_prime) - 1) > diffusion_vars.size())
    throw ConfigError("Wiener diffusion variances do not cover period " + std::to_string(std::max(t, t_prime)));
  double cov = anchor_var;
  for (int u = 2; u <= upto; ++u) cov += diffusion_vars[static_cast<std::size_t>(u - 2)];
  return cov;
}

KernelSpec KernelSpec::rbf(double len_scale, double jitter) {
  return KernelSpec{Kind::Rbf, len_scale, 1.0, {}, jitter};
}

KernelSpec KernelSpec::matern52(double len_scale, double jitter) {
  return KernelSpec{Kind::Matern52, len_scale, 1.0, {}, jitter};
}

KernelSpec KernelSpec::wiener(double anchor_var, double diffusion_var, int periods, double jitter) {
  return KernelSpec{Kind::Wiener, 1.0, anchor_var,
                    std::vector<double>(static_cast<std::size_t>(std::max(periods - 1, 0)), diffusion_var), jitter};
}

KernelSpec KernelSpec::identity(double jitter) { return KernelSpec{Kind::Static, 1.0, 1.0, {}, jitter}; }

void KernelSpec::validate() const {
  require_positive(jitter, "kernel jitter");
  switch (kind) {
    case Kind::Rbf:
    case Kind::Matern52: require_positive(len_scale, "kernel length scale"); break;
    case Kind::Wiener:
      require_positive(anchor_var, "Wiener anchor variance");
      for (double v : diffusion_vars) require_positive(v, "Wiener diffusion variance");
      break;
    case Kind::Static: break;
  }
}

double KernelSpec::operator()(double a, double b) const {
  switch (kind) {
    case Kind::Rbf: return gdgpirt::rbf(a, b, len_scale);
    case Kind::Matern52: return gdgpirt::matern52(a, b, len_scale);
    case Kind::Wiener: return wiener_cov(period_index(a), period_index(b), anchor_var, diffusion_vars);
    case Kind::Static: return period_index(a) == period_index(b) ? 1.0 : 0.0;
  }
  return 0.0;
}

Eigen::MatrixXd gram(std::span<const double> points, const KernelSpec& spec) {
  if (points.empty()) throw ConfigError("gram matrix needs at least one point");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    k(c, c) = spec(points[static_cast<std::size_t>(c)], points[static_cast<std::size_t>(c)]) + spec.jitter;
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const double v = spec(points[static_cast<std::size_t>(r)], points[static_cast<std::size_t>(c)]);
      k(r, c) = v;
      k(c, r) = v;
    }
  }
  return k;
}

Eigen::MatrixXd cross_gram(std::span<const double> a, std::span<const double> b, const KernelSpec& spec) {
  Eigen::MatrixXd k(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (Eigen::Index c = 0; c < k.cols(); ++c)
    for (Eigen::Index r = 0; r < k.rows(); ++r)
      k(r, c) = spec(a[static_cast<std::size_t>(r)], b[static_cast<std::size_t>(c)]);
  return k;
}

Eigen::VectorXd StableFactor::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd y = lower.triangularView<Eigen::Lower>().solve(rhs);
  lower.triangularView<Eigen::Lower>().transpose().solveInPlace(y);
  return y;
}

Eigen::VectorXd StableFactor::whiten(const Eigen::VectorXd& rhs) const {
  return lower.triangularView<Eigen::Lower>().solve(rhs);
}

Eigen::VectorXd StableFactor::colour(const Eigen::VectorXd& z) const {
  return lower.triangularView<Eigen::Lower>() * z;
}

StableFactor stable_cholesky(const Eigen::MatrixXd& cov, double jitter, std::string_view context) {
  if (!(jitter > 0.0)) throw ConfigError("jitter must be strictly positive");
  const Eigen::Index n = cov.rows();
  for (double j = jitter; j <= kMaxJitter * (1.0 + 1e-9); j *= 10.0) {
    Eigen::MatrixXd a = cov;
    a.diagonal().array() += j;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd l = llt.matrixL();
    if (!l.allFinite() || (n > 0 && !(l.diagonal().minCoeff() > 0.0))) continue;
    return StableFactor{std::move(l), j};
  }
  throw NumericalError("covariance factorization failed after jitter escalation to " + std::to_string(kMaxJitter) +
                       " for " + std::string(context));
}

Eigen::VectorXd gp_conditional_mean(std::span<const double> train_x, std::span<const double> train_f,
                                    std::span<const double> test_x, const KernelSpec& spec,
                                    const AffineMean& mean_fn) {
  if (train_x.size() != train_f.size()) throw ConfigError("gp_conditional: train_x and train_f differ in length");
  Eigen::VectorXd mean(static_cast<Eigen::Index>(test_x.size()));
  for (std::size_t k = 0; k < test_x.size(); ++k) mean[static_cast<Eigen::Index>(k)] = mean_fn(test_x[k]);
  if (train_x.empty()) return mean;

  KernelSpec no_jitter = spec;
  no_jitter.jitter = 0.0;
  const StableFactor factor = stable_cholesky(gram(train_x, no_jitter), spec.jitter, "gp_conditional");
  Eigen::VectorXd resid(static_cast<Eigen::Index>(train_x.size()));
  for (std::size_t k = 0; k < train_x.size(); ++k)
    resid[static_cast<Eigen::Index>(k)] = train_f[k] - mean_fn(train_x[k]);
  mean += cross_gram(test_x, train_x, spec) * factor.solve(resid);
  return mean;
}

GpPosterior gp_conditional(std::span<const double> train_x, std::span<const double> train_f,
                           std::span<const double> test_x, const KernelSpec& spec, const AffineMean& mean_fn) {
  if (train_x.size() != train_f.size()) throw ConfigError("gp_conditional: train_x and train_f differ in length");
  GpPosterior post;
  KernelSpec no_jitter = spec;
  no_jitter.jitter = 0.0;
  post.cov = test_x.empty() ? Eigen::MatrixXd(0, 0) : gram(test_x, no_jitter);
  post.mean.resize(static_cast<Eigen::Index>(test_x.size()));
  for (std::size_t k = 0; k < test_x.size(); ++k) post.mean[static_cast<Eigen::Index>(k)] = mean_fn(test_x[k]);
  if (train_x.empty() || test_x.empty()) return post;

  const StableFactor factor = stable_cholesky(gram(train_x, no_jitter), spec.jitter, "gp_conditional");
  Eigen::VectorXd resid(static_cast<Eigen::Index>(train_x.size()));
  for (std::size_t k = 0; k < train_x.size(); ++k)
    resid[static_cast<Eigen::Index>(k)] = train_f[k] - mean_fn(train_x[k]);

  const Eigen::MatrixXd k_star = cross_gram(test_x, train_x, spec);  // test x train
  post.mean += k_star * factor.solve(resid);
  // W = L^{-1} K(X, x*), so K(x*, X) V^{-1} K(X, x*) = W^T W.
  const Eigen::MatrixXd w = factor.lower.triangularView<Eigen::Lower>().solve(k_star.transpose());
  post.cov.noalias() -= w.transpose() * w;
  post.cov = 0.5 * (post.cov + post.cov.transpose());
  return post;
}

Eigen::MatrixXd low_rank_root(const Eigen::MatrixXd& cov, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double cutoff = rel_tol * lambda.maxCoeff();
  Eigen::Index keep = 0;
  for (Eigen::Index k = 0; k < lambda.size(); ++k) keep += lambda[k] > cutoff ? 1 : 0;
  Eigen::MatrixXd root(cov.rows(), keep);
  // Eigenvalues come in increasing order, so the kept ones are the tail.
  for (Eigen::Index k = lambda.size() - keep, c = 0; k < lambda.size(); ++k, ++c)
    root.col(c) = eig.eigenvectors().col(k) * std::sqrt(lambda[k]);
  return root;
}

}  // namespace gdgpirt
