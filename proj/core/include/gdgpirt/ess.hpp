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

#include "gdgpirt/error.hpp"
#include "gdgpirt/rng.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <utility>

namespace gdgpirt {

/// N(mean, L L^T) with L lower triangular.
struct GaussianPrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov_factor;

  Eigen::VectorXd draw_centered(Rng& rng) const {
    return cov_factor.triangularView<Eigen::Lower>() * rng.normal_vector(mean.size());
  }
};

struct EssResult {
  Eigen::VectorXd state;
  double loglik = 0.0;
  int shrinks = 0;
};

/// One elliptical slice sampling transition targeting N(mean, Sigma) * L(z).
///
/// `nu` is a centred draw from N(0, Sigma) supplied by the caller so that
/// priors with shared or structured factors need no copy. The threshold is
/// log L(current) + log u with u in (0, 1]; proposals are
/// mean + (current - mean) cos(theta) + nu sin(theta). Non-finite proposal
/// log-likelihoods are rejected. The bracket shrinks toward theta = 0, so the
/// loop ends; if it collapses below 1e-12 radians the current state is kept.
template <class LogLik>
EssResult ess_step(const Eigen::VectorXd& current, double current_loglik, const Eigen::VectorXd& mean,
                   const Eigen::VectorXd& nu, LogLik&& loglik, Rng& rng) {
  if (current.size() != mean.size() || nu.size() != mean.size())
    throw ConfigError("ess_step: state, prior mean and prior draw differ in dimension");
  if (!std::isfinite(current_loglik)) throw NumericalError("ess_step: log-likelihood is not finite at the current state");

  const double log_y = current_loglik + std::log(rng.uniform_pos());
  double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  double lo = theta - 2.0 * std::numbers::pi;
  double hi = theta;
  const Eigen::VectorXd centred = current - mean;

  EssResult out;
  for (;;) {
    Eigen::VectorXd proposal = mean + centred * std::cos(theta) + nu * std::sin(theta);
    const double ll = loglik(static_cast<const Eigen::VectorXd&>(proposal));
    if (std::isfinite(ll) && ll > log_y) {
      out.state = std::move(proposal);
      out.loglik = ll;
      return out;
    }
    ++out.shrinks;
    if (theta < 0.0)
      lo = theta;
    else
      hi = theta;
    if (hi - lo < 1e-12) {
      out.state = current;
      out.loglik = current_loglik;
      return out;
    }
    theta = rng.uniform(lo, hi);
  }
}

/// Convenience overload drawing nu from `prior` and evaluating the current
/// log-likelihood.
template <class LogLik>
EssResult ess_step(const Eigen::VectorXd& current, const GaussianPrior& prior, LogLik&& loglik, Rng& rng) {
  const Eigen::VectorXd nu = prior.draw_centered(rng);
  const double ll = loglik(current);
  return ess_step(current, ll, prior.mean, nu, std::forward<LogLik>(loglik), rng);
}

}  // namespace gdgpirt
