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

#include "gdgpirt/data_model.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace gdgpirt {

/// Extended cutpoints [-inf, b_1, ..., b_{C-1}, +inf] with
/// b_c = b_1 + sum_{l=2}^{c} exp(log_paddings[l-2]).
std::vector<double> reconstruct_thresholds(const ThresholdSet& set, int categories);

/// log Phi(z) for the standard normal CDF, accurate far into both tails.
double log_normal_cdf(double z);

/// log(Phi(upper) - Phi(lower)) for lower < upper; either end may be infinite.
double log_normal_cdf_diff(double upper, double lower);

/// Ordered-probit log p(y = c | f) = log(Phi(b_c - f) - Phi(b_{c-1} - f)).
/// `cuts` comes from reconstruct_thresholds; c is 1-based.
inline double category_logprob(double f, std::span<const double> cuts, int c) {
  return log_normal_cdf_diff(cuts[static_cast<std::size_t>(c)] - f, cuts[static_cast<std::size_t>(c - 1)] - f);
}

/// All C category probabilities at f.
std::vector<double> category_probs(double f, std::span<const double> cuts);

/// Item characteristic curve E[y | f] = sum_c c p(y = c | f).
double icc(double f, std::span<const double> cuts);

inline constexpr int kMissingResponse = 0;

/// Sum of category log-probabilities over one (j, t) block. Entries of
/// `responses` equal to kMissingResponse contribute nothing.
double loglik_item_block(std::span<const double> f, std::span<const int> responses, std::span<const double> cuts);

/// One of a respondent's observations, addressed by the IRF block and
/// threshold set that govern it.
struct PathObservation {
  int period = 0;
  int block = 0;
  int threshold_set = 0;
  int response = 0;
};

/// Log-likelihood of a trait path: each x_t is mapped to its nearest grid
/// node and the block's f* value there feeds category_logprob.
double loglik_trait_path(std::span<const double> x_path, const DenseGrid& grid,
                         std::span<const Eigen::VectorXd> irf_grids,
                         std::span<const std::vector<double>> cuts_by_set,
                         std::span<const PathObservation> observations);

}  // namespace gdgpirt
