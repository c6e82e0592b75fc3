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

#include "gdgpirt/ordinal.hpp"

#include "gdgpirt/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace gdgpirt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log(1 - exp(x)) for x <= 0.
double log1mexp(double x) {
  if (x >= 0.0) return -kInf;
  return x > -std::numbers::ln2 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

std::vector<double> reconstruct_thresholds(const ThresholdSet& set, int categories) {
  if (categories < 2) throw ConfigError("threshold set needs at least 2 categories");
  if (static_cast<int>(set.log_paddings.size()) != categories - 2)
    throw ConfigError("threshold set has " + std::to_string(set.log_paddings.size()) + " paddings for " +
                      std::to_string(categories) + " categories");
  std::vector<double> cuts(static_cast<std::size_t>(categories) + 1);
  cuts.front() = -kInf;
  cuts.back() = kInf;
  cuts[1] = set.first;
  for (int c = 2; c < categories; ++c)
    cuts[static_cast<std::size_t>(c)] =
        cuts[static_cast<std::size_t>(c - 1)] + std::exp(set.log_paddings[static_cast<std::size_t>(c - 2)]);
  return cuts;
}

double log_normal_cdf(double z) {
  if (std::isnan(z)) return z;
  if (z == kInf) return 0.0;
  if (z == -kInf) return -kInf;
  if (z > 5.0) return std::log1p(-0.5 * std::erfc(z / std::numbers::sqrt2));
  if (z > -30.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  // Asymptotic expansion of the Mills ratio.
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double log_normal_cdf_diff(double upper, double lower) {
  if (!(upper > lower)) return -kInf;
  if (lower == -kInf) return log_normal_cdf(upper);
  if (upper == kInf) return log_normal_cdf(-lower);
  if (lower >= 0.0) {
    // Both in the upper tail: use Q(z) = Phi(-z).
    const double a = log_normal_cdf(-lower);
    const double b = log_normal_cdf(-upper);
    return a + log1mexp(b - a);
  }
  if (upper <= 0.0) {
    const double a = log_normal_cdf(upper);
    const double b = log_normal_cdf(lower);
    return a + log1mexp(b - a);
  }
  const double outside = normal_cdf(lower) + normal_cdf(-upper);
  if (outside < 0.5) return std::log1p(-outside);
  // Narrow interval straddling zero: both erf terms are positive.
  return std::log(0.5 * (std::erf(upper / std::numbers::sqrt2) - std::erf(lower / std::numbers::sqrt2)));
}

std::vector<double> category_probs(double f, std::span<const double> cuts) {
  const int c_max = static_cast<int>(cuts.size()) - 1;
  std::vector<double> p(static_cast<std::size_t>(c_max));
  for (int c = 1; c <= c_max; ++c) p[static_cast<std::size_t>(c - 1)] = std::exp(category_logprob(f, cuts, c));
  return p;
}

double icc(double f, std::span<const double> cuts) {
  // Tail-sum form E[y] = 1 + sum_c P(y > c). Every term is nondecreasing in
  // f, so the computed curve is monotone even after rounding.
  const int c_max = static_cast<int>(cuts.size()) - 1;
  double e = 1.0;
  for (int c = 1; c < c_max; ++c) e += 0.5 * std::erfc((cuts[static_cast<std::size_t>(c)] - f) * std::numbers::sqrt2 / 2.0);
  return e;
}

double loglik_item_block(std::span<const double> f, std::span<const int> responses, std::span<const double> cuts) {
  if (f.size() != responses.size()) throw ConfigError("loglik_item_block: f and responses differ in length");
  double ll = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k)
    if (responses[k] != kMissingResponse) ll += category_logprob(f[k], cuts, responses[k]);
  return ll;
}

double loglik_trait_path(std::span<const double> x_path, const DenseGrid& grid,
                         std::span<const Eigen::VectorXd> irf_grids,
                         std::span<const std::vector<double>> cuts_by_set,
                         std::span<const PathObservation> observations) {
  double ll = 0.0;
  for (const auto& o : observations) {
    const int node = grid.nearest(x_path[static_cast<std::size_t>(o.period)]);
    const double f = irf_grids[static_cast<std::size_t>(o.block)][node];
    ll += category_logprob(f, cuts_by_set[static_cast<std::size_t>(o.threshold_set)], o.response);
  }
  return ll;
}

}  // namespace gdgpirt
