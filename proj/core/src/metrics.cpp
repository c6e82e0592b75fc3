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

#include "gdgpirt/metrics.hpp"

#include "gdgpirt/error.hpp"
#include "gdgpirt/ordinal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

namespace gdgpirt {
namespace {

Eigen::MatrixXd split_chains(const Eigen::MatrixXd& draws) {
  const Eigen::Index half = draws.cols() / 2;
  Eigen::MatrixXd out(draws.rows() * 2, half);
  for (Eigen::Index c = 0; c < draws.rows(); ++c) {
    out.row(2 * c) = draws.row(c).head(half);
    out.row(2 * c + 1) = draws.row(c).tail(half);
  }
  return out;
}

void require_shape(const Eigen::MatrixXd& draws) {
  if (draws.rows() < 1 || draws.cols() < 4) throw ConfigError("diagnostics need at least 4 draws per chain");
}

}  // namespace

ChainMatrix::ChainMatrix(int chains, int iterations, int params)
    : chains_(chains), iterations_(iterations), params_(params),
      data_(static_cast<std::size_t>(chains) * static_cast<std::size_t>(iterations) * static_cast<std::size_t>(params)) {}

Eigen::MatrixXd ChainMatrix::param(int p) const {
  Eigen::MatrixXd out(chains_, iterations_);
  for (int c = 0; c < chains_; ++c)
    for (int k = 0; k < iterations_; ++k) out(c, k) = at(c, k, p);
  return out;
}

double rhat(const Eigen::MatrixXd& draws) {
  require_shape(draws);
  const Eigen::MatrixXd s = split_chains(draws);
  const double n = static_cast<double>(s.cols());
  const Eigen::VectorXd means = s.rowwise().mean();
  double w = 0.0;
  for (Eigen::Index c = 0; c < s.rows(); ++c) w += (s.row(c).array() - means[c]).square().sum() / (n - 1.0);
  w /= static_cast<double>(s.rows());
  if (!(w > 0.0)) return std::numeric_limits<double>::infinity();
  const double b_over_n = (means.array() - means.mean()).square().sum() / static_cast<double>(s.rows() - 1);
  const double var_plus = (n - 1.0) / n * w + b_over_n;
  return std::sqrt(var_plus / w);
}

double rhat(const ChainMatrix& cm, int param) { return rhat(cm.param(param)); }

double ess_count(const Eigen::MatrixXd& draws) {
  require_shape(draws);
  const Eigen::Index chains = draws.rows();
  const Eigen::Index n = draws.cols();
  const Eigen::VectorXd means = draws.rowwise().mean();
  const Eigen::MatrixXd centred = draws.colwise() - means;

  // Biased autocovariance per chain, averaged across chains, one lag at a time.
  auto mean_autocov = [&](Eigen::Index lag) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < chains; ++c)
      acc += centred.row(c).head(n - lag).dot(centred.row(c).tail(n - lag)) / static_cast<double>(n);
    return acc / static_cast<double>(chains);
  };

  const double gamma0 = mean_autocov(0);
  const double w = gamma0 * static_cast<double>(n) / static_cast<double>(n - 1);
  if (!(w > 0.0)) return 0.0;
  double var_plus = w * static_cast<double>(n - 1) / static_cast<double>(n);
  if (chains > 1) var_plus += (means.array() - means.mean()).square().sum() / static_cast<double>(chains - 1);
  auto rho = [&](Eigen::Index lag) { return 1.0 - (w - mean_autocov(lag)) / var_plus; };

  // Initial positive then initial monotone sequence over paired sums.
  double tau = -1.0;
  double previous_pair = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k + 1 < n; k += 2) {
    double pair = (k == 0 ? 1.0 : rho(k)) + rho(k + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, previous_pair);
    previous_pair = pair;
    tau += 2.0 * pair;
  }
  const double total = static_cast<double>(chains * n);
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

double ess_count(const ChainMatrix& cm, int param) { return ess_count(cm.param(param)); }

double trait_correlation(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw DataError("trait matrices differ in shape");
  const Eigen::ArrayXd x = estimate.reshaped().array() - estimate.mean();
  const Eigen::ArrayXd y = truth.reshaped().array() - truth.mean();
  const double sxx = (x * x).sum();
  const double syy = (y * y).sum();
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DataError("trait correlation undefined for zero-variance input");
  return std::abs((x * y).sum()) / std::sqrt(sxx * syy);
}

Eigen::VectorXd normal_density_weights(const DenseGrid& grid) {
  Eigen::VectorXd w(grid.size());
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (int g = 0; g < grid.size(); ++g) w[g] = norm * std::exp(-0.5 * grid[g] * grid[g]);
  return w;
}

double icc_rmse(std::span<const Eigen::VectorXd> estimate, std::span<const Eigen::VectorXd> truth,
                const Eigen::VectorXd& weights) {
  if (estimate.size() != truth.size() || estimate.empty()) throw DataError("ICC sets differ in size or are empty");
  const double total_weight = weights.sum();
  double acc = 0.0;
  for (std::size_t b = 0; b < estimate.size(); ++b) {
    if (estimate[b].size() != weights.size() || truth[b].size() != weights.size())
      throw DataError("ICC grid length mismatch");
    acc += std::sqrt((weights.array() * (estimate[b] - truth[b]).array().square()).sum() / total_weight);
  }
  return acc / static_cast<double>(estimate.size());
}

double roc_auc(std::span<const double> scores, std::span<const int> positive) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t k = 0; k < n;) {
    std::size_t end = k;
    while (end < n && scores[order[end]] == scores[order[k]]) ++end;
    const double avg_rank = 0.5 * static_cast<double>(k + 1 + end);
    for (std::size_t r = k; r < end; ++r)
      if (positive[order[r]]) {
        rank_sum += avg_rank;
        n_pos += 1.0;
      }
    k = end;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

PredictiveScores predictive_scores(std::span<const std::vector<double>> probs, std::span<const int> responses) {
  if (probs.empty() || probs.size() != responses.size()) throw DataError("predictive scoring needs aligned, non-empty targets");
  PredictiveScores s;
  std::size_t max_c = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const auto& p = probs[k];
    const auto y = static_cast<std::size_t>(responses[k]);
    if (y < 1 || y > p.size()) throw DataError("response outside the predicted categories");
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()) + 1;
    s.accuracy += best == y ? 1.0 : 0.0;
    s.mean_loglik += std::log(p[y - 1]);
    max_c = std::max(max_c, p.size());
  }
  const double n = static_cast<double>(probs.size());
  s.accuracy /= n;
  s.mean_loglik /= n;

  std::vector<double> score(probs.size());
  std::vector<int> positive(probs.size());
  auto one_vs_rest = [&](std::size_t c) {
    for (std::size_t k = 0; k < probs.size(); ++k) {
      score[k] = c <= probs[k].size() ? probs[k][c - 1] : 0.0;
      positive[k] = static_cast<std::size_t>(responses[k]) == c ? 1 : 0;
    }
    return roc_auc(score, positive);
  };
  if (max_c == 2) {
    s.auc = one_vs_rest(2);
  } else {
    double acc = 0.0;
    int used = 0;
    for (std::size_t c = 1; c <= max_c; ++c) {
      const double a = one_vs_rest(c);
      if (std::isfinite(a)) {
        acc += a;
        ++used;
      }
    }
    s.auc = used > 0 ? acc / used : std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

std::vector<int> marginal_modes(const ResponseDataset& dataset) {
  std::vector<std::vector<int>> counts(static_cast<std::size_t>(dataset.n_items));
  for (int j = 0; j < dataset.n_items; ++j)
    counts[static_cast<std::size_t>(j)].assign(static_cast<std::size_t>(dataset.categories(j)) + 1, 0);
  for (const auto& o : dataset.observations) ++counts[static_cast<std::size_t>(o.item)][static_cast<std::size_t>(o.response)];
  std::vector<int> modes(static_cast<std::size_t>(dataset.n_items), 1);
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const auto& c = counts[j];
    modes[j] = static_cast<int>(std::max_element(c.begin() + 1, c.end()) - c.begin());
  }
  return modes;
}

double marginal_mode_accuracy(std::span<const int> modes, std::span<const Observation> targets) {
  if (targets.empty()) throw DataError("no targets to score");
  std::size_t hits = 0;
  for (const auto& o : targets) {
    if (o.item < 0 || static_cast<std::size_t>(o.item) >= modes.size()) throw DataError("target item out of range");
    hits += modes[static_cast<std::size_t>(o.item)] == o.response ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(targets.size());
}

MeanAndError mean_and_error(std::span<const double> values) {
  MeanAndError out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

std::vector<BlockDiagnostics> diagnose(const PosteriorSamples& samples, const DiagnosticsOptions& options) {
  const auto& shape = samples.shape;
  const int chains = samples.n_chains();
  const int kept = chains > 0 ? static_cast<int>(samples.chains[0].size()) : 0;
  std::vector<BlockDiagnostics> out;
  if (kept < 4) return out;

  Eigen::MatrixXd m(chains, kept);
  auto monitor = [&](const std::string& name, int count, const std::function<double(const Draw&, int)>& value) {
    BlockDiagnostics d;
    d.block = name;
    d.min_ess = std::numeric_limits<double>::infinity();
    for (int p = 0; p < count; ++p) {
      for (int c = 0; c < chains; ++c)
        for (int k = 0; k < kept; ++k)
          m(c, k) = value(samples.chains[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)], p);
      if (m.maxCoeff() == m.minCoeff()) continue;
      const double r = rhat(m);
      const double e = ess_count(m);
      ++d.n_params;
      d.max_rhat = std::max(d.max_rhat, r);
      d.min_ess = std::min(d.min_ess, e);
      d.n_rhat_flagged += r >= options.rhat_limit ? 1 : 0;
      d.n_ess_flagged += e <= options.ess_limit ? 1 : 0;
    }
    if (d.n_params == 0) d.min_ess = 0.0;
    out.push_back(d);
  };

  const int n = shape.n_respondents;
  const int periods = shape.n_periods;
  monitor("traits", n * periods, [&](const Draw& d, int p) { return d.traits(p / periods, p % periods); });

  const int stride = std::max(1, options.irf_stride);
  const int per_block = (shape.hyper.grid_points + stride - 1) / stride;
  monitor("irf_grid", shape.n_blocks() * per_block, [&](const Draw& d, int p) {
    return d.irf_grid[static_cast<std::size_t>(p / per_block)][(p % per_block) * stride];
  });
  monitor("slopes", shape.n_blocks(), [](const Draw& d, int p) { return d.slopes[p]; });
  monitor("intercepts", shape.n_blocks(), [](const Draw& d, int p) { return d.intercepts[p]; });

  std::vector<std::pair<int, int>> cut_index;
  for (int s = 0; s < shape.n_threshold_sets(); ++s)
    for (int c = 1; c < shape.set_categories(s); ++c) cut_index.emplace_back(s, c);
  monitor("thresholds", static_cast<int>(cut_index.size()), [&](const Draw& d, int p) {
    const auto [s, c] = cut_index[static_cast<std::size_t>(p)];
    return reconstruct_thresholds(d.thresholds[static_cast<std::size_t>(s)], shape.set_categories(s))
        [static_cast<std::size_t>(c)];
  });
  return out;
}

}  // namespace gdgpirt
