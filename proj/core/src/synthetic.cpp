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

#include "gdgpirt/synthetic.hpp"

#include "gdgpirt/error.hpp"
#include "gdgpirt/kernels.hpp"
#include "gdgpirt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gdgpirt {
namespace {

constexpr double kSimJitter = 1e-8;
constexpr double kMinCutpointGap = 1e-6;

enum Stream : std::uint64_t { kTraits = 1, kIrfs = 2, kCutpoints = 3, kResponses = 4, kSplit = 5 };

std::vector<double> draw_cutpoints(const SimConfig& cfg, Rng& rng) {
  std::vector<double> cuts(static_cast<std::size_t>(cfg.C - 1));
  for (;;) {
    for (auto& c : cuts) c = rng.uniform(cfg.threshold_low, cfg.threshold_high);
    std::sort(cuts.begin(), cuts.end());
    bool separated = true;
    for (std::size_t k = 1; k < cuts.size(); ++k) separated = separated && cuts[k] - cuts[k - 1] > kMinCutpointGap;
    if (separated) return cuts;
  }
}

}  // namespace

void SimConfig::validate() const {
  if (n < 1 || m < 1 || T < 1) throw ConfigError("simulation sizes n, m, T must be positive");
  if (C < 2) throw ConfigError("simulation needs at least 2 categories");
  if (!(len_scale_t > 0.0) || !(len_scale_x > 0.0)) throw ConfigError("simulation length scales must be positive");
  if (!(var_intercept > 0.0) || !(var_slope > 0.0)) throw ConfigError("simulation variances must be positive");
  if (!(threshold_low < threshold_high)) throw ConfigError("simulation threshold range must have low < high");
  if (C > 2 && (threshold_high - threshold_low) < kMinCutpointGap * C)
    throw ConfigError("simulation threshold range too narrow for distinct cutpoints");
}

double interpolate_on_grid(const DenseGrid& grid, const Eigen::VectorXd& values, double x) {
  if (x <= grid.min()) return values[0];
  if (x >= grid.max()) return values[grid.size() - 1];
  const double pos = (x - grid.min()) / grid.spacing();
  const int lo = std::min(static_cast<int>(std::floor(pos)), grid.size() - 2);
  const double w = pos - lo;
  return (1.0 - w) * values[lo] + w * values[lo + 1];
}

SimResult generate(const SimConfig& cfg, const DenseGrid& grid) {
  cfg.validate();
  SimResult out;
  auto& data = out.dataset;
  auto& truth = out.truth;
  data.n_respondents = cfg.n;
  data.n_items = cfg.m;
  data.n_periods = cfg.T;
  data.items_shared_across_time = cfg.items_shared;
  data.categories_per_item.assign(static_cast<std::size_t>(cfg.m), cfg.C);

  std::vector<double> times(static_cast<std::size_t>(cfg.T));
  std::iota(times.begin(), times.end(), 1.0);
  const StableFactor path = stable_cholesky(
      cross_gram(times, times, KernelSpec::matern52(cfg.len_scale_t, 0.0)), kSimJitter, "simulated trait prior");
  truth.true_traits.resize(cfg.n, cfg.T);
  Rng trait_rng = Rng::stream(cfg.seed, {kTraits});
  for (int i = 0; i < cfg.n; ++i) truth.true_traits.row(i) = path.colour(trait_rng.normal_vector(cfg.T)).transpose();

  const Eigen::MatrixXd root =
      low_rank_root(cross_gram(grid.nodes(), grid.nodes(), KernelSpec::rbf(cfg.len_scale_x, 0.0)));
  const Eigen::Map<const Eigen::VectorXd> nodes(grid.nodes().data(), grid.size());
  const int blocks = cfg.items_shared ? cfg.m : cfg.m * cfg.T;
  truth.true_irf_grid.resize(static_cast<std::size_t>(blocks));
  truth.true_slopes_intercepts.resize(blocks, 2);
  for (int b = 0; b < blocks; ++b) {
    Rng rng = Rng::stream(cfg.seed, {kIrfs, static_cast<std::uint64_t>(b)});
    const double intercept = std::sqrt(cfg.var_intercept) * rng.normal();
    const double slope = std::sqrt(cfg.var_slope) * rng.normal();
    truth.true_slopes_intercepts(b, 0) = intercept;
    truth.true_slopes_intercepts(b, 1) = slope;
    truth.true_irf_grid[static_cast<std::size_t>(b)] =
        (slope * nodes.array() + intercept).matrix() + root * rng.normal_vector(root.cols());
  }

  truth.true_thresholds.resize(static_cast<std::size_t>(cfg.m));
  for (int j = 0; j < cfg.m; ++j) {
    Rng rng = Rng::stream(cfg.seed, {kCutpoints, static_cast<std::uint64_t>(j)});
    truth.true_thresholds[static_cast<std::size_t>(j)] = draw_cutpoints(cfg, rng);
  }

  Rng response_rng = Rng::stream(cfg.seed, {kResponses});
  data.observations.reserve(static_cast<std::size_t>(cfg.n) * cfg.m * cfg.T);
  for (int i = 0; i < cfg.n; ++i)
    for (int t = 0; t < cfg.T; ++t)
      for (int j = 0; j < cfg.m; ++j) {
        const int b = cfg.items_shared ? j : j * cfg.T + t;
        const double f = interpolate_on_grid(grid, truth.true_irf_grid[static_cast<std::size_t>(b)],
                                             truth.true_traits(i, t));
        const double latent = f + response_rng.normal();
        const auto& cuts = truth.true_thresholds[static_cast<std::size_t>(j)];
        const int y = 1 + static_cast<int>(std::count_if(cuts.begin(), cuts.end(), [&](double c) { return c < latent; }));
        data.observations.push_back({i, j, t, y});
      }
  return out;
}

std::pair<ResponseDataset, ResponseDataset> train_test_split(const ResponseDataset& dataset, double fraction,
                                                             std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
  std::vector<std::size_t> order(dataset.observations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::stream(seed, {kSplit});
  // Fisher-Yates with our own generator keeps the split identical across
  // standard library implementations.
  for (std::size_t k = order.size(); k > 1; --k) {
    const auto r = static_cast<std::size_t>(rng() % k);
    std::swap(order[k - 1], order[r]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size())));
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::sort(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

  std::pair<ResponseDataset, ResponseDataset> out{dataset, dataset};
  out.first.observations.clear();
  out.second.observations.clear();
  for (std::size_t k = 0; k < order.size(); ++k)
    (k < n_train ? out.first : out.second).observations.push_back(dataset.observations[order[k]]);
  return out;
}

}  // namespace gdgpirt
