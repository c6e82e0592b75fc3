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

#include "gdgpirt/posterior.hpp"

#include "gdgpirt/error.hpp"
#include "gdgpirt/gibbs.hpp"
#include "gdgpirt/kernels.hpp"
#include "gdgpirt/ordinal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gdgpirt {
namespace {

double matrix_correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::ArrayXd x = a.reshaped().array() - a.mean();
  const Eigen::ArrayXd y = b.reshaped().array() - b.mean();
  const double denom = std::sqrt((x * x).sum() * (y * y).sum());
  return denom > 0.0 ? (x * y).sum() / denom : 0.0;
}

std::vector<std::vector<double>> draw_cuts(const Draw& draw, const ModelShape& shape) {
  std::vector<std::vector<double>> cuts;
  cuts.reserve(draw.thresholds.size());
  for (std::size_t s = 0; s < draw.thresholds.size(); ++s)
    cuts.push_back(reconstruct_thresholds(draw.thresholds[s], shape.set_categories(static_cast<int>(s))));
  return cuts;
}

void check_target(const ModelShape& shape, const Observation& o, bool future) {
  const bool period_ok = future ? o.period >= 0 : (o.period >= 0 && o.period < shape.n_periods);
  if (o.respondent < 0 || o.respondent >= shape.n_respondents || o.item < 0 || o.item >= shape.n_items || !period_ok)
    throw DataError("prediction target (respondent " + std::to_string(o.respondent + 1) + ", item " +
                    std::to_string(o.item + 1) + ", time " + std::to_string(o.period + 1) +
                    ") lies outside the fitted model");
  if (o.response != 0 && (o.response < 1 || o.response > shape.categories_per_item[static_cast<std::size_t>(o.item)]))
    throw DataError("prediction target response outside the item's categories");
}

Prediction finish(std::vector<std::vector<double>> probs, std::span<const Observation> targets) {
  Prediction p;
  p.probs = std::move(probs);
  double ll = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const auto& row = p.probs[k];
    p.point.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()) + 1);
    if (targets[k].response > 0) {
      ll += std::log(row[static_cast<std::size_t>(targets[k].response - 1)]);
      ++p.scored;
    }
  }
  p.mean_loglik = p.scored > 0 ? ll / static_cast<double>(p.scored) : 0.0;
  return p;
}

}  // namespace

void reflect_draw(Draw& draw, const DenseGrid& grid) {
  if (!grid.symmetric()) throw ConfigError("sign reflection requires a grid symmetric about zero");
  draw.traits = -draw.traits;
  draw.slopes = -draw.slopes;
  for (auto& f : draw.irf_grid) f.reverseInPlace();
}

void reflect_all(PosteriorSamples& samples) {
  const DenseGrid grid(samples.shape.hyper);
  for (auto& chain : samples.chains)
    for (auto& d : chain) reflect_draw(d, grid);
}

Eigen::MatrixXd mean_traits(const PosteriorSamples& samples, int chain) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(samples.shape.n_respondents, samples.shape.n_periods);
  std::size_t count = 0;
  for (int c = 0; c < samples.n_chains(); ++c) {
    if (chain >= 0 && c != chain) continue;
    for (const auto& d : samples.chains[static_cast<std::size_t>(c)]) {
      acc += d.traits;
      ++count;
    }
  }
  if (count > 0) acc /= static_cast<double>(count);
  return acc;
}

PosteriorSamples align_signs(PosteriorSamples samples) {
  if (samples.n_chains() <= 1) return samples;
  const Eigen::MatrixXd reference = mean_traits(samples, 0);
  const DenseGrid grid(samples.shape.hyper);
  for (int c = 1; c < samples.n_chains(); ++c) {
    if (matrix_correlation(mean_traits(samples, c), reference) < 0.0)
      for (auto& d : samples.chains[static_cast<std::size_t>(c)]) reflect_draw(d, grid);
  }
  return samples;
}

TraitSummary summarize_traits(const PosteriorSamples& samples) {
  TraitSummary s;
  s.mean = mean_traits(samples);
  s.sd = Eigen::MatrixXd::Zero(s.mean.rows(), s.mean.cols());
  const std::size_t total = samples.total_draws();
  for (const auto& chain : samples.chains)
    for (const auto& d : chain) s.sd.array() += (d.traits - s.mean).array().square();
  if (total > 1) s.sd = (s.sd / static_cast<double>(total - 1)).cwiseSqrt();
  return s;
}

Eigen::VectorXd icc_on_grid(const Eigen::VectorXd& irf_grid, std::span<const double> cuts) {
  Eigen::VectorXd out(irf_grid.size());
  for (Eigen::Index g = 0; g < irf_grid.size(); ++g) out[g] = icc(irf_grid[g], cuts);
  return out;
}

std::vector<IccSummary> summarize_icc(const PosteriorSamples& samples) {
  const auto& shape = samples.shape;
  const int points = shape.hyper.grid_points;
  const std::size_t total = samples.total_draws();
  std::vector<IccSummary> out(static_cast<std::size_t>(shape.n_blocks()));
  std::vector<Eigen::MatrixXd> per_block(out.size(), Eigen::MatrixXd(points, static_cast<Eigen::Index>(total)));

  Eigen::Index col = 0;
  for (const auto& chain : samples.chains)
    for (const auto& d : chain) {
      const auto cuts = draw_cuts(d, shape);
      for (int b = 0; b < shape.n_blocks(); ++b) {
        const int item = shape.items_shared ? b : b / shape.n_periods;
        per_block[static_cast<std::size_t>(b)].col(col) =
            icc_on_grid(d.irf_grid[static_cast<std::size_t>(b)], cuts[static_cast<std::size_t>(shape.threshold_set_of(item))]);
      }
      ++col;
    }

  std::vector<double> row(total);
  for (std::size_t b = 0; b < out.size(); ++b) {
    auto& s = out[b];
    s.mean = per_block[b].rowwise().mean();
    s.q05.resize(points);
    s.q95.resize(points);
    for (int g = 0; g < points; ++g) {
      for (std::size_t k = 0; k < total; ++k) row[k] = per_block[b](g, static_cast<Eigen::Index>(k));
      std::sort(row.begin(), row.end());
      auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(total - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, total - 1);
        return row[lo] + (pos - static_cast<double>(lo)) * (row[hi] - row[lo]);
      };
      s.q05[g] = total ? quantile(0.05) : 0.0;
      s.q95[g] = total ? quantile(0.95) : 0.0;
    }
  }
  return out;
}

double draw_data_loglik(const Draw& draw, const ModelShape& shape, const ResponseDataset& data) {
  const DenseGrid grid(shape.hyper);
  const auto cuts = draw_cuts(draw, shape);
  double ll = 0.0;
  for (const auto& o : data.observations) {
    const int node = grid.nearest(draw.traits(o.respondent, o.period));
    const double f = draw.irf_grid[static_cast<std::size_t>(shape.block_of(o.item, o.period))][node];
    ll += category_logprob(f, cuts[static_cast<std::size_t>(shape.threshold_set_of(o.item))], o.response);
  }
  return ll;
}

Prediction predict_responses(const PosteriorSamples& samples, std::span<const Observation> targets) {
  const auto& shape = samples.shape;
  const DenseGrid grid(shape.hyper);
  const std::size_t total = samples.total_draws();
  if (total == 0) throw ConfigError("posterior has no draws");
  std::vector<std::vector<double>> probs(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) {
    check_target(shape, targets[k], false);
    probs[k].assign(static_cast<std::size_t>(shape.categories_per_item[static_cast<std::size_t>(targets[k].item)]), 0.0);
  }
  for (const auto& chain : samples.chains)
    for (const auto& d : chain) {
      const auto cuts = draw_cuts(d, shape);
      for (std::size_t k = 0; k < targets.size(); ++k) {
        const auto& o = targets[k];
        const int node = grid.nearest(d.traits(o.respondent, o.period));
        const double f = d.irf_grid[static_cast<std::size_t>(shape.block_of(o.item, o.period))][node];
        const auto p = category_probs(f, cuts[static_cast<std::size_t>(shape.threshold_set_of(o.item))]);
        for (std::size_t c = 0; c < p.size(); ++c) probs[k][c] += p[c];
      }
    }
  for (auto& row : probs)
    for (auto& v : row) v /= static_cast<double>(total);
  return finish(std::move(probs), targets);
}

TraitForecast forecast_traits(const PosteriorSamples& samples, std::span<const int> target_periods) {
  const auto& shape = samples.shape;
  const int periods = shape.n_periods;
  int furthest = periods;
  for (int p : target_periods) {
    if (p < 1) throw ConfigError("forecast periods are 1-based");
    furthest = std::max(furthest, p);
  }
  const KernelSpec spec = time_kernel_spec(shape.hyper, furthest);
  KernelSpec bare = spec;
  bare.jitter = 0.0;
  std::vector<double> times(static_cast<std::size_t>(periods));
  std::iota(times.begin(), times.end(), 1.0);
  const StableFactor factor = stable_cholesky(gram(times, bare), spec.jitter, "forecast conditioning");

  TraitForecast out;
  out.periods.assign(target_periods.begin(), target_periods.end());
  const auto total = static_cast<Eigen::Index>(samples.total_draws());
  for (int p : target_periods) {
    const std::vector<double> target{static_cast<double>(p)};
    const Eigen::VectorXd k_star = cross_gram(times, target, bare).col(0);
    const Eigen::VectorXd w = factor.solve(k_star);
    out.variance.push_back(bare(p, p) - k_star.dot(w));
    out.weights_sum.push_back(w.sum());
    Eigen::MatrixXd mean(total, shape.n_respondents);
    Eigen::Index row = 0;
    for (const auto& chain : samples.chains)
      for (const auto& d : chain) mean.row(row++) = (d.traits * w).transpose();
    out.mean.push_back(std::move(mean));
  }
  return out;
}

Prediction forecast_responses(const PosteriorSamples& samples, const TraitForecast& forecast,
                              std::span<const Observation> targets) {
  const auto& shape = samples.shape;
  const DenseGrid grid(shape.hyper);
  std::vector<std::vector<double>> probs(targets.size());
  std::vector<std::size_t> slot(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) {
    check_target(shape, targets[k], true);
    const auto it = std::find(forecast.periods.begin(), forecast.periods.end(), targets[k].period + 1);
    if (it == forecast.periods.end())
      throw DataError("no forecast for time " + std::to_string(targets[k].period + 1));
    slot[k] = static_cast<std::size_t>(it - forecast.periods.begin());
    probs[k].assign(static_cast<std::size_t>(shape.categories_per_item[static_cast<std::size_t>(targets[k].item)]), 0.0);
  }
  Eigen::Index row = 0;
  for (const auto& chain : samples.chains)
    for (const auto& d : chain) {
      const auto cuts = draw_cuts(d, shape);
      for (std::size_t k = 0; k < targets.size(); ++k) {
        const auto& o = targets[k];
        const int node = grid.nearest(forecast.mean[slot[k]](row, o.respondent));
        const int block = shape.block_of(o.item, shape.n_periods - 1);
        const double f = d.irf_grid[static_cast<std::size_t>(block)][node];
        const auto p = category_probs(f, cuts[static_cast<std::size_t>(shape.threshold_set_of(o.item))]);
        for (std::size_t c = 0; c < p.size(); ++c) probs[k][c] += p[c];
      }
      ++row;
    }
  const double total = static_cast<double>(row);
  for (auto& r : probs)
    for (auto& v : r) v /= total;
  return finish(std::move(probs), targets);
}

}  // namespace gdgpirt
