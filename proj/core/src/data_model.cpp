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

#include "gdgpirt/data_model.hpp"

#include "gdgpirt/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace gdgpirt {

std::string to_string(TimeKernel kernel) {
  switch (kernel) {
    case TimeKernel::Matern52: return "matern52";
    case TimeKernel::Wiener: return "wiener";
    case TimeKernel::Static: return "static";
  }
  return "unknown";
}

TimeKernel parse_time_kernel(const std::string& name) {
  if (name == "matern52") return TimeKernel::Matern52;
  if (name == "wiener") return TimeKernel::Wiener;
  if (name == "static") return TimeKernel::Static;
  throw ConfigError("unknown time kernel '" + name + "' (expected matern52, wiener or static)");
}

std::string to_string(ThresholdScope scope) {
  return scope == ThresholdScope::Global ? "global" : "per_item";
}

ThresholdScope parse_threshold_scope(const std::string& name) {
  if (name == "per_item") return ThresholdScope::PerItem;
  if (name == "global") return ThresholdScope::Global;
  throw ConfigError("unknown threshold scope '" + name + "' (expected per_item or global)");
}

std::string to_string(InitStrategy init) { return init == InitStrategy::Spectral ? "spectral" : "prior"; }

InitStrategy parse_init_strategy(const std::string& name) {
  if (name == "spectral") return InitStrategy::Spectral;
  if (name == "prior") return InitStrategy::Prior;
  throw ConfigError("unknown init strategy '" + name + "' (expected spectral or prior)");
}

std::vector<ValidationIssue> validate_dataset(const ResponseDataset& d) {
  std::vector<ValidationIssue> issues;
  auto report = [&](ValidationIssue::Kind kind, std::string msg) {
    issues.push_back({kind, std::move(msg)});
  };

  if (d.n_respondents < 1 || d.n_items < 1 || d.n_periods < 1) {
    report(ValidationIssue::Kind::Shape, "dataset needs at least one respondent, item and period");
    return issues;
  }
  if (static_cast<int>(d.categories_per_item.size()) != d.n_items) {
    report(ValidationIssue::Kind::Shape, "categories_per_item has " +
                                             std::to_string(d.categories_per_item.size()) +
                                             " entries for " + std::to_string(d.n_items) + " items");
    return issues;
  }
  for (int j = 0; j < d.n_items; ++j) {
    if (d.categories_per_item[static_cast<std::size_t>(j)] < 2)
      report(ValidationIssue::Kind::Shape, "item " + std::to_string(j + 1) + " has fewer than 2 categories");
  }

  std::unordered_set<std::uint64_t> seen;
  std::vector<char> item_used(static_cast<std::size_t>(d.n_items), 0);
  std::vector<char> period_used(static_cast<std::size_t>(d.n_periods), 0);
  for (std::size_t r = 0; r < d.observations.size(); ++r) {
    const auto& o = d.observations[r];
    const std::string where = "row " + std::to_string(r + 1) + " (respondent " + std::to_string(o.respondent + 1) +
                              ", item " + std::to_string(o.item + 1) + ", time " + std::to_string(o.period + 1) + ")";
    if (o.respondent < 0 || o.respondent >= d.n_respondents || o.item < 0 || o.item >= d.n_items ||
        o.period < 0 || o.period >= d.n_periods) {
      report(ValidationIssue::Kind::IndexOutOfRange, where + ": index out of range");
      continue;
    }
    item_used[static_cast<std::size_t>(o.item)] = 1;
    period_used[static_cast<std::size_t>(o.period)] = 1;
    const int c = d.categories(o.item);
    if (o.response < 1 || o.response > c) {
      report(ValidationIssue::Kind::ResponseOutOfRange,
             where + ": response " + std::to_string(o.response) + " outside 1.." + std::to_string(c));
    }
    const auto key = (static_cast<std::uint64_t>(o.respondent) * static_cast<std::uint64_t>(d.n_items) +
                      static_cast<std::uint64_t>(o.item)) *
                         static_cast<std::uint64_t>(d.n_periods) +
                     static_cast<std::uint64_t>(o.period);
    if (!seen.insert(key).second) report(ValidationIssue::Kind::Duplicate, where + ": duplicate observation");
  }
  for (int j = 0; j < d.n_items; ++j)
    if (!item_used[static_cast<std::size_t>(j)])
      report(ValidationIssue::Kind::EmptyItem, "item " + std::to_string(j + 1) + " has no observations");
  for (int t = 0; t < d.n_periods; ++t)
    if (!period_used[static_cast<std::size_t>(t)])
      report(ValidationIssue::Kind::EmptyPeriod, "time " + std::to_string(t + 1) + " has no observations");
  return issues;
}

void HyperParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be strictly positive");
  };
  positive(len_scale_x, "len_scale_x");
  positive(len_scale_t, "len_scale_t");
  positive(var_slope, "var_slope");
  positive(var_intercept, "var_intercept");
  positive(var_log_padding, "var_log_padding");
  positive(var_first_threshold, "var_first_threshold");
  positive(jitter, "jitter");
  positive(wiener_anchor_var, "wiener_anchor_var");
  positive(wiener_diffusion_var, "wiener_diffusion_var");
  if (!(grid_min < grid_max)) throw ConfigError("grid_min must be below grid_max");
  if (grid_points < 2) throw ConfigError("grid_points must be at least 2");
  if (sparse_inducing_count < 2 || sparse_inducing_count > grid_points)
    throw ConfigError("sparse_inducing_count must lie in [2, grid_points]");
  if (knn_k < 1 || knn_k > sparse_inducing_count)
    throw ConfigError("knn_k must lie in [1, sparse_inducing_count]");
  if (sparse_threshold < 0) throw ConfigError("sparse_threshold must be non-negative");
  if (frozen_trait_sweeps < 0) throw ConfigError("frozen_trait_sweeps must be non-negative");
  if (trait_steps < 1 || irf_steps < 1 || beta_steps < 1) throw ConfigError("ESS step counts must be at least 1");
}

void SamplerConfig::validate() const {
  if (n_chains < 1 || burn_in < 1 || n_iterations < 1 || thin < 1 || threads < 1)
    throw ConfigError("chains, burn-in, iterations, thin and threads must all be at least 1");
  if (n_iterations % thin != 0)
    throw ConfigError("thin (" + std::to_string(thin) + ") must divide iterations (" +
                      std::to_string(n_iterations) + ")");
}

DenseGrid::DenseGrid(double min, double max, int points) : min_(min), max_(max) {
  if (!(min < max) || points < 2) throw ConfigError("invalid grid specification");
  spacing_ = (max - min) / (points - 1);
  nodes_.resize(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) nodes_[static_cast<std::size_t>(k)] = min + spacing_ * k;
  nodes_.back() = max;
}

int DenseGrid::nearest(double x) const {
  if (!(x > min_)) return 0;  // also catches NaN
  if (x >= max_) return size() - 1;
  const double pos = (x - min_) / spacing_;
  return std::clamp(static_cast<int>(std::lround(pos)), 0, size() - 1);
}

bool DenseGrid::symmetric() const { return std::abs(min_ + max_) <= 1e-12 * (std::abs(min_) + std::abs(max_)); }

int ModelShape::set_categories(int set) const {
  if (hyper.threshold_scope == ThresholdScope::Global) return categories_per_item.front();
  return categories_per_item.at(static_cast<std::size_t>(set));
}

ModelShape ModelShape::from(const ResponseDataset& dataset, const HyperParams& hyper) {
  ModelShape shape;
  shape.n_respondents = dataset.n_respondents;
  shape.n_items = dataset.n_items;
  shape.n_periods = dataset.n_periods;
  shape.items_shared = dataset.items_shared_across_time;
  shape.categories_per_item = dataset.categories_per_item;
  shape.hyper = hyper;
  if (hyper.threshold_scope == ThresholdScope::Global && !dataset.categories_per_item.empty()) {
    const int c0 = dataset.categories_per_item.front();
    if (std::any_of(dataset.categories_per_item.begin(), dataset.categories_per_item.end(),
                    [c0](int c) { return c != c0; }))
      throw ConfigError("a global threshold set requires every item to have the same number of categories");
  }
  return shape;
}

std::size_t PosteriorSamples::total_draws() const {
  return std::accumulate(chains.begin(), chains.end(), std::size_t{0},
                         [](std::size_t acc, const auto& c) { return acc + c.size(); });
}

}  // namespace gdgpirt
