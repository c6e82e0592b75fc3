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

#include <cstdint>
#include <utility>

namespace gdgpirt {

/// Simulation design for synthetic panels.
struct SimConfig {
  int n = 100;
  int m = 10;
  int T = 10;
  int C = 2;
  double len_scale_t = 5.0;
  double len_scale_x = 1.0;
  double var_intercept = 1.0;
  double var_slope = 1.0;
  double threshold_low = -2.0;
  double threshold_high = 2.0;
  bool items_shared = false;
  std::uint64_t seed = 1;

  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

struct SimResult {
  ResponseDataset dataset;
  GroundTruth truth;
};

/// Draws a complete response panel. Trait paths come from a Matern-5/2 GP
/// over periods; each IRF is an RBF GP around a random line, sampled on
/// `grid` and linearly interpolated at the traits; cutpoints are sorted
/// uniform draws, one set per item.
SimResult generate(const SimConfig& cfg, const DenseGrid& grid);

/// Uniform random partition of the observations; `fraction` go to the
/// first (training) dataset.
std::pair<ResponseDataset, ResponseDataset> train_test_split(const ResponseDataset& dataset, double fraction,
                                                             std::uint64_t seed);

/// Linear interpolation of grid values at x, clamped to the grid ends.
double interpolate_on_grid(const DenseGrid& grid, const Eigen::VectorXd& values, double x);

}  // namespace gdgpirt
