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

/// Reflects a draw through x -> -x: negates traits and slopes and mirrors
/// each f* vector across the grid. The data likelihood is unchanged.
/// Requires a symmetric grid.
void reflect_draw(Draw& draw, const DenseGrid& grid);

/// Per-chain sign alignment against chain 1: a chain whose mean trait matrix
/// correlates negatively with chain 1's is reflected draw by draw.
PosteriorSamples align_signs(PosteriorSamples samples);

/// Reflects every draw of every chain.
void reflect_all(PosteriorSamples& samples);

/// Mean trait matrix of one chain, or of all chains when chain < 0.
Eigen::MatrixXd mean_traits(const PosteriorSamples& samples, int chain = -1);

struct TraitSummary {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd sd;
};
TraitSummary summarize_traits(const PosteriorSamples& samples);

/// ICC of one f* grid vector under the given cutpoints.
Eigen::VectorXd icc_on_grid(const Eigen::VectorXd& irf_grid, std::span<const double> cuts);

struct IccSummary {
  Eigen::VectorXd mean;
  Eigen::VectorXd q05;
  Eigen::VectorXd q95;
};
/// Posterior mean and 5%/95% quantiles of the ICC per IRF block.
std::vector<IccSummary> summarize_icc(const PosteriorSamples& samples);

/// Data log-likelihood of one draw: f* looked up at each trait's grid node.
double draw_data_loglik(const Draw& draw, const ModelShape& shape, const ResponseDataset& data);

struct Prediction {
  std::vector<std::vector<double>> probs;  // per target, C entries
  std::vector<int> point;                  // argmax category, 1-based
  double mean_loglik = 0.0;                // over targets with response > 0
  std::size_t scored = 0;
};

/// Posterior-predictive category probabilities averaged over all kept draws.
/// Targets with a response > 0 are also scored.
Prediction predict_responses(const PosteriorSamples& samples, std::span<const Observation> targets);

struct TraitForecast {
  std::vector<int> periods;                // 1-based target periods
  std::vector<Eigen::MatrixXd> mean;       // per period: total draws x n
  std::vector<double> variance;            // per period; identical for every draw
  std::vector<double> weights_sum;         // per period, sum of conditioning weights
};

/// Draw-wise GP extrapolation of each trait path to the target periods
/// using the fitted time kernel.
TraitForecast forecast_traits(const PosteriorSamples& samples, std::span<const int> target_periods);

/// Predictive probabilities for targets at forecast periods. Each draw's
/// conditional mean is snapped to the grid and fed through the period-T IRF
/// (or the shared IRF). Target periods are 0-based.
Prediction forecast_responses(const PosteriorSamples& samples, const TraitForecast& forecast,
                              std::span<const Observation> targets);

}  // namespace gdgpirt
