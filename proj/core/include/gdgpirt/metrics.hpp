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
#include <string>
#include <vector>

namespace gdgpirt {

/// Draws indexed (chain, iteration, parameter), stored contiguously with the
/// parameter index fastest.
class ChainMatrix {
 public:
  ChainMatrix(int chains, int iterations, int params);

  int chains() const { return chains_; }
  int iterations() const { return iterations_; }
  int params() const { return params_; }

  double& at(int chain, int iteration, int param) { return data_[index(chain, iteration, param)]; }
  double at(int chain, int iteration, int param) const { return data_[index(chain, iteration, param)]; }

  /// chains x iterations matrix for one parameter.
  Eigen::MatrixXd param(int p) const;

 private:
  std::size_t index(int c, int k, int p) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(iterations_) + static_cast<std::size_t>(k)) *
               static_cast<std::size_t>(params_) +
           static_cast<std::size_t>(p);
  }

  int chains_;
  int iterations_;
  int params_;
  std::vector<double> data_;
};

/// Split-chain potential scale reduction of a chains x iterations matrix.
/// Each chain is halved, so a single chain is accepted. Returns +infinity
/// when the within-chain variance is zero.
double rhat(const Eigen::MatrixXd& draws);
double rhat(const ChainMatrix& cm, int param);

/// Effective sample size from the combined multi-chain autocorrelation,
/// truncated by Geyer's initial positive sequence. Returns 0 for a constant
/// input.
double ess_count(const Eigen::MatrixXd& draws);
double ess_count(const ChainMatrix& cm, int param);

/// |Pearson correlation| of the flattened matrices; the absolute value
/// absorbs the reflection ambiguity of the trait scale.
double trait_correlation(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth);

/// Standard normal density at each grid node.
Eigen::VectorXd normal_density_weights(const DenseGrid& grid);

/// Weighted RMSE between ICC grids, computed per curve and averaged.
double icc_rmse(std::span<const Eigen::VectorXd> estimate, std::span<const Eigen::VectorXd> truth,
                const Eigen::VectorXd& weights);

struct PredictiveScores {
  double accuracy = 0.0;
  double mean_loglik = 0.0;
  double auc = 0.0;
};

/// Scores predictive distributions (one probability vector per target)
/// against 1-based responses. For C = 2 the AUC is the ROC area of
/// P(y = 2); for C > 2 it is the macro average of one-vs-rest areas, each
/// scored by P(y = c), over categories with both positives and negatives.
PredictiveScores predictive_scores(std::span<const std::vector<double>> probs, std::span<const int> responses);

/// Mann-Whitney ROC area with average ranks for ties.
double roc_auc(std::span<const double> scores, std::span<const int> positive);

/// Most common category of each item in the dataset (ties go to the lower
/// category; items with no responses predict category 1).
std::vector<int> marginal_modes(const ResponseDataset& dataset);

/// Fraction of targets whose response equals the item's marginal mode.
double marginal_mode_accuracy(std::span<const int> modes, std::span<const Observation> targets);

struct MeanAndError {
  double mean = 0.0;
  double std_error = 0.0;
};
MeanAndError mean_and_error(std::span<const double> values);

/// Convergence summary for one parameter block.
struct BlockDiagnostics {
  std::string block;
  int n_params = 0;
  double max_rhat = 0.0;
  double min_ess = 0.0;
  int n_rhat_flagged = 0;  // parameters with R-hat >= 1.1
  int n_ess_flagged = 0;   // parameters with ESS <= 100
};

struct DiagnosticsOptions {
  // f* is monitored at every irf_stride-th grid node.
  int irf_stride = 1;
  double rhat_limit = 1.1;
  double ess_limit = 100.0;
};

/// R-hat and ESS over traits, f*, slopes, intercepts and cutpoints.
/// Parameters that never vary are skipped.
std::vector<BlockDiagnostics> diagnose(const PosteriorSamples& samples, const DiagnosticsOptions& options = {});

}  // namespace gdgpirt
