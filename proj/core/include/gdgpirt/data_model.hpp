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

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace gdgpirt {

enum class TimeKernel { Matern52, Wiener, Static };
enum class ThresholdScope { PerItem, Global };
/// Starting traits: prior draws, or per-period principal-component scores
/// oriented consistently across periods and perturbed per chain.
enum class InitStrategy { Spectral, Prior };

std::string to_string(TimeKernel kernel);
TimeKernel parse_time_kernel(const std::string& name);
std::string to_string(ThresholdScope scope);
ThresholdScope parse_threshold_scope(const std::string& name);
std::string to_string(InitStrategy init);
InitStrategy parse_init_strategy(const std::string& name);

/// One observed response. Indices are 0-based; the response is a 1-based
/// category label in {1, ..., C_j}.
struct Observation {
  int respondent = 0;
  int item = 0;
  int period = 0;
  int response = 0;

  bool operator==(const Observation&) const = default;
};

/// Long-format ordinal response tensor. Missing (i, j, t) triples are simply
/// absent from `observations`.
struct ResponseDataset {
  int n_respondents = 0;
  int n_items = 0;
  int n_periods = 0;
  std::vector<int> categories_per_item;
  std::vector<Observation> observations;
  bool items_shared_across_time = false;

  int categories(int item) const { return categories_per_item.at(static_cast<std::size_t>(item)); }
  std::size_t size() const { return observations.size(); }

  bool operator==(const ResponseDataset&) const = default;
};

struct ValidationIssue {
  enum class Kind { Shape, IndexOutOfRange, ResponseOutOfRange, Duplicate, EmptyItem, EmptyPeriod };
  Kind kind;
  std::string message;
};

/// Checks every dataset invariant and reports violations; never throws.
std::vector<ValidationIssue> validate_dataset(const ResponseDataset& dataset);

/// Fixed model hyperparameters.
struct HyperParams {
  double len_scale_x = 1.0;
  double len_scale_t = 5.0;
  double var_slope = 1.0;
  double var_intercept = 1.0;
  double var_log_padding = 1.0;
  double var_first_threshold = 1.0;
  double grid_min = -5.0;
  double grid_max = 5.0;
  int grid_points = 500;
  double jitter = 1e-6;
  TimeKernel time_kernel = TimeKernel::Matern52;
  double wiener_anchor_var = 1.0;
  double wiener_diffusion_var = 0.1;
  ThresholdScope threshold_scope = ThresholdScope::PerItem;
  int sparse_inducing_count = 100;
  int knn_k = 4;
  // Shared-item fits switch to the inducing-point path once n * T exceeds this.
  long sparse_threshold = 2000;
  InitStrategy init = InitStrategy::Spectral;
  // Opening sweeps (part of burn-in) that hold the spectral traits fixed so
  // the IRFs orient themselves before the traits move.
  int frozen_trait_sweeps = 25;
  // Elliptical slice steps per Gibbs sweep for each trait path and IRF block.
  int trait_steps = 5;
  int irf_steps = 5;
  // Alternating centred and ancillary beta steps per sweep.
  int beta_steps = 5;
  // Extra moves along weakly identified directions: trait translation,
  // threshold shift, and an ancillary (whitened-residual) beta update.
  bool auxiliary_moves = true;

  /// Throws ConfigError on any violated invariant.
  void validate() const;
  bool operator==(const HyperParams&) const = default;
};

struct SamplerConfig {
  int n_chains = 3;
  int burn_in = 500;
  int n_iterations = 500;
  int thin = 4;
  std::uint64_t seed = 1;
  int threads = 1;

  int kept_per_chain() const { return n_iterations / thin; }
  void validate() const;
};

/// Evenly spaced trait grid x* on [min, max].
class DenseGrid {
 public:
  DenseGrid() = default;
  DenseGrid(double min, double max, int points);
  explicit DenseGrid(const HyperParams& hyper)
      : DenseGrid(hyper.grid_min, hyper.grid_max, hyper.grid_points) {}

  int size() const { return static_cast<int>(nodes_.size()); }
  double spacing() const { return spacing_; }
  double operator[](int k) const { return nodes_[static_cast<std::size_t>(k)]; }
  const std::vector<double>& nodes() const { return nodes_; }
  double min() const { return min_; }
  double max() const { return max_; }

  /// Index of the node nearest to x; values outside the grid clamp to an end.
  int nearest(double x) const;
  /// Node index of the reflection -x*[k]; requires a symmetric grid.
  int mirror(int k) const { return size() - 1 - k; }
  bool symmetric() const;

 private:
  double min_ = 0.0;
  double max_ = 0.0;
  double spacing_ = 0.0;
  std::vector<double> nodes_;
};

/// Ordered cutpoints b_1 < ... < b_{C-1} in unconstrained form: the first
/// cutpoint plus log paddings log(b_c - b_{c-1}) for c = 2..C-1.
struct ThresholdSet {
  double first = 0.0;
  std::vector<double> log_paddings;

  int categories() const { return static_cast<int>(log_paddings.size()) + 2; }
  bool operator==(const ThresholdSet&) const = default;
};

/// Current state of one MCMC chain.
///
/// IRF blocks are indexed b = j * T + t when items differ across periods and
/// b = j when items are shared; members of a block are respondents i (or
/// trait entries i * T + t for shared items).
struct ChainState {
  int iteration = 0;
  Eigen::MatrixXd traits;                          // n x T, always grid nodes
  Eigen::MatrixXi trait_nodes;                     // n x T grid indices
  std::vector<Eigen::VectorXd> irf_grid;           // f* per block
  std::vector<Eigen::VectorXd> irf_at_traits;      // f per block member
  std::vector<Eigen::VectorXd> inducing_values;    // sparse path only
  Eigen::VectorXd slopes;
  Eigen::VectorXd intercepts;
  std::vector<ThresholdSet> thresholds;
};

/// A thinned draw retained from a chain.
struct Draw {
  int iteration = 0;
  Eigen::MatrixXd traits;
  std::vector<Eigen::VectorXd> irf_grid;
  Eigen::VectorXd slopes;
  Eigen::VectorXd intercepts;
  std::vector<ThresholdSet> thresholds;
};

/// Everything needed to interpret draws without the original dataset.
struct ModelShape {
  int n_respondents = 0;
  int n_items = 0;
  int n_periods = 0;
  bool items_shared = false;
  std::vector<int> categories_per_item;
  HyperParams hyper;

  int n_blocks() const { return items_shared ? n_items : n_items * n_periods; }
  int block_of(int item, int period) const { return items_shared ? item : item * n_periods + period; }
  int n_threshold_sets() const { return hyper.threshold_scope == ThresholdScope::Global ? 1 : n_items; }
  int threshold_set_of(int item) const { return hyper.threshold_scope == ThresholdScope::Global ? 0 : item; }
  int set_categories(int set) const;

  static ModelShape from(const ResponseDataset& dataset, const HyperParams& hyper);
};

struct ChainStats {
  int max_shrinks = 0;
  double seconds = 0.0;
};

/// Thinned multi-chain draws. All chains hold the same number of draws.
struct PosteriorSamples {
  ModelShape shape;
  std::vector<std::vector<Draw>> chains;
  std::vector<ChainStats> stats;
  int burn_in = 0;
  int n_kept = 0;
  int thin = 1;
  std::uint64_t seed = 0;

  int n_chains() const { return static_cast<int>(chains.size()); }
  std::size_t total_draws() const;
};

/// Simulator truth paired with a generated dataset.
struct GroundTruth {
  Eigen::MatrixXd true_traits;                  // n x T
  std::vector<Eigen::VectorXd> true_irf_grid;   // per IRF block, on the engine grid
  std::vector<std::vector<double>> true_thresholds;  // per item: b_1..b_{C-1}
  Eigen::MatrixXd true_slopes_intercepts;       // blocks x 2 (intercept, slope)
};

}  // namespace gdgpirt
