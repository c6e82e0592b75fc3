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
#include "gdgpirt/kernels.hpp"
#include "gdgpirt/ordinal.hpp"
#include "gdgpirt/rng.hpp"

#include <Eigen/Core>

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gdgpirt {

/// An observation as seen from its IRF block: the block member (respondent,
/// or trait entry for shared items) and the response.
struct BlockObservation {
  int member = 0;
  int response = 0;
};

/// Static indexing of blocks, location groups and observations.
///
/// A location group is the set of trait entries (i, t), stored as
/// e = i * T + t, whose positions condition an IRF: one group per period
/// when items differ across periods, a single group over all n * T entries
/// when items are shared.
class ModelLayout {
 public:
  ModelLayout(const ResponseDataset& dataset, const HyperParams& hyper);

  const ModelShape& shape() const { return shape_; }
  int n_respondents() const { return shape_.n_respondents; }
  int n_periods() const { return shape_.n_periods; }
  int n_blocks() const { return shape_.n_blocks(); }
  int n_groups() const { return static_cast<int>(group_entries_.size()); }
  int n_sets() const { return shape_.n_threshold_sets(); }
  bool sparse() const { return sparse_; }

  int item_of_block(int b) const { return shape_.items_shared ? b : b / shape_.n_periods; }
  int group_of_block(int b) const { return shape_.items_shared ? 0 : b % shape_.n_periods; }
  int set_of_block(int b) const { return shape_.threshold_set_of(item_of_block(b)); }

  const std::vector<int>& group_entries(int g) const { return group_entries_[static_cast<std::size_t>(g)]; }
  const std::vector<BlockObservation>& block_observations(int b) const {
    return block_obs_[static_cast<std::size_t>(b)];
  }
  const std::vector<PathObservation>& respondent_observations(int i) const {
    return respondent_obs_[static_cast<std::size_t>(i)];
  }
  const std::vector<int>& set_blocks(int s) const { return set_blocks_[static_cast<std::size_t>(s)]; }
  std::size_t n_observations() const { return n_obs_; }

 private:
  ModelShape shape_;
  bool sparse_ = false;
  std::size_t n_obs_ = 0;
  std::vector<std::vector<int>> group_entries_;
  std::vector<std::vector<BlockObservation>> block_obs_;
  std::vector<std::vector<PathObservation>> respondent_obs_;
  std::vector<std::vector<int>> set_blocks_;
};

/// Inducing nodes on the dense grid plus the k-nearest-neighbour inverse
/// distance weights that extend inducing values to every grid node.
struct InducingSet {
  std::vector<int> nodes;       // grid indices, increasing
  int k = 1;
  std::vector<int> neighbour;   // grid_points * k inducing slots
  std::vector<double> weight;   // matching weights, each row sums to 1

  int size() const { return static_cast<int>(nodes.size()); }
  double value_at(const Eigen::VectorXd& u, int grid_node) const;
  Eigen::VectorXd extend(const Eigen::VectorXd& u) const;
};

/// `count` evenly spaced inducing nodes with k-NN extension weights.
InducingSet select_inducing(const DenseGrid& grid, int count, int k);

/// Read-only structures shared by every chain of one run.
struct SamplerWorkspace {
  SamplerWorkspace(const ResponseDataset& dataset, const HyperParams& hyper);

  HyperParams hyper;
  ModelLayout layout;
  DenseGrid grid;
  KernelSpec irf_kernel;
  KernelSpec time_kernel;
  Eigen::MatrixXd grid_gram;   // K_x(x*, x*) without jitter
  Eigen::MatrixXd grid_root;   // grid_root * grid_root^T == grid_gram up to 1e-12 relative
  StableFactor time_factor;    // prior factor for a trait path
  bool trait_tables = false;   // precompute log p(c | f*) per grid node

  // Sparse path.
  InducingSet inducing;
  Eigen::VectorXd inducing_x;
  StableFactor inducing_factor;
  Eigen::VectorXd inducing_white_x;
  Eigen::VectorXd inducing_white_one;
};

/// Standardized first principal-component scores of each period's n x m
/// response matrix (missing entries mean-imputed), with each period's sign
/// chosen to agree with the previous period. Periods without usable items
/// get zeros.
Eigen::MatrixXd spectral_traits(const ModelLayout& layout);

/// Prior covariance of one trait path for the configured time kernel.
KernelSpec time_kernel_spec(const HyperParams& hyper, int periods);

/// One MCMC chain. Update order per iteration: f, f* per block; x per
/// respondent; refresh f at new x; beta per block; thresholds per set.
class Chain {
 public:
  Chain(const SamplerWorkspace& ws, int chain_id, std::uint64_t seed, int workers = 1);

  /// Draws x, beta and thresholds from their priors and f from the induced
  /// Gaussian at the initial trait locations.
  void initialize();
  void iterate();

  const ChainState& state() const { return state_; }
  int max_shrinks() const { return max_shrinks_.load(); }

  // Individual conditional updates. Each expects the preceding phases of the
  // iteration to be current.
  void sample_irf_block(int block, Rng& rng);
  void sample_grid_irf(int block, Rng& rng);
  void sample_trait_path(int respondent, Rng& rng);
  void refresh_irf_at_traits();
  void sample_beta(int block, Rng& rng);
  void sample_thresholds(int set, Rng& rng);

  /// Exact draw along x -> x + delta, beta_0 -> beta_0 - beta_1 delta with
  /// delta on the grid lattice. f at the traits and the likelihood are
  /// unchanged, so only the trait and intercept priors enter. Dense path
  /// only. Returns the shift in grid nodes.
  int sample_translation(Rng& rng);
  /// ESS on beta in the non-centred parameterization: the whitened residual
  /// of f stays fixed, so f and f* move with the line and the categorical
  /// likelihood drives the update.
  void sample_beta_ancillary(int block, Rng& rng);
  /// Exact Gaussian draw along b -> b + delta, beta_0 -> beta_0 + delta,
  /// f -> f + delta for every block of the threshold set.
  void sample_threshold_shift(int set, Rng& rng);

  /// Recomputes distinct trait locations, their Gram factors and the
  /// per-block likelihood tallies. Call after traits change.
  void rebuild_locations();

  /// Overwrites the traits (snapping to the grid) and rebuilds locations.
  void set_traits(const Eigen::MatrixXd& traits);
  /// Overwrites the f values at the distinct locations of a block's group.
  void set_irf_values(int block, const Eigen::VectorXd& values);
  /// Current f values at the distinct locations of a block (dense path) or
  /// the inducing values (sparse path).
  const Eigen::VectorXd& irf_values(int block) const;
  /// Grid nodes backing irf_values(block).
  std::vector<int> irf_value_nodes(int block) const;
  void set_beta(int block, double intercept, double slope);
  void set_thresholds(int set, const ThresholdSet& ts);

  double irf_loglik(int block, const Eigen::VectorXd& values) const;
  double threshold_loglik(int set, const ThresholdSet& ts) const;

 private:
  struct Location {
    std::vector<int> nodes;        // distinct grid nodes, increasing
    std::vector<int> member_slot;  // member -> index into nodes
    Eigen::VectorXd x;
    StableFactor factor;
    Eigen::VectorXd white_x;
    Eigen::VectorXd white_one;
  };
  struct Tally {
    int index;     // slot (dense) or grid node (sparse)
    int category;  // 1-based
    int count;
  };

  Rng stream(int phase, int block) const;
  void note_shrinks(int shrinks);
  void scatter_block(int block);
  void shift_traits(int k);
  void build_trait_tables(int block);
  double tally_loglik(int block, const Eigen::VectorXd& f, std::span<const double> cuts) const;
  Eigen::VectorXd prior_mean(int block, const Eigen::VectorXd& x) const;
  double trait_loglik(int respondent, const Eigen::VectorXd& path) const;

  const SamplerWorkspace& ws_;
  int chain_id_;
  std::uint64_t seed_;
  int workers_;
  ChainState state_;
  std::vector<Location> locations_;
  std::vector<std::vector<Tally>> tallies_;
  std::vector<Eigen::VectorXd> values_;           // dense: f at distinct nodes; sparse: inducing values
  std::vector<std::vector<double>> cuts_;         // per threshold set
  std::vector<Eigen::MatrixXd> trait_tables_;     // per block, C x grid_points
  std::atomic<int> max_shrinks_{0};
};

/// Returns a description of every ChainState invariant the state violates,
/// including f differing from the f* lookup at the traits beyond rounding.
std::vector<std::string> check_state_invariants(const ChainState& state, const SamplerWorkspace& ws);

/// Runs all chains with burn-in and thinning. Hard numerical errors are
/// rethrown as NumericalError carrying chain and iteration context.
PosteriorSamples run(const ResponseDataset& dataset, const HyperParams& hyper, const SamplerConfig& config,
                     const std::function<void(int chain, int iteration)>& progress = {});

}  // namespace gdgpirt
