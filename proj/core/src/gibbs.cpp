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

#include "gdgpirt/gibbs.hpp"

#include "gdgpirt/error.hpp"
#include "gdgpirt/ess.hpp"
#include "gdgpirt/parallel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace gdgpirt {
namespace {

enum Phase : std::uint64_t {
  kInitTraits = 100,
  kInitBeta = 101,
  kInitThresholds = 102,
  kInitIrf = 103,
  kIrf = 1,
  kGrid = 2,
  kTrait = 3,
  kBeta = 4,
  kThreshold = 5,
  kTranslate = 6,
  kShift = 7,
  kBetaAncillary = 8,
};

ThresholdSet to_threshold_set(const Eigen::VectorXd& v) {
  ThresholdSet ts;
  ts.first = v[0];
  ts.log_paddings.assign(v.data() + 1, v.data() + v.size());
  return ts;
}

Eigen::VectorXd to_vector(const ThresholdSet& ts) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(ts.log_paddings.size()) + 1);
  v[0] = ts.first;
  for (std::size_t l = 0; l < ts.log_paddings.size(); ++l) v[static_cast<Eigen::Index>(l) + 1] = ts.log_paddings[l];
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Layout

ModelLayout::ModelLayout(const ResponseDataset& dataset, const HyperParams& hyper)
    : shape_(ModelShape::from(dataset, hyper)) {
  const int n = shape_.n_respondents;
  const int periods = shape_.n_periods;
  sparse_ = shape_.items_shared && static_cast<long>(n) * periods > hyper.sparse_threshold;

  if (shape_.items_shared) {
    group_entries_.resize(1);
    group_entries_[0].resize(static_cast<std::size_t>(n * periods));
    std::iota(group_entries_[0].begin(), group_entries_[0].end(), 0);
  } else {
    group_entries_.resize(static_cast<std::size_t>(periods));
    for (int t = 0; t < periods; ++t)
      for (int i = 0; i < n; ++i) group_entries_[static_cast<std::size_t>(t)].push_back(i * periods + t);
  }

  block_obs_.resize(static_cast<std::size_t>(shape_.n_blocks()));
  respondent_obs_.resize(static_cast<std::size_t>(n));
  for (const auto& o : dataset.observations) {
    const int b = shape_.block_of(o.item, o.period);
    const int member = shape_.items_shared ? o.respondent * periods + o.period : o.respondent;
    block_obs_[static_cast<std::size_t>(b)].push_back({member, o.response});
    respondent_obs_[static_cast<std::size_t>(o.respondent)].push_back(
        {o.period, b, shape_.threshold_set_of(o.item), o.response});
  }
  n_obs_ = dataset.observations.size();

  set_blocks_.resize(static_cast<std::size_t>(shape_.n_threshold_sets()));
  for (int b = 0; b < shape_.n_blocks(); ++b) set_blocks_[static_cast<std::size_t>(set_of_block(b))].push_back(b);
}

// ---------------------------------------------------------------------------
// Inducing points

double InducingSet::value_at(const Eigen::VectorXd& u, int grid_node) const {
  const auto base = static_cast<std::size_t>(grid_node) * static_cast<std::size_t>(k);
  double v = 0.0;
  for (int q = 0; q < k; ++q) v += weight[base + static_cast<std::size_t>(q)] * u[neighbour[base + static_cast<std::size_t>(q)]];
  return v;
}

Eigen::VectorXd InducingSet::extend(const Eigen::VectorXd& u) const {
  const auto points = static_cast<Eigen::Index>(neighbour.size() / static_cast<std::size_t>(k));
  Eigen::VectorXd out(points);
  for (Eigen::Index g = 0; g < points; ++g) out[g] = value_at(u, static_cast<int>(g));
  return out;
}

InducingSet select_inducing(const DenseGrid& grid, int count, int k) {
  const int points = grid.size();
  if (count < 2 || count > points) throw ConfigError("inducing count must lie in [2, grid_points]");
  if (k < 1 || k > count) throw ConfigError("k-nearest-neighbour count exceeds the number of inducing points");

  InducingSet set;
  set.k = k;
  for (int s = 0; s < count; ++s) {
    const auto node = static_cast<int>(std::lround(static_cast<double>(s) * (points - 1) / (count - 1)));
    set.nodes.push_back(node);
  }
  set.neighbour.resize(static_cast<std::size_t>(points) * static_cast<std::size_t>(k));
  set.weight.resize(set.neighbour.size());

  std::vector<int> order(static_cast<std::size_t>(count));
  for (int g = 0; g < points; ++g) {
    std::iota(order.begin(), order.end(), 0);
    auto dist = [&](int s) { return std::abs(grid[g] - grid[set.nodes[static_cast<std::size_t>(s)]]); };
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
      const double da = dist(a), db = dist(b);
      return da < db || (da == db && a < b);
    });
    const auto base = static_cast<std::size_t>(g) * static_cast<std::size_t>(k);
    if (dist(order[0]) == 0.0) {
      for (int q = 0; q < k; ++q) {
        set.neighbour[base + static_cast<std::size_t>(q)] = order[static_cast<std::size_t>(q)];
        set.weight[base + static_cast<std::size_t>(q)] = q == 0 ? 1.0 : 0.0;
      }
      continue;
    }
    double total = 0.0;
    for (int q = 0; q < k; ++q) {
      const double w = 1.0 / dist(order[static_cast<std::size_t>(q)]);
      set.neighbour[base + static_cast<std::size_t>(q)] = order[static_cast<std::size_t>(q)];
      set.weight[base + static_cast<std::size_t>(q)] = w;
      total += w;
    }
    for (int q = 0; q < k; ++q) set.weight[base + static_cast<std::size_t>(q)] /= total;
  }
  return set;
}

// ---------------------------------------------------------------------------
// Workspace

Eigen::MatrixXd spectral_traits(const ModelLayout& layout) {
  const auto& shape = layout.shape();
  const int n = layout.n_respondents();
  const int periods = layout.n_periods();
  const int items = shape.n_items;
  std::vector<Eigen::MatrixXd> responses(static_cast<std::size_t>(periods),
                                         Eigen::MatrixXd::Constant(n, items, std::nan("")));
  for (int i = 0; i < n; ++i)
    for (const auto& o : layout.respondent_observations(i))
      responses[static_cast<std::size_t>(o.period)](i, layout.item_of_block(o.block)) = o.response;

  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(n, periods);
  for (int t = 0; t < periods; ++t) {
    const Eigen::MatrixXd& y = responses[static_cast<std::size_t>(t)];
    std::vector<Eigen::VectorXd> columns;
    for (int j = 0; j < items; ++j) {
      Eigen::VectorXd col = y.col(j);
      double sum = 0.0;
      int seen = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!std::isnan(col[i])) {
          sum += col[i];
          ++seen;
        }
      if (seen < 2) continue;
      const double mean = sum / seen;
      for (Eigen::Index i = 0; i < n; ++i) col[i] = std::isnan(col[i]) ? 0.0 : col[i] - mean;
      const double sd = std::sqrt(col.squaredNorm() / seen);
      if (sd > 0.0) columns.push_back(col / sd);
    }
    if (columns.empty()) continue;
    Eigen::MatrixXd z(n, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) z.col(static_cast<Eigen::Index>(c)) = columns[c];
    Eigen::BDCSVD<Eigen::MatrixXd> svd(z, Eigen::ComputeThinU);
    Eigen::VectorXd s = svd.matrixU().col(0);
    s.array() -= s.mean();
    const double norm = std::sqrt(s.squaredNorm() / n);
    if (norm > 0.0) s /= norm;
    if (t > 0 && s.dot(scores.col(t - 1)) < 0.0) s = -s;
    scores.col(t) = s;
  }
  return scores;
}

KernelSpec time_kernel_spec(const HyperParams& hyper, int periods) {
  switch (hyper.time_kernel) {
    case TimeKernel::Matern52: return KernelSpec::matern52(hyper.len_scale_t, hyper.jitter);
    case TimeKernel::Wiener:
      return KernelSpec::wiener(hyper.wiener_anchor_var, hyper.wiener_diffusion_var, periods, hyper.jitter);
    case TimeKernel::Static: return KernelSpec::identity(hyper.jitter);
  }
  return KernelSpec::identity(hyper.jitter);
}

SamplerWorkspace::SamplerWorkspace(const ResponseDataset& dataset, const HyperParams& hp)
    : hyper(hp), layout(dataset, hp), grid(hp) {
  hyper.validate();
  irf_kernel = KernelSpec::rbf(hyper.len_scale_x, hyper.jitter);
  const int periods = layout.n_periods();
  time_kernel = time_kernel_spec(hyper, periods);

  grid_gram = cross_gram(grid.nodes(), grid.nodes(), irf_kernel);
  grid_root = low_rank_root(grid_gram);

  std::vector<double> times(static_cast<std::size_t>(periods));
  std::iota(times.begin(), times.end(), 1.0);
  KernelSpec bare = time_kernel;
  bare.jitter = 0.0;
  time_factor = stable_cholesky(gram(times, bare), hyper.jitter, "trait path prior");

  // Log-probability lookup tables beat direct evaluation once respondents
  // outnumber what a full table pass would cost.
  double table_cost = 0.0;
  for (int b = 0; b < layout.n_blocks(); ++b)
    table_cost += static_cast<double>(grid.size()) * layout.shape().set_categories(layout.set_of_block(b));
  trait_tables = table_cost < 6.0 * static_cast<double>(layout.n_observations());

  if (layout.sparse()) {
    inducing = select_inducing(grid, hyper.sparse_inducing_count, hyper.knn_k);
    inducing_x.resize(inducing.size());
    for (int s = 0; s < inducing.size(); ++s) inducing_x[s] = grid[inducing.nodes[static_cast<std::size_t>(s)]];
    std::vector<double> xs(inducing_x.data(), inducing_x.data() + inducing_x.size());
    inducing_factor = stable_cholesky(cross_gram(xs, xs, irf_kernel), hyper.jitter, "inducing-point prior");
    inducing_white_x = inducing_factor.whiten(inducing_x);
    inducing_white_one = inducing_factor.whiten(Eigen::VectorXd::Ones(inducing.size()));
  }
}

// ---------------------------------------------------------------------------
// Chain

Chain::Chain(const SamplerWorkspace& ws, int chain_id, std::uint64_t seed, int workers)
    : ws_(ws), chain_id_(chain_id), seed_(seed), workers_(std::max(1, workers)) {
  const auto& layout = ws_.layout;
  const int n = layout.n_respondents();
  const int periods = layout.n_periods();
  const int blocks = layout.n_blocks();
  state_.traits = Eigen::MatrixXd::Zero(n, periods);
  state_.trait_nodes = Eigen::MatrixXi::Zero(n, periods);
  state_.irf_grid.assign(static_cast<std::size_t>(blocks), Eigen::VectorXd::Zero(ws_.grid.size()));
  state_.irf_at_traits.resize(static_cast<std::size_t>(blocks));
  for (int b = 0; b < blocks; ++b)
    state_.irf_at_traits[static_cast<std::size_t>(b)] =
        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.group_entries(layout.group_of_block(b)).size()));
  state_.slopes = Eigen::VectorXd::Zero(blocks);
  state_.intercepts = Eigen::VectorXd::Zero(blocks);
  state_.thresholds.resize(static_cast<std::size_t>(layout.n_sets()));
  cuts_.resize(state_.thresholds.size());
  for (int s = 0; s < layout.n_sets(); ++s) {
    auto& ts = state_.thresholds[static_cast<std::size_t>(s)];
    ts.log_paddings.assign(static_cast<std::size_t>(layout.shape().set_categories(s) - 2), 0.0);
    cuts_[static_cast<std::size_t>(s)] = reconstruct_thresholds(ts, ts.categories());
  }
  values_.resize(static_cast<std::size_t>(blocks));
  tallies_.resize(static_cast<std::size_t>(blocks));
  if (ws_.trait_tables) trait_tables_.resize(static_cast<std::size_t>(blocks));
}

Rng Chain::stream(int phase, int block) const {
  return Rng::stream(seed_, {static_cast<std::uint64_t>(chain_id_), static_cast<std::uint64_t>(state_.iteration),
                             static_cast<std::uint64_t>(phase), static_cast<std::uint64_t>(block)});
}

void Chain::note_shrinks(int shrinks) {
  int prev = max_shrinks_.load();
  while (shrinks > prev && !max_shrinks_.compare_exchange_weak(prev, shrinks)) {
  }
}

Eigen::VectorXd Chain::prior_mean(int block, const Eigen::VectorXd& x) const {
  const auto b = static_cast<Eigen::Index>(block);
  return (state_.slopes[b] * x.array() + state_.intercepts[b]).matrix();
}

void Chain::initialize() {
  const auto& layout = ws_.layout;
  const auto& hp = ws_.hyper;
  state_.iteration = 0;

  Eigen::MatrixXd start;
  double perturbation = 1.0;
  if (hp.init == InitStrategy::Spectral) {
    // Each chain starts from an independently reflected copy of the spectral
    // scores plus a prior path scaled by one half.
    Rng rng = stream(kInitTraits, layout.n_respondents());
    start = (rng.uniform() < 0.5 ? -1.0 : 1.0) * spectral_traits(layout);
    perturbation = 0.5;
  } else {
    start = Eigen::MatrixXd::Zero(layout.n_respondents(), layout.n_periods());
  }
  for (int i = 0; i < layout.n_respondents(); ++i) {
    Rng rng = stream(kInitTraits, i);
    const Eigen::VectorXd x = start.row(i).transpose() +
                              perturbation * ws_.time_factor.colour(rng.normal_vector(layout.n_periods()));
    for (int t = 0; t < layout.n_periods(); ++t) {
      const int node = ws_.grid.nearest(x[t]);
      state_.trait_nodes(i, t) = node;
      state_.traits(i, t) = ws_.grid[node];
    }
  }
  for (int b = 0; b < layout.n_blocks(); ++b) {
    Rng rng = stream(kInitBeta, b);
    state_.intercepts[b] = std::sqrt(hp.var_intercept) * rng.normal();
    state_.slopes[b] = std::sqrt(hp.var_slope) * rng.normal();
  }
  for (int s = 0; s < layout.n_sets(); ++s) {
    Rng rng = stream(kInitThresholds, s);
    auto& ts = state_.thresholds[static_cast<std::size_t>(s)];
    ts.first = std::sqrt(hp.var_first_threshold) * rng.normal();
    for (auto& lp : ts.log_paddings) lp = std::sqrt(hp.var_log_padding) * rng.normal();
    cuts_[static_cast<std::size_t>(s)] = reconstruct_thresholds(ts, ts.categories());
  }
  rebuild_locations();

  parallel_for(static_cast<std::size_t>(layout.n_blocks()), workers_, [&](std::size_t bi) {
    const int b = static_cast<int>(bi);
    Rng rng = stream(kInitIrf, b);
    auto& values = values_[bi];
    if (layout.sparse()) {
      values = prior_mean(b, ws_.inducing_x) + ws_.inducing_factor.colour(rng.normal_vector(ws_.inducing.size()));
      state_.irf_grid[bi] = ws_.inducing.extend(values);
    } else {
      const auto& loc = locations_[static_cast<std::size_t>(layout.group_of_block(b))];
      values = prior_mean(b, loc.x) + loc.factor.colour(rng.normal_vector(loc.x.size()));
      const std::vector<double> xs(loc.x.data(), loc.x.data() + loc.x.size());
      const std::vector<double> fs(values.data(), values.data() + values.size());
      state_.irf_grid[bi] = gp_conditional_mean(xs, fs, ws_.grid.nodes(), ws_.irf_kernel,
                                                AffineMean{state_.slopes[b], state_.intercepts[b]});
    }
    scatter_block(b);
  });
  // The conditional mean does not reproduce f exactly at the training nodes,
  // so f is re-read from f* to start from a consistent state.
  refresh_irf_at_traits();
}

void Chain::iterate() {
  const auto& layout = ws_.layout;
  const auto blocks = static_cast<std::size_t>(layout.n_blocks());
  ++state_.iteration;

  parallel_for(blocks, workers_, [&](std::size_t b) {
    Rng irf_rng = stream(kIrf, static_cast<int>(b));
    sample_irf_block(static_cast<int>(b), irf_rng);
    Rng grid_rng = stream(kGrid, static_cast<int>(b));
    sample_grid_irf(static_cast<int>(b), grid_rng);
  });
  const bool traits_frozen =
      ws_.hyper.init == InitStrategy::Spectral && state_.iteration <= ws_.hyper.frozen_trait_sweeps;
  if (!traits_frozen) {
    if (ws_.trait_tables)
      parallel_for(blocks, workers_, [&](std::size_t b) { build_trait_tables(static_cast<int>(b)); });
    parallel_for(static_cast<std::size_t>(layout.n_respondents()), workers_, [&](std::size_t i) {
      Rng rng = stream(kTrait, static_cast<int>(i));
      sample_trait_path(static_cast<int>(i), rng);
    });
    rebuild_locations();
  }
  refresh_irf_at_traits();
  if (ws_.hyper.auxiliary_moves && !layout.sparse() && !traits_frozen) {
    Rng rng = stream(kTranslate, 0);
    sample_translation(rng);
  }
  parallel_for(blocks, workers_, [&](std::size_t b) {
    Rng rng = stream(kBeta, static_cast<int>(b));
    Rng anc = stream(kBetaAncillary, static_cast<int>(b));
    for (int step = 0; step < ws_.hyper.beta_steps; ++step) {
      sample_beta(static_cast<int>(b), rng);
      if (ws_.hyper.auxiliary_moves) sample_beta_ancillary(static_cast<int>(b), anc);
    }
  });
  parallel_for(static_cast<std::size_t>(layout.n_sets()), workers_, [&](std::size_t s) {
    Rng rng = stream(kThreshold, static_cast<int>(s));
    sample_thresholds(static_cast<int>(s), rng);
  });
  if (ws_.hyper.auxiliary_moves)
    for (int s = 0; s < layout.n_sets(); ++s) {
      Rng rng = stream(kShift, s);
      sample_threshold_shift(s, rng);
    }
}

void Chain::rebuild_locations() {
  const auto& layout = ws_.layout;
  const int periods = layout.n_periods();
  locations_.resize(static_cast<std::size_t>(layout.n_groups()));

  parallel_for(locations_.size(), workers_, [&](std::size_t g) {
    auto& loc = locations_[g];
    const auto& entries = layout.group_entries(static_cast<int>(g));
    std::vector<int> member_node(entries.size());
    for (std::size_t m = 0; m < entries.size(); ++m)
      member_node[m] = state_.trait_nodes(entries[m] / periods, entries[m] % periods);
    loc.nodes = member_node;
    std::sort(loc.nodes.begin(), loc.nodes.end());
    loc.nodes.erase(std::unique(loc.nodes.begin(), loc.nodes.end()), loc.nodes.end());
    std::vector<int> slot_of_node(static_cast<std::size_t>(ws_.grid.size()), -1);
    for (std::size_t s = 0; s < loc.nodes.size(); ++s) slot_of_node[static_cast<std::size_t>(loc.nodes[s])] = static_cast<int>(s);
    loc.member_slot.resize(entries.size());
    for (std::size_t m = 0; m < entries.size(); ++m)
      loc.member_slot[m] = slot_of_node[static_cast<std::size_t>(member_node[m])];

    const auto d = static_cast<Eigen::Index>(loc.nodes.size());
    loc.x.resize(d);
    for (Eigen::Index s = 0; s < d; ++s) loc.x[s] = ws_.grid[loc.nodes[static_cast<std::size_t>(s)]];
    if (layout.sparse()) return;

    Eigen::MatrixXd k(d, d);
    for (Eigen::Index c = 0; c < d; ++c)
      for (Eigen::Index r = 0; r < d; ++r)
        k(r, c) = ws_.grid_gram(loc.nodes[static_cast<std::size_t>(r)], loc.nodes[static_cast<std::size_t>(c)]);
    const std::string context =
        layout.shape().items_shared ? "shared-item trait locations" : "trait locations of period " + std::to_string(g + 1);
    loc.factor = stable_cholesky(k, ws_.hyper.jitter, context);
    loc.white_x = loc.factor.whiten(loc.x);
    loc.white_one = loc.factor.whiten(Eigen::VectorXd::Ones(d));
  });

  parallel_for(tallies_.size(), workers_, [&](std::size_t bi) {
    const int b = static_cast<int>(bi);
    const auto& loc = locations_[static_cast<std::size_t>(layout.group_of_block(b))];
    const auto& entries = layout.group_entries(layout.group_of_block(b));
    const int categories = layout.shape().set_categories(layout.set_of_block(b));
    std::vector<long> keys;
    keys.reserve(layout.block_observations(b).size());
    for (const auto& o : layout.block_observations(b)) {
      const auto m = static_cast<std::size_t>(o.member);
      const int index = layout.sparse() ? state_.trait_nodes(entries[m] / periods, entries[m] % periods)
                                        : loc.member_slot[m];
      keys.push_back(static_cast<long>(index) * categories + (o.response - 1));
    }
    std::sort(keys.begin(), keys.end());
    auto& tally = tallies_[bi];
    tally.clear();
    for (std::size_t k = 0; k < keys.size();) {
      std::size_t e = k;
      while (e < keys.size() && keys[e] == keys[k]) ++e;
      tally.push_back({static_cast<int>(keys[k] / categories), static_cast<int>(keys[k] % categories) + 1,
                       static_cast<int>(e - k)});
      k = e;
    }
  });

  // Dense values follow the members to their new slots.
  if (!layout.sparse()) {
    for (int b = 0; b < layout.n_blocks(); ++b) {
      const auto& loc = locations_[static_cast<std::size_t>(layout.group_of_block(b))];
      const auto& at_traits = state_.irf_at_traits[static_cast<std::size_t>(b)];
      auto& values = values_[static_cast<std::size_t>(b)];
      values.resize(static_cast<Eigen::Index>(loc.nodes.size()));
      for (std::size_t m = 0; m < loc.member_slot.size(); ++m)
        values[loc.member_slot[m]] = at_traits[static_cast<Eigen::Index>(m)];
    }
  }
}

void Chain::scatter_block(int block) {
  const auto& layout = ws_.layout;
  const auto b = static_cast<std::size_t>(block);
  auto& at_traits = state_.irf_at_traits[b];
  if (layout.sparse()) {
    const auto& entries = layout.group_entries(layout.group_of_block(block));
    const int periods = layout.n_periods();
    for (std::size_t m = 0; m < entries.size(); ++m)
      at_traits[static_cast<Eigen::Index>(m)] =
          state_.irf_grid[b][state_.trait_nodes(entries[m] / periods, entries[m] % periods)];
    return;
  }
  const auto& loc = locations_[static_cast<std::size_t>(layout.group_of_block(block))];
  for (std::size_t m = 0; m < loc.member_slot.size(); ++m)
    at_traits[static_cast<Eigen::Index>(m)] = values_[b][loc.member_slot[m]];
}

double Chain::tally_loglik(int block, const Eigen::VectorXd& f, std::span<const double> cuts) const {
  double ll = 0.0;
  for (const auto& t : tallies_[static_cast<std::size_t>(block)])
    ll += t.count * category_logprob(f[t.index], cuts, t.category);
  return ll;
}

double Chain::irf_loglik(int block, const Eigen::VectorXd& values) const {
  const auto& cuts = cuts_[static_cast<std::size_t>(ws_.layout.set_of_block(block))];
  if (!ws_.layout.sparse()) return tally_loglik(block, values, cuts);
  double ll = 0.0;
  for (const auto& t : tallies_[static_cast<std::size_t>(block)])
    ll += t.count * category_logprob(ws_.inducing.value_at(values, t.index), cuts, t.category);
  return ll;
}

void Chain::sample_irf_block(int block, Rng& rng) {
  const auto& layout = ws_.layout;
  const auto b = static_cast<std::size_t>(block);
  const StableFactor& factor =
      layout.sparse() ? ws_.inducing_factor : locations_[static_cast<std::size_t>(layout.group_of_block(block))].factor;
  const Eigen::VectorXd mean =
      prior_mean(block, layout.sparse() ? ws_.inducing_x
                                        : locations_[static_cast<std::size_t>(layout.group_of_block(block))].x);
  auto loglik = [&](const Eigen::VectorXd& v) { return irf_loglik(block, v); };
  EssResult res{values_[b], loglik(values_[b]), 0};
  for (int step = 0; step < ws_.hyper.irf_steps; ++step) {
    const Eigen::VectorXd nu = factor.colour(rng.normal_vector(mean.size()));
    res = ess_step(res.state, res.loglik, mean, nu, loglik, rng);
    note_shrinks(res.shrinks);
  }
  values_[b] = std::move(res.state);
  if (layout.sparse()) state_.irf_grid[b] = ws_.inducing.extend(values_[b]);
  scatter_block(block);
}

void Chain::sample_grid_irf(int block, Rng& rng) {
  const auto& layout = ws_.layout;
  const auto b = static_cast<std::size_t>(block);
  if (layout.sparse()) {
    state_.irf_grid[b] = ws_.inducing.extend(values_[b]);
    return;
  }
  // Pathwise draw from GP(mu*, K*): a joint prior sample on the grid and
  // the training nodes, corrected through the training residual.
  const auto& loc = locations_[static_cast<std::size_t>(layout.group_of_block(block))];
  const auto d = static_cast<Eigen::Index>(loc.nodes.size());
  const double slope = state_.slopes[block];
  const double intercept = state_.intercepts[block];

  Eigen::VectorXd prior = ws_.grid_root * rng.normal_vector(ws_.grid_root.cols());
  const Eigen::VectorXd noise = std::sqrt(loc.factor.jitter) * rng.normal_vector(d);
  Eigen::VectorXd resid(d);
  for (Eigen::Index s = 0; s < d; ++s)
    resid[s] = values_[b][s] - (slope * loc.x[s] + intercept) - prior[loc.nodes[static_cast<std::size_t>(s)]] - noise[s];
  const Eigen::VectorXd w = loc.factor.solve(resid);

  auto& fstar = state_.irf_grid[b];
  for (int g = 0; g < ws_.grid.size(); ++g) prior[g] += slope * ws_.grid[g] + intercept;
  for (Eigen::Index s = 0; s < d; ++s) prior.noalias() += w[s] * ws_.grid_gram.col(loc.nodes[static_cast<std::size_t>(s)]);
  fstar = std::move(prior);
}

void Chain::build_trait_tables(int block) {
  const auto b = static_cast<std::size_t>(block);
  const auto& cuts = cuts_[static_cast<std::size_t>(ws_.layout.set_of_block(block))];
  const int categories = static_cast<int>(cuts.size()) - 1;
  auto& table = trait_tables_[b];
  table.resize(categories, ws_.grid.size());
  for (int g = 0; g < ws_.grid.size(); ++g)
    for (int c = 1; c <= categories; ++c) table(c - 1, g) = category_logprob(state_.irf_grid[b][g], cuts, c);
}

double Chain::trait_loglik(int respondent, const Eigen::VectorXd& path) const {
  const auto& obs = ws_.layout.respondent_observations(respondent);
  if (!ws_.trait_tables) {
    return loglik_trait_path(std::span<const double>(path.data(), static_cast<std::size_t>(path.size())), ws_.grid,
                             state_.irf_grid, cuts_, obs);
  }
  double ll = 0.0;
  for (const auto& o : obs)
    ll += trait_tables_[static_cast<std::size_t>(o.block)](o.response - 1, ws_.grid.nearest(path[o.period]));
  return ll;
}

void Chain::sample_trait_path(int respondent, Rng& rng) {
  const int periods = ws_.layout.n_periods();
  auto loglik = [&](const Eigen::VectorXd& path) { return trait_loglik(respondent, path); };
  EssResult res{state_.traits.row(respondent).transpose(), 0.0, 0};
  res.loglik = loglik(res.state);
  for (int step = 0; step < ws_.hyper.trait_steps; ++step) {
    const Eigen::VectorXd nu = ws_.time_factor.colour(rng.normal_vector(periods));
    res = ess_step(res.state, res.loglik, Eigen::VectorXd::Zero(periods), nu, loglik, rng);
    note_shrinks(res.shrinks);
  }
  for (int t = 0; t < periods; ++t) {
    const int node = ws_.grid.nearest(res.state[t]);
    state_.trait_nodes(respondent, t) = node;
    state_.traits(respondent, t) = ws_.grid[node];
  }
}

void Chain::refresh_irf_at_traits() {
  const auto& layout = ws_.layout;
  for (int b = 0; b < layout.n_blocks(); ++b) {
    const auto bi = static_cast<std::size_t>(b);
    if (!layout.sparse()) {
      const auto& loc = locations_[static_cast<std::size_t>(layout.group_of_block(b))];
      auto& values = values_[bi];
      values.resize(static_cast<Eigen::Index>(loc.nodes.size()));
      for (std::size_t s = 0; s < loc.nodes.size(); ++s)
        values[static_cast<Eigen::Index>(s)] = state_.irf_grid[bi][loc.nodes[s]];
    }
    scatter_block(b);
  }
}

void Chain::sample_beta(int block, Rng& rng) {
  const auto& layout = ws_.layout;
  const auto b = static_cast<std::size_t>(block);
  Eigen::VectorXd white_f;
  const Eigen::VectorXd* white_x = nullptr;
  const Eigen::VectorXd* white_one = nullptr;
  if (layout.sparse()) {
    white_f = ws_.inducing_factor.whiten(values_[b]);
    white_x = &ws_.inducing_white_x;
    white_one = &ws_.inducing_white_one;
  } else {
    const auto& loc = locations_[static_cast<std::size_t>(layout.group_of_block(block))];
    white_f = loc.factor.whiten(values_[b]);
    white_x = &loc.white_x;
    white_one = &loc.white_one;
  }
  // Gaussian log-density of f under mean beta_1 x + beta_0 up to a constant.
  auto loglik = [&](const Eigen::VectorXd& beta) {
    return -0.5 * (white_f - beta[1] * *white_x - beta[0] * *white_one).squaredNorm();
  };
  const Eigen::Vector2d current(state_.intercepts[block], state_.slopes[block]);
  const Eigen::Vector2d nu(std::sqrt(ws_.hyper.var_intercept) * rng.normal(), std::sqrt(ws_.hyper.var_slope) * rng.normal());
  const EssResult res = ess_step(current, loglik(current), Eigen::VectorXd::Zero(2), nu, loglik, rng);
  note_shrinks(res.shrinks);
  state_.intercepts[block] = res.state[0];
  state_.slopes[block] = res.state[1];
}

void Chain::sample_beta_ancillary(int block, Rng& rng) {
  const auto& layout = ws_.layout;
  const auto b = static_cast<std::size_t>(block);
  const Eigen::VectorXd& x =
      layout.sparse() ? ws_.inducing_x : locations_[static_cast<std::size_t>(layout.group_of_block(block))].x;
  const Eigen::Vector2d current(state_.intercepts[block], state_.slopes[block]);
  // With the whitened residual held fixed, f moves with the line.
  auto shifted = [&](const Eigen::VectorXd& beta) {
    return Eigen::VectorXd(values_[b].array() + (beta[0] - current[0]) + (beta[1] - current[1]) * x.array());
  };
  auto loglik = [&](const Eigen::VectorXd& beta) { return irf_loglik(block, shifted(beta)); };
  const Eigen::Vector2d nu(std::sqrt(ws_.hyper.var_intercept) * rng.normal(), std::sqrt(ws_.hyper.var_slope) * rng.normal());
  const EssResult res = ess_step(current, loglik(current), Eigen::VectorXd::Zero(2), nu, loglik, rng);
  note_shrinks(res.shrinks);
  const double d0 = res.state[0] - current[0];
  const double d1 = res.state[1] - current[1];
  if (d0 == 0.0 && d1 == 0.0) return;
  values_[b] = shifted(res.state);
  state_.intercepts[block] = res.state[0];
  state_.slopes[block] = res.state[1];
  if (layout.sparse()) {
    state_.irf_grid[b] = ws_.inducing.extend(values_[b]);
  } else {
    const Eigen::Map<const Eigen::VectorXd> nodes(ws_.grid.nodes().data(), ws_.grid.size());
    state_.irf_grid[b].array() += d0 + d1 * nodes.array();
  }
  scatter_block(block);
}

int Chain::sample_translation(Rng& rng) {
  const auto& layout = ws_.layout;
  const int n = layout.n_respondents();
  const int points = ws_.grid.size();
  const double h = ws_.grid.spacing();
  const Eigen::VectorXd u = ws_.time_factor.whiten(Eigen::VectorXd::Ones(layout.n_periods()));
  const double var_b0 = ws_.hyper.var_intercept;

  // log p(delta) = -a delta^2 / 2 + lin delta + const along x -> x + delta,
  // beta_0 -> beta_0 - beta_1 delta.
  double a = static_cast<double>(n) * u.squaredNorm();
  double lin = 0.0;
  for (int i = 0; i < n; ++i) lin -= ws_.time_factor.whiten(state_.traits.row(i).transpose()).dot(u);
  for (int b = 0; b < layout.n_blocks(); ++b) {
    a += state_.slopes[b] * state_.slopes[b] / var_b0;
    lin += state_.intercepts[b] * state_.slopes[b] / var_b0;
  }
  const int k_min = -state_.trait_nodes.minCoeff();
  const int k_max = points - 1 - state_.trait_nodes.maxCoeff();
  std::vector<double> logw(static_cast<std::size_t>(k_max - k_min + 1));
  for (int k = k_min; k <= k_max; ++k) {
    const double d = k * h;
    logw[static_cast<std::size_t>(k - k_min)] = -0.5 * a * d * d + lin * d;
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (auto& w : logw) total += (w = std::exp(w - top));
  double target = rng.uniform() * total;
  int k = k_max;
  for (int c = k_min; c <= k_max; ++c) {
    target -= logw[static_cast<std::size_t>(c - k_min)];
    if (target < 0.0) {
      k = c;
      break;
    }
  }
  if (k != 0) shift_traits(k);
  return k;
}

void Chain::shift_traits(int k) {
  const auto& layout = ws_.layout;
  const double delta = ws_.grid[k > 0 ? k : 0] - ws_.grid[k > 0 ? 0 : -k];
  const int points = ws_.grid.size();
  state_.trait_nodes.array() += k;
  for (Eigen::Index e = 0; e < state_.traits.size(); ++e) state_.traits.data()[e] = ws_.grid[state_.trait_nodes.data()[e]];
  for (auto& loc : locations_) {
    for (auto& node : loc.nodes) node += k;
    for (Eigen::Index s = 0; s < loc.x.size(); ++s) loc.x[s] = ws_.grid[loc.nodes[static_cast<std::size_t>(s)]];
    loc.white_x = loc.factor.whiten(loc.x);
  }
  for (int b = 0; b < layout.n_blocks(); ++b) {
    state_.intercepts[b] -= state_.slopes[b] * delta;
    // f*(x) -> f*(x - delta); the end nodes repeat the nearest carried value.
    auto& f = state_.irf_grid[static_cast<std::size_t>(b)];
    const Eigen::VectorXd old = f;
    for (int g = 0; g < points; ++g) f[g] = old[std::clamp(g - k, 0, points - 1)];
  }
}

void Chain::sample_threshold_shift(int set, Rng& rng) {
  const auto& layout = ws_.layout;
  auto& ts = state_.thresholds[static_cast<std::size_t>(set)];
  const auto& blocks = layout.set_blocks(set);
  const double var_b1 = ws_.hyper.var_first_threshold;
  const double var_b0 = ws_.hyper.var_intercept;
  double precision = 1.0 / var_b1 + static_cast<double>(blocks.size()) / var_b0;
  double lin = -ts.first / var_b1;
  for (int b : blocks) lin -= state_.intercepts[b] / var_b0;
  const double delta = lin / precision + rng.normal() / std::sqrt(precision);

  ts.first += delta;
  cuts_[static_cast<std::size_t>(set)] = reconstruct_thresholds(ts, ts.categories());
  for (int b : blocks) {
    const auto bi = static_cast<std::size_t>(b);
    state_.intercepts[b] += delta;
    values_[bi].array() += delta;
    state_.irf_grid[bi].array() += delta;
    state_.irf_at_traits[bi].array() += delta;
  }
}

double Chain::threshold_loglik(int set, const ThresholdSet& ts) const {
  const auto cuts = reconstruct_thresholds(ts, ts.categories());
  double ll = 0.0;
  for (int b : ws_.layout.set_blocks(set)) {
    const auto& f = ws_.layout.sparse() ? state_.irf_grid[static_cast<std::size_t>(b)] : values_[static_cast<std::size_t>(b)];
    ll += tally_loglik(b, f, cuts);
  }
  return ll;
}

void Chain::sample_thresholds(int set, Rng& rng) {
  const auto s = static_cast<std::size_t>(set);
  const Eigen::VectorXd current = to_vector(state_.thresholds[s]);
  Eigen::VectorXd nu(current.size());
  nu[0] = std::sqrt(ws_.hyper.var_first_threshold) * rng.normal();
  for (Eigen::Index l = 1; l < nu.size(); ++l) nu[l] = std::sqrt(ws_.hyper.var_log_padding) * rng.normal();
  auto loglik = [&](const Eigen::VectorXd& v) { return threshold_loglik(set, to_threshold_set(v)); };
  const EssResult res = ess_step(current, loglik(current), Eigen::VectorXd::Zero(current.size()), nu, loglik, rng);
  note_shrinks(res.shrinks);
  state_.thresholds[s] = to_threshold_set(res.state);
  cuts_[s] = reconstruct_thresholds(state_.thresholds[s], state_.thresholds[s].categories());
}

void Chain::set_traits(const Eigen::MatrixXd& traits) {
  for (Eigen::Index i = 0; i < traits.rows(); ++i)
    for (Eigen::Index t = 0; t < traits.cols(); ++t) {
      const int node = ws_.grid.nearest(traits(i, t));
      state_.trait_nodes(i, t) = node;
      state_.traits(i, t) = ws_.grid[node];
    }
  rebuild_locations();
}

void Chain::set_irf_values(int block, const Eigen::VectorXd& values) {
  const auto b = static_cast<std::size_t>(block);
  values_[b] = values;
  if (ws_.layout.sparse()) state_.irf_grid[b] = ws_.inducing.extend(values_[b]);
  scatter_block(block);
}

const Eigen::VectorXd& Chain::irf_values(int block) const { return values_[static_cast<std::size_t>(block)]; }

std::vector<int> Chain::irf_value_nodes(int block) const {
  if (ws_.layout.sparse()) return ws_.inducing.nodes;
  return locations_[static_cast<std::size_t>(ws_.layout.group_of_block(block))].nodes;
}

void Chain::set_beta(int block, double intercept, double slope) {
  state_.intercepts[block] = intercept;
  state_.slopes[block] = slope;
}

void Chain::set_thresholds(int set, const ThresholdSet& ts) {
  const auto s = static_cast<std::size_t>(set);
  state_.thresholds[s] = ts;
  cuts_[s] = reconstruct_thresholds(ts, ts.categories());
}

// ---------------------------------------------------------------------------

std::vector<std::string> check_state_invariants(const ChainState& state, const SamplerWorkspace& ws) {
  std::vector<std::string> problems;
  const auto& layout = ws.layout;
  const int periods = layout.n_periods();
  for (Eigen::Index i = 0; i < state.traits.rows(); ++i)
    for (Eigen::Index t = 0; t < state.traits.cols(); ++t) {
      const int node = state.trait_nodes(i, t);
      if (node < 0 || node >= ws.grid.size() || state.traits(i, t) != ws.grid[node])
        problems.push_back("trait (" + std::to_string(i) + ", " + std::to_string(t) + ") is not a grid node");
    }
  for (std::size_t s = 0; s < state.thresholds.size(); ++s) {
    const auto cuts = reconstruct_thresholds(state.thresholds[s], state.thresholds[s].categories());
    for (std::size_t c = 2; c + 1 < cuts.size(); ++c)
      if (!(cuts[c] > cuts[c - 1]) || !std::isfinite(cuts[c]))
        problems.push_back("threshold set " + std::to_string(s) + " is not strictly increasing");
  }
  for (int b = 0; b < layout.n_blocks(); ++b) {
    const auto bi = static_cast<std::size_t>(b);
    if (state.irf_grid[bi].size() != ws.grid.size()) {
      problems.push_back("f* of block " + std::to_string(b) + " has the wrong length");
      continue;
    }
    const auto& entries = layout.group_entries(layout.group_of_block(b));
    for (std::size_t m = 0; m < entries.size(); ++m) {
      const int node = state.trait_nodes(entries[m] / periods, entries[m] % periods);
      // Coupled shifts of f and f* may differ by rounding.
      const double f = state.irf_at_traits[bi][static_cast<Eigen::Index>(m)], g = state.irf_grid[bi][node];
      if (!(std::abs(f - g) <= 1e-12 * (1.0 + std::abs(g)))) {
        problems.push_back("f of block " + std::to_string(b) + " differs from its f* lookup");
        break;
      }
    }
  }
  return problems;
}

PosteriorSamples run(const ResponseDataset& dataset, const HyperParams& hyper, const SamplerConfig& config,
                     const std::function<void(int, int)>& progress) {
  const auto issues = validate_dataset(dataset);
  if (!issues.empty()) {
    std::string msg = "dataset failed validation (" + std::to_string(issues.size()) + " issue(s)): " + issues.front().message;
    throw DataError(msg);
  }
  hyper.validate();
  config.validate();
  const SamplerWorkspace ws(dataset, hyper);

  PosteriorSamples out;
  out.shape = ws.layout.shape();
  out.chains.resize(static_cast<std::size_t>(config.n_chains));
  out.stats.resize(static_cast<std::size_t>(config.n_chains));
  out.burn_in = config.burn_in;
  out.n_kept = config.kept_per_chain();
  out.thin = config.thin;
  out.seed = config.seed;

  const int chain_workers = std::min(config.threads, config.n_chains);
  const int inner_workers = std::max(1, config.threads / config.n_chains);
  parallel_for(static_cast<std::size_t>(config.n_chains), chain_workers, [&](std::size_t c) {
    const auto start = std::chrono::steady_clock::now();
    Chain chain(ws, static_cast<int>(c), config.seed, inner_workers);
    auto& draws = out.chains[c];
    draws.reserve(static_cast<std::size_t>(out.n_kept));
    int k = 0;
    try {
      chain.initialize();
      for (k = 1; k <= config.burn_in + config.n_iterations; ++k) {
        chain.iterate();
        if (k > config.burn_in && (k - config.burn_in) % config.thin == 0) {
          const auto& s = chain.state();
          draws.push_back(Draw{k, s.traits, s.irf_grid, s.slopes, s.intercepts, s.thresholds});
        }
        if (progress) progress(static_cast<int>(c), k);
      }
    } catch (const NumericalError& e) {
      throw NumericalError("chain " + std::to_string(c + 1) + ", iteration " + std::to_string(k) + ": " + e.what());
    }
    out.stats[c].max_shrinks = chain.max_shrinks();
    out.stats[c].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  return out;
}

}  // namespace gdgpirt
