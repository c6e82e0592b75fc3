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
#include "gdgpirt/ordinal.hpp"
#include "gdgpirt/synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>
#include <vector>

namespace gdgpirt {
namespace {

const DenseGrid& grid() {
  static const DenseGrid g(-5.0, 5.0, 500);
  return g;
}

TEST(Generate, DefaultDesignIsCompleteAndValid) {
  const auto sim = generate(SimConfig{}, grid());
  EXPECT_EQ(sim.dataset.size(), 10000u);
  EXPECT_TRUE(validate_dataset(sim.dataset).empty());
  EXPECT_EQ(sim.truth.true_traits.rows(), 100);
  EXPECT_EQ(sim.truth.true_traits.cols(), 10);
  EXPECT_EQ(sim.truth.true_irf_grid.size(), 100u);
  EXPECT_EQ(sim.truth.true_thresholds.size(), 10u);
  EXPECT_EQ(sim.truth.true_slopes_intercepts.rows(), 100);
}

TEST(Generate, SingleCell) {
  SimConfig cfg;
  cfg.n = cfg.m = cfg.T = 1;
  const auto sim = generate(cfg, grid());
  ASSERT_EQ(sim.dataset.size(), 1u);
  EXPECT_TRUE(validate_dataset(sim.dataset).empty());
}

TEST(Generate, DeterministicPerSeed) {
  SimConfig cfg;
  cfg.n = 20;
  cfg.C = 4;
  const auto a = generate(cfg, grid());
  const auto b = generate(cfg, grid());
  EXPECT_EQ(a.dataset, b.dataset);
  EXPECT_EQ(a.truth.true_traits, b.truth.true_traits);
  cfg.seed = 2;
  const auto c = generate(cfg, grid());
  EXPECT_NE(a.dataset, c.dataset);
}

TEST(Generate, TraitMarginalVarianceIsOne) {
  SimConfig cfg;
  cfg.n = 10000;
  cfg.m = 1;
  const auto sim = generate(cfg, grid());
  for (int t = 0; t < cfg.T; ++t) {
    const Eigen::VectorXd x = sim.truth.true_traits.col(t);
    const double mean = x.mean();
    const double var = (x.array() - mean).square().sum() / (static_cast<double>(cfg.n) - 1.0);
    EXPECT_NEAR(mean, 0.0, 0.05);
    EXPECT_NEAR(var, 1.0, 0.05) << "period " << t + 1;
  }
}

TEST(Generate, ThresholdsSortedWithinBounds) {
  SimConfig cfg;
  cfg.n = 10;
  cfg.m = 30;
  cfg.C = 5;
  const auto sim = generate(cfg, grid());
  for (const auto& cuts : sim.truth.true_thresholds) {
    ASSERT_EQ(cuts.size(), 4u);
    EXPECT_TRUE(std::is_sorted(cuts.begin(), cuts.end()));
    EXPECT_GE(cuts.front(), -2.0);
    EXPECT_LE(cuts.back(), 2.0);
    EXPECT_EQ(std::adjacent_find(cuts.begin(), cuts.end()), cuts.end());
  }
}

TEST(Generate, BinaryResponsesRoughlyBalanced) {
  SimConfig cfg;
  cfg.n = 200;
  cfg.m = 20;
  cfg.T = 5;
  double total = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    const auto sim = generate(cfg, grid());
    for (const auto& o : sim.dataset.observations) total += o.response;
  }
  // Intercepts, slopes and thresholds are symmetric about zero, so the mean
  // binary response is 1.5 in expectation.
  EXPECT_NEAR(total / (5.0 * 200 * 20 * 5), 1.5, 0.05);
}

TEST(Generate, AllCategoriesAppear) {
  SimConfig cfg;
  cfg.C = 5;
  const auto sim = generate(cfg, grid());
  std::set<int> seen;
  for (const auto& o : sim.dataset.observations) seen.insert(o.response);
  EXPECT_EQ(seen, (std::set<int>{1, 2, 3, 4, 5}));
}

TEST(Generate, ResponsesFollowTruth) {
  SimConfig cfg;
  cfg.n = 300;
  cfg.m = 4;
  cfg.T = 2;
  cfg.C = 3;
  const auto sim = generate(cfg, grid());
  // Empirical category frequencies against the average true probabilities.
  std::vector<double> observed(3, 0.0), expected(3, 0.0);
  for (const auto& o : sim.dataset.observations) {
    const int block = o.item * cfg.T + o.period;
    const double f = interpolate_on_grid(grid(), sim.truth.true_irf_grid[static_cast<std::size_t>(block)],
                                         sim.truth.true_traits(o.respondent, o.period));
    std::vector<double> cuts{-INFINITY};
    for (double c : sim.truth.true_thresholds[static_cast<std::size_t>(o.item)]) cuts.push_back(c);
    cuts.push_back(INFINITY);
    const auto p = category_probs(f, cuts);
    for (int c = 0; c < 3; ++c) expected[static_cast<std::size_t>(c)] += p[static_cast<std::size_t>(c)];
    observed[static_cast<std::size_t>(o.response - 1)] += 1.0;
  }
  for (int c = 0; c < 3; ++c) {
    const double e = expected[static_cast<std::size_t>(c)];
    EXPECT_NEAR(observed[static_cast<std::size_t>(c)], e, 4.0 * std::sqrt(e)) << "category " << c + 1;
  }
}

TEST(Generate, SharedItemsUseOneBlockPerItem) {
  SimConfig cfg;
  cfg.n = 5;
  cfg.m = 3;
  cfg.T = 4;
  cfg.items_shared = true;
  const auto sim = generate(cfg, grid());
  EXPECT_TRUE(sim.dataset.items_shared_across_time);
  EXPECT_EQ(sim.truth.true_irf_grid.size(), 3u);
}

TEST(Generate, RejectsInvalidConfig) {
  SimConfig cfg;
  cfg.C = 1;
  EXPECT_THROW(generate(cfg, grid()), ConfigError);
  cfg = SimConfig{};
  cfg.n = 0;
  EXPECT_THROW(generate(cfg, grid()), ConfigError);
  cfg = SimConfig{};
  cfg.threshold_low = 1.0;
  cfg.threshold_high = -1.0;
  EXPECT_THROW(generate(cfg, grid()), ConfigError);
}

TEST(TrainTestSplit, PartitionIsDisjointAndReproducible) {
  const auto sim = generate(SimConfig{}, grid());
  const auto [train, test] = train_test_split(sim.dataset, 0.8, 3);
  EXPECT_EQ(train.size(), 8000u);
  EXPECT_EQ(test.size(), 2000u);
  std::set<std::tuple<int, int, int>> keys;
  for (const auto* part : {&train, &test})
    for (const auto& o : part->observations) keys.emplace(o.respondent, o.item, o.period);
  EXPECT_EQ(keys.size(), 10000u);
  const auto again = train_test_split(sim.dataset, 0.8, 3);
  EXPECT_EQ(again.first, train);
  EXPECT_EQ(again.second, test);
  EXPECT_NE(train_test_split(sim.dataset, 0.8, 4).first, train);
  EXPECT_EQ(train.n_respondents, sim.dataset.n_respondents);
  EXPECT_THROW(train_test_split(sim.dataset, 1.0, 3), ConfigError);
}

TEST(InterpolateOnGrid, LinearAndClamped) {
  const DenseGrid g(0.0, 4.0, 5);
  const Eigen::VectorXd v = (Eigen::VectorXd(5) << 0.0, 1.0, 4.0, 9.0, 16.0).finished();
  EXPECT_DOUBLE_EQ(interpolate_on_grid(g, v, 2.0), 4.0);
  EXPECT_DOUBLE_EQ(interpolate_on_grid(g, v, 2.5), 6.5);
  EXPECT_DOUBLE_EQ(interpolate_on_grid(g, v, -3.0), 0.0);
  EXPECT_DOUBLE_EQ(interpolate_on_grid(g, v, 7.0), 16.0);
}

}  // namespace
}  // namespace gdgpirt
