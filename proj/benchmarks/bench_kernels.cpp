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

#include "gdgpirt/kernels.hpp"
#include "gdgpirt/rng.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using namespace gdgpirt;

std::vector<double> random_points(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = rng.normal();
  return x;
}

void BM_RbfGram(benchmark::State& state) {
  const auto x = random_points(static_cast<int>(state.range(0)), 1);
  const auto spec = KernelSpec::rbf(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(gram(x, spec));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RbfGram)->RangeMultiplier(4)->Range(16, 1024)->Complexity(benchmark::oNSquared);

void BM_StableCholesky(benchmark::State& state) {
  const auto x = random_points(static_cast<int>(state.range(0)), 2);
  KernelSpec spec = KernelSpec::rbf(1.0);
  spec.jitter = 0.0;
  const Eigen::MatrixXd k = gram(x, spec);
  for (auto _ : state) benchmark::DoNotOptimize(stable_cholesky(k, 1e-6, "bench"));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_StableCholesky)->RangeMultiplier(4)->Range(16, 1024)->Complexity(benchmark::oNCubed);

void BM_GpConditionalOnGrid(benchmark::State& state) {
  const auto x = random_points(static_cast<int>(state.range(0)), 3);
  const auto f = random_points(static_cast<int>(state.range(0)), 4);
  std::vector<double> grid(500);
  for (int k = 0; k < 500; ++k) grid[static_cast<std::size_t>(k)] = -5.0 + 10.0 * k / 499.0;
  const auto spec = KernelSpec::rbf(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(gp_conditional_mean(x, f, grid, spec, AffineMean{0.5, 0.1}));
}
BENCHMARK(BM_GpConditionalOnGrid)->Arg(50)->Arg(500);

void BM_LowRankRootOfGridGram(benchmark::State& state) {
  std::vector<double> grid(static_cast<std::size_t>(state.range(0)));
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = -5.0 + 10.0 * double(k) / double(grid.size() - 1);
  KernelSpec spec = KernelSpec::rbf(1.0);
  spec.jitter = 0.0;
  const Eigen::MatrixXd k = gram(grid, spec);
  for (auto _ : state) benchmark::DoNotOptimize(low_rank_root(k));
}
BENCHMARK(BM_LowRankRootOfGridGram)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace
