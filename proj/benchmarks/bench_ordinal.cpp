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

#include "gdgpirt/ordinal.hpp"
#include "gdgpirt/rng.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using namespace gdgpirt;

std::vector<double> cuts_for(int categories) {
  ThresholdSet set{-1.0, std::vector<double>(static_cast<std::size_t>(categories - 2), -0.5)};
  return reconstruct_thresholds(set, categories);
}

void BM_CategoryLogprob(benchmark::State& state) {
  const auto cuts = cuts_for(static_cast<int>(state.range(0)));
  Rng rng(5);
  std::vector<double> f(1024);
  for (auto& v : f) v = 2.0 * rng.normal();
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(category_logprob(f[k & 1023], cuts, 1 + static_cast<int>(k % (cuts.size() - 1))));
    ++k;
  }
}
BENCHMARK(BM_CategoryLogprob)->Arg(2)->Arg(5);

void BM_LoglikItemBlock(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto cuts = cuts_for(5);
  Rng rng(6);
  std::vector<double> f(static_cast<std::size_t>(n));
  std::vector<int> y(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    f[static_cast<std::size_t>(k)] = rng.normal();
    y[static_cast<std::size_t>(k)] = 1 + static_cast<int>(rng.uniform() * 5);
  }
  for (auto _ : state) benchmark::DoNotOptimize(loglik_item_block(f, y, cuts));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_LoglikItemBlock)->Arg(50)->Arg(6000);

void BM_Icc(benchmark::State& state) {
  const auto cuts = cuts_for(5);
  double f = -3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(icc(f, cuts));
    f = f > 3.0 ? -3.0 : f + 0.01;
  }
}
BENCHMARK(BM_Icc);

}  // namespace
