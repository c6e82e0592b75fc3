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

#include "gdgpirt/ess.hpp"
#include "gdgpirt/gibbs.hpp"
#include "gdgpirt/synthetic.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace gdgpirt;

// One Gibbs sweep. Arguments: respondents, items shared across periods, and
// whether the inducing-point path may be used.
void BM_GibbsSweep(benchmark::State& state) {
  SimConfig cfg;
  cfg.n = static_cast<int>(state.range(0));
  cfg.m = 10;
  cfg.T = 10;
  cfg.items_shared = state.range(1) != 0;
  HyperParams hyper;
  if (state.range(2) == 0) hyper.sparse_threshold = 1L << 40;
  const auto sim = generate(cfg, DenseGrid(hyper));
  const SamplerWorkspace ws(sim.dataset, hyper);
  Chain chain(ws, 0, 1);
  chain.initialize();
  for (int k = 0; k < 30; ++k) chain.iterate();
  for (auto _ : state) chain.iterate();
}
BENCHMARK(BM_GibbsSweep)
    ->Args({50, 0, 0})
    ->Args({100, 0, 0})
    ->Args({600, 1, 0})
    ->Args({600, 1, 1})
    ->Unit(benchmark::kMillisecond);

void BM_EssStepGaussian(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  GaussianPrior prior{Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Identity(dim, dim)};
  auto loglik = [](const Eigen::VectorXd& z) { return -0.5 * (z.array() - 1.0).square().sum(); };
  Rng rng(7);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(dim);
  for (auto _ : state) z = ess_step(z, prior, loglik, rng).state;
}
BENCHMARK(BM_EssStepGaussian)->Arg(1)->Arg(10)->Arg(500);

}  // namespace
