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

#include "gdgpirt/error.hpp"
#include "gdgpirt/kernels.hpp"
#include "gdgpirt/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <vector>

namespace gdgpirt {
namespace {

TEST(Rbf, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(rbf(0.0, 0.0, 1.0), 1.0);
  EXPECT_NEAR(rbf(0.0, 1.0, 1.0), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(rbf(0.0, 1.0, 1.0), 0.60653, 1e-5);
  EXPECT_THROW(rbf(0.0, 1.0, 0.0), ConfigError);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 2.0);
  for (int k = 0; k < 1000; ++k) {
    const double a = z(rng), b = z(rng), l = std::abs(z(rng)) + 0.1;
    EXPECT_EQ(rbf(a, b, l), rbf(b, a, l));
    // exp underflows to zero beyond about 38 length scales.
    if (0.5 * std::pow((a - b) / l, 2) < 700.0) {
      EXPECT_GT(rbf(a, b, l), 0.0);
    } else {
      EXPECT_EQ(rbf(a, b, l), 0.0);
    }
    EXPECT_LE(rbf(a, b, l), 1.0);
  }
}

TEST(Matern52, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(matern52(3.0, 3.0, 5.0), 1.0);
  // Independent evaluation of (1 + r + r^2 / 3) exp(-r) with r = sqrt(5) / 5.
  EXPECT_NEAR(matern52(0.0, 1.0, 5.0), 0.9679861199640714, 1e-14);
  EXPECT_LT(matern52(0.0, 5e6, 5.0), 1e-10);
  EXPECT_THROW(matern52(0.0, 1.0, -1.0), ConfigError);
  EXPECT_LT(matern52(0.0, 1e-3, 5.0), 1.0);
}

TEST(Wiener, CumulativeVariance) {
  const std::vector<double> diff{0.25, 0.25};
  EXPECT_DOUBLE_EQ(wiener_cov(1, 1, 1.0, diff), 1.0);
  EXPECT_DOUBLE_EQ(wiener_cov(2, 3, 1.0, diff), 1.25);
  EXPECT_DOUBLE_EQ(wiener_cov(3, 3, 1.0, diff), 1.5);
  EXPECT_THROW(wiener_cov(0, 1, 1.0, diff), ConfigError);
  EXPECT_THROW(wiener_cov(4, 1, 1.0, diff), ConfigError);
}

TEST(Wiener, MonteCarloCovarianceOfRandomWalks) {
  // x_1 ~ N(0, 1), x_t = x_{t-1} + N(0, 0.25); estimate Cov(x_2, x_3).
  std::mt19937_64 rng(99);
  std::normal_distribution<double> z(0.0, 1.0);
  const int paths = 1000000;
  double s2 = 0, s3 = 0, s23 = 0;
  std::vector<double> prod(paths);
  for (int p = 0; p < paths; ++p) {
    const double x1 = z(rng);
    const double x2 = x1 + 0.5 * z(rng);
    const double x3 = x2 + 0.5 * z(rng);
    s2 += x2;
    s3 += x3;
    s23 += x2 * x3;
    prod[static_cast<std::size_t>(p)] = x2 * x3;
  }
  const double n = paths;
  const double cov = s23 / n - (s2 / n) * (s3 / n);
  double var_prod = 0.0;
  for (double v : prod) var_prod += (v - s23 / n) * (v - s23 / n);
  const double se = std::sqrt(var_prod / (n - 1) / n);
  EXPECT_NEAR(cov, wiener_cov(2, 3, 1.0, std::vector<double>{0.25, 0.25}), 3.0 * se);
}

TEST(Gram, SinglePointAndSymmetry) {
  const std::vector<double> one{0.3};
  const auto k1 = gram(one, KernelSpec::rbf(1.0, 1e-6));
  ASSERT_EQ(k1.rows(), 1);
  EXPECT_DOUBLE_EQ(k1(0, 0), 1.0 + 1e-6);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> z(0.0, 1.5);
  std::vector<double> pts(20);
  for (auto& p : pts) p = z(rng);
  const auto k = gram(pts, KernelSpec::rbf(1.0));
  EXPECT_EQ((k - k.transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(gram(std::vector<double>{}, KernelSpec::rbf(1.0)), ConfigError);
}

TEST(Gram, DuplicatedPointsNeedJitter) {
  const std::vector<double> pts{0.5, 0.5, -1.0};
  KernelSpec exact = KernelSpec::rbf(1.0);
  exact.jitter = 0.0;
  const auto k0 = gram(pts, exact);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k0);
  EXPECT_LT(eig.eigenvalues().minCoeff(), 1e-12);
  const auto factor = stable_cholesky(k0, 1e-6, "duplicates");
  EXPECT_TRUE(factor.lower.allFinite());
  EXPECT_GE(factor.jitter, 1e-6);
  const Eigen::MatrixXd rebuilt = factor.lower * factor.lower.transpose();
  Eigen::MatrixXd target = k0;
  target.diagonal().array() += factor.jitter;
  EXPECT_LT((rebuilt - target).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(StableCholesky, EscalatesThenFailsWithContext) {
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 0.0, 0.0, -5e-4;
  const auto f = stable_cholesky(indefinite, 1e-6, "escalate");
  EXPECT_NEAR(f.jitter, 1e-3, 1e-15);

  Eigen::MatrixXd hopeless(2, 2);
  hopeless << 1.0, 0.0, 0.0, -1.0;
  try {
    stable_cholesky(hopeless, 1e-6, "item 3, time 4");
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("item 3, time 4"), std::string::npos);
  }
}

TEST(StableCholesky, SolveWhitenColour) {
  Eigen::MatrixXd a(3, 3);
  a << 4, 1, 0.5, 1, 3, 0.2, 0.5, 0.2, 2;
  const auto f = stable_cholesky(a, 1e-12, "spd");
  const Eigen::Vector3d b(1.0, -2.0, 0.5);
  Eigen::MatrixXd aj = a;
  aj.diagonal().array() += f.jitter;
  EXPECT_LT((aj * f.solve(b) - b).norm(), 1e-12);
  EXPECT_LT((f.colour(f.whiten(b)) - b).norm(), 1e-12);
}

TEST(GpConditional, MatchesPartitionOracleOnRandomInstances) {
  std::mt19937_64 rng(2026);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_int_distribution<int> size(1, 12);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = size(rng), m = size(rng);
    std::vector<double> tx(static_cast<std::size_t>(n)), tf(static_cast<std::size_t>(n)),
        sx(static_cast<std::size_t>(m));
    for (auto& v : tx) v = 2.0 * z(rng);
    for (auto& v : tf) v = z(rng);
    for (auto& v : sx) v = 2.0 * z(rng);
    const AffineMean mean{0.7 * z(rng), z(rng)};
    const double jitter = 1e-4;
    const auto spec = KernelSpec::rbf(1.0, jitter);
    const auto got = gp_conditional(tx, tf, sx, spec, mean);
    const auto want = oracle::partition_conditional(
        tx, tf, sx, [](double a, double b) { return std::exp(-0.5 * (a - b) * (a - b)); }, jitter,
        [&](double x) { return mean(x); });
    EXPECT_LT((got.mean - want.mean).cwiseAbs().maxCoeff(), 1e-8) << "instance " << rep;
    // The oracle adds the jitter to test points too; the library reports the
    // noise-free latent covariance.
    Eigen::MatrixXd want_cov = want.cov;
    want_cov.diagonal().array() -= jitter;
    EXPECT_LT((got.cov - want_cov).cwiseAbs().maxCoeff(), 1e-8) << "instance " << rep;
    const auto mean_only = gp_conditional_mean(tx, tf, sx, spec, mean);
    EXPECT_LT((mean_only - got.mean).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(GpConditional, InterpolatesAtTrainingPoints) {
  const std::vector<double> x{-1.0, 0.0, 0.8, 2.0};
  const std::vector<double> f{0.3, -0.2, 1.1, 0.4};
  const auto post = gp_conditional(x, f, x, KernelSpec::rbf(1.0, 1e-6), AffineMean{0.5, 0.1});
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(post.mean[k], f[static_cast<std::size_t>(k)], 1e-4);
  EXPECT_LT(post.cov.cwiseAbs().maxCoeff(), 1e-4);
}

TEST(GpConditional, EmptyTrainingSetGivesPrior) {
  const std::vector<double> none;
  const std::vector<double> test{-1.0, 0.5};
  const AffineMean mean{2.0, -1.0};
  const auto post = gp_conditional(none, none, test, KernelSpec::rbf(1.0), mean);
  EXPECT_DOUBLE_EQ(post.mean[0], -3.0);
  EXPECT_DOUBLE_EQ(post.mean[1], 0.0);
  EXPECT_DOUBLE_EQ(post.cov(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(post.cov(0, 1), rbf(-1.0, 0.5, 1.0));
  EXPECT_THROW(gp_conditional(test, none, test, KernelSpec::rbf(1.0), mean), ConfigError);
}

TEST(GpConditional, PosteriorVarianceNeverExceedsPrior) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0.0, 2.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> tx(6), tf(6), sx(30);
    for (auto& v : tx) v = z(rng);
    for (auto& v : tf) v = z(rng);
    for (auto& v : sx) v = z(rng);
    const auto post = gp_conditional(tx, tf, sx, KernelSpec::rbf(1.0), AffineMean{});
    for (Eigen::Index k = 0; k < post.cov.rows(); ++k) EXPECT_LE(post.cov(k, k), 1.0 + 1e-10);
  }
}

TEST(LowRankRoot, ReproducesGridGram) {
  std::vector<double> grid(200);
  for (int k = 0; k < 200; ++k) grid[static_cast<std::size_t>(k)] = -5.0 + 10.0 * k / 199.0;
  KernelSpec spec = KernelSpec::rbf(1.0);
  spec.jitter = 0.0;
  const auto k = gram(grid, spec);
  const auto root = low_rank_root(k);
  EXPECT_LT(root.cols(), 200);
  EXPECT_LT((root * root.transpose() - k).cwiseAbs().maxCoeff(), 1e-10);
}

// Sample variance of each period over many prior trajectories.
std::vector<double> per_period_variance(const KernelSpec& spec, int T, int draws, std::uint64_t seed) {
  std::vector<double> t(static_cast<std::size_t>(T));
  for (int k = 0; k < T; ++k) t[static_cast<std::size_t>(k)] = k + 1;
  KernelSpec exact = spec;
  exact.jitter = 0.0;
  const auto f = stable_cholesky(gram(t, exact), 1e-10, "prior");
  Rng rng(seed);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(T), sq = Eigen::VectorXd::Zero(T);
  for (int d = 0; d < draws; ++d) {
    const Eigen::VectorXd x = f.colour(rng.normal_vector(T));
    sum += x;
    sq += x.cwiseProduct(x);
  }
  std::vector<double> out(static_cast<std::size_t>(T));
  for (int k = 0; k < T; ++k) {
    const double m = sum[k] / draws;
    out[static_cast<std::size_t>(k)] = (sq[k] - draws * m * m) / (draws - 1);
  }
  return out;
}

TEST(TimePriors, MaternIsStationary) {
  for (double v : per_period_variance(KernelSpec::matern52(5.0), 10, 10000, 17)) {
    EXPECT_GE(v, 0.95);
    EXPECT_LE(v, 1.05);
  }
}

TEST(TimePriors, WienerVarianceIncreases) {
  const auto v = per_period_variance(KernelSpec::wiener(1.0, 0.1, 10), 10, 10000, 17);
  for (std::size_t k = 1; k < v.size(); ++k) EXPECT_GT(v[k], v[k - 1]);
}

TEST(TimePriors, StaticKernelIsIdentity) {
  const auto s = KernelSpec::identity();
  EXPECT_DOUBLE_EQ(s(3.0, 3.0), 1.0);
  EXPECT_DOUBLE_EQ(s(3.0, 4.0), 0.0);
}

}  // namespace
}  // namespace gdgpirt
