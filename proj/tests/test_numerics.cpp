#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fedekd/numerics.hpp"
#include "fedekd/rng.hpp"

using namespace fedekd;

namespace {

std::vector<double> random_probs(SplitMix64& rng, std::size_t c) {
  std::vector<double> z(c);
  for (auto& x : z) x = 3.0 * rng.normal();
  return softmax_row(z);
}

}  // namespace

TEST(Softmax, Examples) {
  auto a = softmax_row(std::vector<double>{0.0, 0.0});
  EXPECT_DOUBLE_EQ(a[0], 0.5);
  EXPECT_DOUBLE_EQ(a[1], 0.5);

  auto b = softmax_row(std::vector<double>{1000.0, 0.0});
  EXPECT_NEAR(b[0], 1.0, 1e-15);
  EXPECT_GE(b[1], 0.0);
  EXPECT_TRUE(std::isfinite(b[1]));

  auto c = softmax_row(std::vector<double>{std::log(1.0), std::log(3.0)});
  EXPECT_NEAR(c[0], 0.25, 1e-15);
  EXPECT_NEAR(c[1], 0.75, 1e-15);
}

TEST(Softmax, RejectsNonFinite) {
  Matrix m(1, 2);
  m(0, 1) = NAN;
  EXPECT_THROW(softmax_logsoftmax(m), std::invalid_argument);
  EXPECT_THROW(softmax_row(std::vector<double>{INFINITY, 0.0}), std::invalid_argument);
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  SplitMix64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const std::size_t c = 2 + rng.below(9);
    Matrix z(4, c), shifted(4, c);
    for (std::size_t r = 0; r < 4; ++r) {
      const double k = rng.uniform(-50.0, 50.0);
      for (std::size_t j = 0; j < c; ++j) {
        z(r, j) = 5.0 * rng.normal();
        shifted(r, j) = z(r, j) + k;
      }
    }
    const auto a = softmax_logsoftmax(z);
    const auto b = softmax_logsoftmax(shifted);
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        s += a.probs(r, j);
        EXPECT_NEAR(a.probs(r, j), b.probs(r, j), 1e-12);
        EXPECT_NEAR(std::exp(a.logprobs(r, j)), a.probs(r, j), 1e-12);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Entropy, Examples) {
  EXPECT_DOUBLE_EQ(entropy(std::vector<double>{1.0, 0.0, 0.0}), 0.0);
  EXPECT_NEAR(entropy(std::vector<double>(4, 0.25)), 1.386294, 1e-6);
  EXPECT_NEAR(entropy(std::vector<double>{0.9, 0.1}), -0.9 * std::log(0.9) - 0.1 * std::log(0.1), 1e-15);
  EXPECT_NEAR(entropy(std::vector<double>{0.9, 0.1}), 0.325083, 1e-6);
  EXPECT_THROW(entropy(std::vector<double>{1.1, -0.1}), std::invalid_argument);
}

TEST(Entropy, BoundedByLogC) {
  SplitMix64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const std::size_t c = 2 + rng.below(10);
    const auto p = random_probs(rng, c);
    const double h = entropy(p);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(static_cast<double>(c)) + 1e-12);
  }
}

TEST(KL, Examples) {
  const std::vector<double> p{0.9, 0.1}, q{0.1, 0.9};
  EXPECT_DOUBLE_EQ(kl_divergence(p, p), 0.0);
  EXPECT_NEAR(kl_divergence(p, q, true), 0.8 * std::log(9.0), 1e-12);
  EXPECT_NEAR(kl_divergence(p, q, true), 1.757780, 1e-6);
  EXPECT_THROW(kl_divergence(p, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(KL, NonNegativeAndSymmetricVariantExact) {
  SplitMix64 rng(3);
  for (int t = 0; t < 500; ++t) {
    const std::size_t c = 2 + rng.below(8);
    const auto p = random_probs(rng, c);
    const auto q = random_probs(rng, c);
    EXPECT_GE(kl_divergence(p, q), 0.0);
    EXPECT_EQ(kl_divergence(p, q, true), kl_divergence(q, p, true));
    EXPECT_NEAR(kl_divergence(p, p), 0.0, 1e-14);
  }
}

TEST(CrossEntropy, Example) {
  Matrix z(1, 2);
  const std::vector<int> y{0};
  const auto r = cross_entropy_loss(z, y);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(r.grad_wrt_output(0, 0), -0.5, 1e-15);
  EXPECT_NEAR(r.grad_wrt_output(0, 1), 0.5, 1e-15);
  EXPECT_THROW(cross_entropy_loss(z, std::vector<int>{2}), std::out_of_range);
}

TEST(SquaredError, PerfectFitIsZero) {
  Matrix f(3, 1, std::vector<double>{1.0, -2.0, 0.5});
  const std::vector<double> y{1.0, -2.0, 0.5};
  const auto r = squared_error_loss(f, y);
  EXPECT_EQ(r.loss, 0.0);
  for (double g : r.grad_wrt_output.data()) EXPECT_EQ(g, 0.0);
}

TEST(LossGradients, MatchFiniteDifferences) {
  SplitMix64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(6);
    const std::size_t c = 2 + rng.below(5);
    std::vector<int> y(n);
    for (auto& v : y) v = static_cast<int>(rng.below(c));
    std::vector<double> z0(n * c);
    for (auto& v : z0) v = 2.0 * rng.normal();
    const auto analytic = cross_entropy_loss(Matrix(n, c, z0), y).grad_wrt_output.data();
    const auto numeric = finite_diff_grad(
        [&](std::span<const double> z) {
          return cross_entropy_loss(Matrix(n, c, std::vector<double>(z.begin(), z.end())), y).loss;
        },
        z0);
    EXPECT_LE(max_relative_error(analytic, numeric, 1e-6), 1e-5);

    std::vector<double> f0(n), target(n);
    for (std::size_t i = 0; i < n; ++i) {
      f0[i] = rng.normal();
      target[i] = rng.normal();
    }
    const auto sa = squared_error_loss(Matrix(n, 1, f0), target).grad_wrt_output.data();
    const auto sn = finite_diff_grad(
        [&](std::span<const double> f) {
          return squared_error_loss(Matrix(n, 1, std::vector<double>(f.begin(), f.end())), target).loss;
        },
        f0);
    EXPECT_LE(max_relative_error(sa, sn, 1e-6), 1e-5);
  }
}

TEST(FiniteDiff, Examples) {
  const std::vector<double> theta{3.0};
  const auto g = finite_diff_grad([](std::span<const double> x) { return x[0] * x[0]; }, theta);
  EXPECT_NEAR(g[0], 6.0, 1e-6);
  const auto z = finite_diff_grad([](std::span<const double>) { return 4.0; }, std::vector<double>{1.0, 2.0});
  EXPECT_EQ(z, (std::vector<double>{0.0, 0.0}));
  EXPECT_THROW(finite_diff_grad([](std::span<const double>) { return NAN; }, theta), std::domain_error);
}

TEST(Adam, ZeroGradientLeavesParams) {
  auto st = AdamState::zeros(3, 1e-3);
  std::vector<double> p{1.0, -2.0, 3.0};
  const auto before = p;
  adam_step(st, p, std::vector<double>(3, 0.0));
  EXPECT_EQ(p, before);
  EXPECT_EQ(st.step, 1u);
  EXPECT_THROW(adam_step(st, p, std::vector<double>(2, 0.0)), std::invalid_argument);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // Bias correction makes the first update lr * g / (|g| + eps').
  auto st = AdamState::zeros(2, 0.01);
  std::vector<double> p{0.0, 0.0};
  adam_step(st, p, std::vector<double>{4.0, -0.5});
  EXPECT_NEAR(p[0], -0.01, 1e-9);
  EXPECT_NEAR(p[1], 0.01, 1e-9);
}

TEST(Adam, MinimizesQuadratic) {
  auto st = AdamState::zeros(2, 0.05);
  std::vector<double> p{3.0, -4.0};
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> g{2.0 * (p[0] - 1.0), 2.0 * (p[1] + 2.0)};
    adam_step(st, p, g);
  }
  EXPECT_NEAR(p[0], 1.0, 1e-3);
  EXPECT_NEAR(p[1], -2.0, 1e-3);
}

TEST(Matrix, GatherAndFromRows) {
  auto m = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  const std::vector<std::size_t> idx{2, 0};
  auto g = m.gather_rows(idx);
  EXPECT_EQ(g, Matrix::from_rows({{5, 6}, {1, 2}}));
  EXPECT_THROW(Matrix::from_rows({{1, 2}, {3}}), std::invalid_argument);
  const std::vector<std::size_t> bad{3};
  EXPECT_THROW(m.gather_rows(bad), std::out_of_range);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1.0}), std::invalid_argument);
}
