#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "fedekd/data.hpp"
#include "fedekd/rng.hpp"

using namespace fedekd;

namespace {

std::vector<std::size_t> flatten_sorted(const ClientIndices& parts) {
  std::vector<std::size_t> all;
  for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

double label_tv(const Dataset& ds, const std::vector<std::size_t>& rows) {
  std::vector<double> global(ds.num_classes, 0.0), local(ds.num_classes, 0.0);
  for (int y : ds.labels) global[static_cast<std::size_t>(y)] += 1.0 / static_cast<double>(ds.size());
  for (auto r : rows) local[static_cast<std::size_t>(ds.labels[r])] += 1.0 / static_cast<double>(rows.size());
  double tv = 0.0;
  for (std::size_t c = 0; c < ds.num_classes; ++c) tv += std::abs(global[c] - local[c]);
  return 0.5 * tv;
}

Dataset classification(std::uint64_t seed, std::size_t n = 3000) {
  SyntheticConfig c;
  c.n = n;
  c.seed = seed;
  return gen_synthetic(c);
}

}  // namespace

TEST(Synthetic, SameSeedSameData) {
  const auto a = classification(3);
  const auto b = classification(3);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.inputs, classification(4).inputs);
  a.validate();
}

TEST(Synthetic, ClassCountsBalanced) {
  // Labels are uniform: each count is Binomial(n, 1/C).
  const double n = 3000, c = 4;
  const double sigma = std::sqrt(n * (1 / c) * (1 - 1 / c));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ds = classification(seed);
    std::vector<double> counts(4, 0.0);
    for (int y : ds.labels) counts[static_cast<std::size_t>(y)] += 1;
    for (double k : counts) EXPECT_LE(std::abs(k - n / c), 3 * sigma) << "seed " << seed;
  }
}

TEST(Synthetic, NoiselessRegressionIsExactlyLinear) {
  SyntheticConfig c;
  c.task = TaskKind::regression;
  c.n = 200;
  c.dims = 5;
  c.noise = 0.0;
  c.seed = 11;
  const auto ds = gen_synthetic(c);
  const auto truth = regression_truth(c);
  // Least squares on [x, 1] through the normal equations.
  const std::size_t p = c.dims + 1;
  std::vector<double> a(p * p, 0.0), rhs(p, 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<double> z(ds.inputs.row(i).begin(), ds.inputs.row(i).end());
    z.push_back(1.0);
    for (std::size_t r = 0; r < p; ++r) {
      rhs[r] += z[r] * ds.values[i];
      for (std::size_t s = 0; s < p; ++s) a[r * p + s] += z[r] * z[s];
    }
  }
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < p; ++r) {
      if (std::abs(a[r * p + col]) > std::abs(a[piv * p + col])) piv = r;
    }
    for (std::size_t s = 0; s < p; ++s) std::swap(a[col * p + s], a[piv * p + s]);
    std::swap(rhs[col], rhs[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const double f = a[r * p + col] / a[col * p + col];
      for (std::size_t s = 0; s < p; ++s) a[r * p + s] -= f * a[col * p + s];
      rhs[r] -= f * rhs[col];
    }
  }
  for (std::size_t j = 0; j < c.dims; ++j) EXPECT_NEAR(rhs[j] / a[j * p + j], truth.weights[j], 1e-6);
  EXPECT_NEAR(rhs[c.dims] / a[c.dims * p + c.dims], truth.bias, 1e-6);
}

TEST(LargestRemainder, SumsAndTies) {
  const std::vector<double> p{0.5, 0.25, 0.25};
  EXPECT_EQ(largest_remainder_counts(10, p), (std::vector<std::size_t>{5, 3, 2}));
  const std::vector<double> q{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto c = largest_remainder_counts(100, q);
  EXPECT_EQ(std::accumulate(c.begin(), c.end(), std::size_t{0}), 100u);
  SplitMix64 rng(1);
  for (int t = 0; t < 500; ++t) {
    const auto props = dirichlet(rng, 1 + rng.below(10), 0.3);
    const std::size_t total = rng.below(1000);
    const auto counts = largest_remainder_counts(total, props);
    EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::size_t{0}), total);
    for (std::size_t k = 0; k < props.size(); ++k) {
      EXPECT_LE(std::abs(static_cast<double>(counts[k]) - total * props[k]), 1.0 + 1e-9);
    }
  }
}

TEST(LabelPartition, SingleClientGetsEverything) {
  const auto ds = classification(1, 500);
  PartitionConfig cfg;
  cfg.num_clients = 1;
  const auto parts = dirichlet_label_partition(ds, cfg);
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(parts[0], iota_n(500));
}

TEST(LabelPartition, ExhaustiveDisjointSortedAndDeterministic) {
  const auto ds = classification(2);
  for (double alpha : {0.01, 0.1, 1.0, 100.0}) {
    PartitionConfig cfg;
    cfg.alpha = alpha;
    cfg.min_client_samples = 10;
    cfg.seed = 77;
    const auto parts = dirichlet_label_partition(ds, cfg);
    EXPECT_EQ(flatten_sorted(parts), iota_n(ds.size()));
    for (const auto& p : parts) {
      EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
      EXPECT_GE(p.size(), 10u);
    }
    EXPECT_EQ(parts, dirichlet_label_partition(ds, cfg));
  }
}

TEST(LabelPartition, HugeAlphaMatchesGlobalDistribution) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ds = classification(seed);
    PartitionConfig cfg;
    cfg.alpha = 1e6;
    cfg.seed = seed;
    for (const auto& p : dirichlet_label_partition(ds, cfg)) EXPECT_LE(label_tv(ds, p), 0.05);
  }
}

TEST(LabelPartition, SmallerAlphaMeansLargerMaxClassShare) {
  auto mean_max_share = [](double alpha) {
    double total = 0.0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto ds = classification(seed, 1200);
      PartitionConfig cfg;
      cfg.alpha = alpha;
      cfg.seed = seed + 1000;
      for (const auto& p : dirichlet_label_partition(ds, cfg)) {
        std::vector<double> c(ds.num_classes, 0.0);
        for (auto r : p) c[static_cast<std::size_t>(ds.labels[r])] += 1.0;
        total += *std::max_element(c.begin(), c.end()) / static_cast<double>(p.size());
        ++count;
      }
    }
    return total / count;
  };
  EXPECT_GT(mean_max_share(0.1), mean_max_share(10.0));
}

TEST(LabelPartition, Errors) {
  SyntheticConfig rc;
  rc.task = TaskKind::regression;
  rc.n = 100;
  PartitionConfig cfg;
  EXPECT_THROW(dirichlet_label_partition(gen_synthetic(rc), cfg), std::invalid_argument);
  const auto ds = classification(1, 30);
  cfg.min_client_samples = 10;
  EXPECT_THROW(dirichlet_label_partition(ds, cfg), std::invalid_argument);
  cfg = PartitionConfig{};
  cfg.alpha = 0.0;
  EXPECT_THROW(dirichlet_label_partition(ds, cfg), std::invalid_argument);
}

TEST(KMeans, SseNonIncreasing) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SyntheticConfig c;
    c.task = TaskKind::regression;
    c.n = 600;
    c.seed = seed;
    const auto ds = gen_synthetic(c);
    const auto km = kmeans(ds.inputs, 5, seed);
    ASSERT_GE(km.sse_history.size(), 2u);
    for (std::size_t i = 1; i < km.sse_history.size(); ++i) {
      EXPECT_LE(km.sse_history[i], km.sse_history[i - 1] * (1 + 1e-12));
    }
  }
}

TEST(KMeans, RecoversSeparatedClusters) {
  Matrix pts(40, 2);
  SplitMix64 rng(3);
  for (std::size_t i = 0; i < 40; ++i) {
    const double cx = i < 20 ? -50.0 : 50.0;
    pts(i, 0) = cx + rng.normal();
    pts(i, 1) = rng.normal();
  }
  const auto km = kmeans(pts, 2, 1);
  for (std::size_t i = 1; i < 20; ++i) EXPECT_EQ(km.assignment[i], km.assignment[0]);
  for (std::size_t i = 21; i < 40; ++i) EXPECT_EQ(km.assignment[i], km.assignment[20]);
  EXPECT_NE(km.assignment[0], km.assignment[20]);
  EXPECT_THROW(kmeans(pts, 41, 1), std::invalid_argument);
}

TEST(KMeans, DuplicatePointsDoNotLeaveEmptyClusters) {
  Matrix pts(10, 1, 3.0);
  pts(9, 0) = 4.0;
  const auto km = kmeans(pts, 3, 5);
  EXPECT_TRUE(km.centroids.all_finite());
  EXPECT_EQ(km.assignment.size(), 10u);
}

TEST(CovariatePartition, OneBinIsPlainDirichletSplit) {
  SyntheticConfig c;
  c.task = TaskKind::regression;
  c.n = 500;
  const auto ds = gen_synthetic(c);
  PartitionConfig cfg;
  cfg.bins = 1;
  cfg.mode = PartitionMode::covariate_shift;
  const auto parts = covariate_partition(ds, cfg);
  EXPECT_EQ(flatten_sorted(parts), iota_n(500));
}

TEST(CovariatePartition, SeparatedClustersConcentrateOnOneClient) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Dataset ds;
    ds.task = TaskKind::regression;
    ds.inputs = Matrix(200, 2);
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < 200; ++i) {
      ds.inputs(i, 0) = (i < 100 ? -20.0 : 20.0) + rng.normal();
      ds.inputs(i, 1) = rng.normal();
      ds.values.push_back(0.0);
    }
    PartitionConfig cfg;
    cfg.num_clients = 2;
    cfg.bins = 2;
    cfg.alpha = 0.01;
    cfg.mode = PartitionMode::covariate_shift;
    cfg.seed = seed;
    const auto parts = partition_dataset(ds, cfg);
    for (const auto& p : parts) {
      const auto first = std::count_if(p.begin(), p.end(), [](std::size_t r) { return r < 100; });
      if (first >= 90 || static_cast<long>(p.size()) - first >= 90) {
        ++hits;
        break;
      }
    }
  }
  EXPECT_GE(hits, 45);
}

TEST(Split, SizesAndUnion) {
  const auto s = split_indices(10, {}, 1);
  EXPECT_EQ(s.train.size(), 6u);
  EXPECT_EQ(s.val.size(), 2u);
  EXPECT_EQ(s.test.size(), 2u);
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.val.begin(), s.val.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, iota_n(10));
  EXPECT_THROW(split_indices(2, {}, 1), std::invalid_argument);
  EXPECT_EQ(split_indices(3, {}, 1).test.size(), 1u);
}

TEST(Split, SeedDeterminism) {
  const auto a = split_indices(100, {}, 5);
  const auto b = split_indices(100, {}, 5);
  const auto c = split_indices(100, {}, 6);
  EXPECT_EQ(a.train, b.train);
  EXPECT_NE(a.train, c.train);
}

TEST(Split, DatasetSplitMatchesIndices) {
  const auto ds = classification(9, 50);
  const auto idx = split_indices(50, {}, 2);
  const auto sp = split_train_val_test(ds, {}, 2);
  EXPECT_EQ(sp.train.inputs, ds.subset(idx.train).inputs);
  EXPECT_EQ(sp.test.labels, ds.subset(idx.test).labels);
}

TEST(DatasetCsv, RoundTripIsExact) {
  const auto dir = std::filesystem::path(FEDEKD_TEST_TMP) / "data";
  std::filesystem::create_directories(dir);
  const auto ds = classification(4, 40);
  write_dataset_csv(dir / "c.csv", ds);
  const auto back = read_dataset_csv(dir / "c.csv", TaskKind::classification, 4);
  EXPECT_EQ(back.inputs, ds.inputs);
  EXPECT_EQ(back.labels, ds.labels);

  SyntheticConfig rc;
  rc.task = TaskKind::regression;
  rc.n = 30;
  const auto reg = gen_synthetic(rc);
  write_dataset_csv(dir / "r.csv", reg);
  const auto rback = read_dataset_csv(dir / "r.csv", TaskKind::regression, 0);
  EXPECT_EQ(rback.inputs, reg.inputs);
  EXPECT_EQ(rback.values, reg.values);
  EXPECT_THROW(read_dataset_csv(dir / "none.csv", TaskKind::regression, 0), std::runtime_error);
}
