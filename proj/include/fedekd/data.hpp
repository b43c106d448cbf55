#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "fedekd/numerics.hpp"

namespace fedekd {

enum class TaskKind { classification, regression };

std::string_view to_string(TaskKind task);
TaskKind parse_task(std::string_view name);

struct Dataset {
  Matrix inputs;
  std::vector<int> labels;     // classification targets
  std::vector<double> values;  // regression targets
  TaskKind task = TaskKind::classification;
  std::size_t num_classes = 0;  // 0 for regression

  std::size_t size() const { return inputs.rows(); }
  std::size_t dims() const { return inputs.cols(); }
  Dataset subset(std::span<const std::size_t> indices) const;
  void validate() const;
};

struct SyntheticConfig {
  TaskKind task = TaskKind::classification;
  std::size_t n = 3000;
  std::size_t dims = 8;
  std::size_t num_classes = 4;
  // Classification: class means are drawn N(0, separation^2 I).
  double class_separation = 1.0;
  // Regression: std of the additive target noise.
  double noise = 0.1;
  // Regression inputs come from this many latent Gaussian clusters whose
  // centres are drawn N(0, cluster_spread^2 I).
  std::size_t latent_clusters = 5;
  double cluster_spread = 3.0;
  std::uint64_t seed = 0;
};

struct LinearTruth {
  std::vector<double> weights;
  double bias = 0.0;
};

Dataset gen_synthetic(const SyntheticConfig& cfg);
// The (w*, b*) that gen_synthetic uses for a regression config.
LinearTruth regression_truth(const SyntheticConfig& cfg);

enum class PartitionMode { label_skew, covariate_shift };

std::string_view to_string(PartitionMode mode);
PartitionMode parse_partition_mode(std::string_view name);

struct SplitFractions {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

struct PartitionConfig {
  std::size_t num_clients = 6;
  double alpha = 0.5;
  std::size_t bins = 5;
  PartitionMode mode = PartitionMode::label_skew;
  SplitFractions split;
  // Shards below this size are topped up from the largest shard.
  std::size_t min_client_samples = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Row indices of the source dataset, one ascending list per client.
using ClientIndices = std::vector<std::vector<std::size_t>>;

// Each group's rows (shuffled) are spread across clients by Dir(alpha 1_K)
// proportions converted to counts by largest-remainder rounding; undersized
// shards are then repaired one sample at a time from the largest shard.
ClientIndices dirichlet_group_partition(const std::vector<std::vector<std::size_t>>& groups,
                                        std::size_t num_clients, double alpha,
                                        std::size_t min_client_samples, std::uint64_t seed);

// Largest-remainder rounding of total * proportions; ties to the lower index.
std::vector<std::size_t> largest_remainder_counts(std::size_t total, std::span<const double> proportions);

ClientIndices dirichlet_label_partition(const Dataset& ds, const PartitionConfig& cfg);

struct KMeansResult {
  Matrix centroids;
  std::vector<std::size_t> assignment;
  std::vector<double> sse_history;  // within-cluster SSE after each assignment step
  std::size_t iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding.  Ties go to the lowest centroid
// index; an emptied cluster is re-seeded at the point farthest from its
// centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iterations = 100,
                    double tolerance = 1e-6);

ClientIndices covariate_partition(const Dataset& ds, const PartitionConfig& cfg);

// Dispatches on cfg.mode.
ClientIndices partition_dataset(const Dataset& ds, const PartitionConfig& cfg);

std::vector<Dataset> materialize(const Dataset& ds, const ClientIndices& parts);

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

struct DataSplit {
  Dataset train, val, test;
};

// Seeded permutation, then cuts at floor(f_train n) and floor((f_train+f_val) n).
SplitIndices split_indices(std::size_t n, const SplitFractions& fractions, std::uint64_t seed);
DataSplit split_train_val_test(const Dataset& ds, const SplitFractions& fractions, std::uint64_t seed);

// CSV with header x0..x{d-1},target, one row per sample.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset_csv(const std::filesystem::path& path, TaskKind task, std::size_t num_classes);

}  // namespace fedekd
