#include "fedekd/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fedekd/rng.hpp"

namespace fedekd {

namespace {

enum StreamTag : std::uint64_t {
  kTagMeans = 1,
  kTagSamples = 2,
  kTagTruth = 3,
  kTagDirichlet = 4,
  kTagKMeans = 5,
};

}  // namespace

std::string_view to_string(TaskKind task) {
  return task == TaskKind::classification ? "classification" : "regression";
}

TaskKind parse_task(std::string_view name) {
  if (name == "classification") return TaskKind::classification;
  if (name == "regression") return TaskKind::regression;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

std::string_view to_string(PartitionMode mode) {
  return mode == PartitionMode::label_skew ? "label_skew" : "covariate_shift";
}

PartitionMode parse_partition_mode(std::string_view name) {
  if (name == "label_skew") return PartitionMode::label_skew;
  if (name == "covariate_shift") return PartitionMode::covariate_shift;
  throw std::invalid_argument("unknown partition mode '" + std::string(name) + "'");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.task = task;
  out.num_classes = num_classes;
  out.inputs = inputs.gather_rows(indices);
  if (task == TaskKind::classification) {
    out.labels.reserve(indices.size());
    for (auto i : indices) out.labels.push_back(labels.at(i));
  } else {
    out.values.reserve(indices.size());
    for (auto i : indices) out.values.push_back(values.at(i));
  }
  return out;
}

void Dataset::validate() const {
  if (task == TaskKind::classification) {
    if (labels.size() != size()) throw std::invalid_argument("dataset label count mismatch");
    for (int y : labels) {
      if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
        throw std::invalid_argument("dataset label out of range");
      }
    }
  } else {
    if (values.size() != size()) throw std::invalid_argument("dataset target count mismatch");
    for (double v : values) {
      if (!std::isfinite(v)) throw std::invalid_argument("dataset target not finite");
    }
  }
}

LinearTruth regression_truth(const SyntheticConfig& cfg) {
  auto rng = make_stream(cfg.seed, {kTagTruth});
  LinearTruth t;
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.dims));
  t.weights.resize(cfg.dims);
  for (double& w : t.weights) w = rng.normal() * scale;
  t.bias = rng.normal();
  return t;
}

Dataset gen_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n == 0 || cfg.dims == 0) throw std::invalid_argument("synthetic dataset needs n > 0 and dims > 0");
  Dataset ds;
  ds.task = cfg.task;
  ds.inputs = Matrix(cfg.n, cfg.dims);
  auto mean_rng = make_stream(cfg.seed, {kTagMeans});
  auto rng = make_stream(cfg.seed, {kTagSamples});
  if (cfg.task == TaskKind::classification) {
    if (cfg.num_classes < 2) throw std::invalid_argument("classification needs at least 2 classes");
    ds.num_classes = cfg.num_classes;
    Matrix means(cfg.num_classes, cfg.dims);
    for (double& m : means.data()) m = mean_rng.normal() * cfg.class_separation;
    ds.labels.resize(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
      const auto y = static_cast<std::size_t>(rng.below(cfg.num_classes));
      ds.labels[i] = static_cast<int>(y);
      for (std::size_t j = 0; j < cfg.dims; ++j) ds.inputs(i, j) = means(y, j) + rng.normal();
    }
  } else {
    if (cfg.latent_clusters == 0) throw std::invalid_argument("regression needs at least one latent cluster");
    const auto truth = regression_truth(cfg);
    Matrix centres(cfg.latent_clusters, cfg.dims);
    for (double& c : centres.data()) c = mean_rng.normal() * cfg.cluster_spread;
    ds.values.resize(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
      const auto b = static_cast<std::size_t>(rng.below(cfg.latent_clusters));
      double y = truth.bias;
      for (std::size_t j = 0; j < cfg.dims; ++j) {
        const double x = centres(b, j) + rng.normal();
        ds.inputs(i, j) = x;
        y += truth.weights[j] * x;
      }
      ds.values[i] = y + cfg.noise * rng.normal();
    }
  }
  return ds;
}

void PartitionConfig::validate() const {
  if (num_clients < 1) throw std::invalid_argument("partition needs at least one client");
  if (!(alpha > 0.0)) throw std::invalid_argument("partition alpha must be > 0");
  if (bins < 1) throw std::invalid_argument("partition bins must be >= 1");
  if (!(split.train > 0.0) || !(split.val > 0.0) || !(split.test > 0.0)) {
    throw std::invalid_argument("split fractions must be positive");
  }
  if (std::abs(split.train + split.val + split.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
}

std::vector<std::size_t> largest_remainder_counts(std::size_t total, std::span<const double> proportions) {
  std::vector<std::size_t> counts(proportions.size(), 0);
  std::vector<double> remainder(proportions.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < proportions.size(); ++k) {
    const double exact = static_cast<double>(total) * proportions[k];
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    remainder[k] = exact - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  std::vector<std::size_t> order(proportions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  // Proportions summing slightly below 1 can leave more than K leftovers.
  for (std::size_t i = 0; assigned < total; i = (i + 1) % order.size()) {
    ++counts[order[i]];
    ++assigned;
  }
  while (assigned > total) {
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  return counts;
}

ClientIndices dirichlet_group_partition(const std::vector<std::vector<std::size_t>>& groups,
                                        std::size_t num_clients, double alpha, std::size_t min_client_samples,
                                        std::uint64_t seed) {
  if (num_clients < 1) throw std::invalid_argument("partition needs at least one client");
  auto rng = make_stream(seed, {kTagDirichlet});
  ClientIndices clients(num_clients);
  std::size_t total = 0;
  for (const auto& group : groups) {
    std::vector<std::size_t> rows = group;
    shuffle(rng, std::span<std::size_t>(rows));
    const auto props = dirichlet(rng, num_clients, alpha);
    const auto counts = largest_remainder_counts(rows.size(), props);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < num_clients; ++k) {
      clients[k].insert(clients[k].end(), rows.begin() + static_cast<std::ptrdiff_t>(pos),
                        rows.begin() + static_cast<std::ptrdiff_t>(pos + counts[k]));
      pos += counts[k];
    }
    total += rows.size();
  }
  for (auto& c : clients) std::sort(c.begin(), c.end());

  const std::size_t floor_size = std::max<std::size_t>(min_client_samples, 1);
  if (total < floor_size * num_clients) {
    throw std::invalid_argument("not enough samples to give every client " + std::to_string(floor_size));
  }
  for (;;) {
    auto smallest = std::min_element(clients.begin(), clients.end(),
                                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
    if (smallest->size() >= floor_size) break;
    auto largest = std::max_element(clients.begin(), clients.end(),
                                    [](const auto& a, const auto& b) { return a.size() < b.size(); });
    const std::size_t moved = largest->back();
    largest->pop_back();
    smallest->insert(std::upper_bound(smallest->begin(), smallest->end(), moved), moved);
  }
  return clients;
}

ClientIndices dirichlet_label_partition(const Dataset& ds, const PartitionConfig& cfg) {
  cfg.validate();
  if (ds.task != TaskKind::classification) {
    throw std::invalid_argument("label-skew partition needs a classification dataset; use covariate_shift");
  }
  std::vector<std::vector<std::size_t>> groups(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) groups[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    if (groups[c].empty()) throw std::invalid_argument("class " + std::to_string(c) + " has no samples");
  }
  return dirichlet_group_partition(groups, cfg.num_clients, cfg.alpha, cfg.min_client_samples, cfg.seed);
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iterations,
                    double tolerance) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  if (k < 1) throw std::invalid_argument("kmeans needs k >= 1");
  if (n < k) throw std::invalid_argument("kmeans needs at least k points");
  auto rng = make_stream(seed, {kTagKMeans});

  KMeansResult res;
  res.centroids = Matrix(k, d);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  auto place = [&](std::size_t c, std::size_t i) {
    std::copy(points.row(i).begin(), points.row(i).end(), res.centroids.row(c).begin());
  };
  place(0, static_cast<std::size_t>(rng.below(n)));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(points.row(i), res.centroids.row(c - 1)));
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += nearest[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(n));
    }
    place(c, pick);
  }

  res.assignment.assign(n, 0);
  std::vector<double> dist(n, 0.0);
  auto assign = [&]() {
    bool changed = false;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = sq_dist(points.row(i), res.centroids.row(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double dc = sq_dist(points.row(i), res.centroids.row(c));
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      changed = changed || best != res.assignment[i];
      res.assignment[i] = best;
      dist[i] = best_d;
      sse += best_d;
    }
    res.sse_history.push_back(sse);
    return changed;
  };
  auto update = [&]() {
    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto s = sums.row(res.assignment[i]);
      const auto x = points.row(i);
      for (std::size_t j = 0; j < d; ++j) s[j] += x[j];
      ++counts[res.assignment[i]];
    }
    double movement = 0.0;
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> next(d);
      if (counts[c] == 0) {
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!taken[i] && dist[i] > far_d) {
            far_d = dist[i];
            far = i;
          }
        }
        taken[far] = true;
        dist[far] = 0.0;
        std::copy(points.row(far).begin(), points.row(far).end(), next.begin());
      } else {
        for (std::size_t j = 0; j < d; ++j) next[j] = sums(c, j) / static_cast<double>(counts[c]);
      }
      movement = std::max(movement, std::sqrt(sq_dist(next, res.centroids.row(c))));
      std::copy(next.begin(), next.end(), res.centroids.row(c).begin());
    }
    return movement;
  };

  assign();
  for (std::size_t it = 0; it < max_iterations; ++it) {
    const double movement = update();
    const bool changed = assign();
    ++res.iterations;
    if (!changed || movement < tolerance) break;
  }
  return res;
}

ClientIndices covariate_partition(const Dataset& ds, const PartitionConfig& cfg) {
  cfg.validate();
  if (ds.size() < cfg.bins) throw std::invalid_argument("covariate partition needs at least as many samples as bins");
  const auto km = kmeans(ds.inputs, cfg.bins, cfg.seed);
  std::vector<std::vector<std::size_t>> groups(cfg.bins);
  for (std::size_t i = 0; i < ds.size(); ++i) groups[km.assignment[i]].push_back(i);
  return dirichlet_group_partition(groups, cfg.num_clients, cfg.alpha, cfg.min_client_samples, cfg.seed);
}

ClientIndices partition_dataset(const Dataset& ds, const PartitionConfig& cfg) {
  return cfg.mode == PartitionMode::label_skew ? dirichlet_label_partition(ds, cfg) : covariate_partition(ds, cfg);
}

std::vector<Dataset> materialize(const Dataset& ds, const ClientIndices& parts) {
  std::vector<Dataset> out;
  out.reserve(parts.size());
  for (const auto& p : parts) out.push_back(ds.subset(p));
  return out;
}

SplitIndices split_indices(std::size_t n, const SplitFractions& fractions, std::uint64_t seed) {
  const auto cut1 = static_cast<std::size_t>(std::floor(fractions.train * static_cast<double>(n) + 1e-9));
  const auto cut2 =
      static_cast<std::size_t>(std::floor((fractions.train + fractions.val) * static_cast<double>(n) + 1e-9));
  if (cut1 < 1 || cut2 <= cut1 || cut2 >= n) throw std::invalid_argument("client shard too small to split");
  SplitMix64 rng(seed);
  const auto perm = permutation(rng, n);
  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cut1));
  out.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(cut1), perm.begin() + static_cast<std::ptrdiff_t>(cut2));
  out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(cut2), perm.end());
  return out;
}

DataSplit split_train_val_test(const Dataset& ds, const SplitFractions& fractions, std::uint64_t seed) {
  const auto idx = split_indices(ds.size(), fractions, seed);
  return {ds.subset(idx.train), ds.subset(idx.val), ds.subset(idx.test)};
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  for (std::size_t j = 0; j < ds.dims(); ++j) out << 'x' << j << ',';
  out << "target\n";
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.dims(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.inputs(i, j));
      out << buf << ',';
    }
    if (ds.task == TaskKind::classification) {
      out << ds.labels[i] << '\n';
    } else {
      std::snprintf(buf, sizeof buf, "%.17g", ds.values[i]);
      out << buf << '\n';
    }
  }
}

Dataset read_dataset_csv(const std::filesystem::path& path, TaskKind task, std::size_t num_classes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset file " + path.string());
  const auto cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (cols == 0) throw std::runtime_error("dataset header has no feature columns");
  Dataset ds;
  ds.task = task;
  ds.num_classes = task == TaskKind::classification ? num_classes : 0;
  std::vector<double> data;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c < cols) {
        data.push_back(std::stod(cell));
      } else if (task == TaskKind::classification) {
        ds.labels.push_back(std::stoi(cell));
      } else {
        ds.values.push_back(std::stod(cell));
      }
      ++c;
    }
    if (c != cols + 1) throw std::runtime_error("dataset row " + std::to_string(rows + 1) + " has wrong width");
    ++rows;
  }
  ds.inputs = Matrix(rows, cols, std::move(data));
  ds.validate();
  return ds;
}

}  // namespace fedekd
