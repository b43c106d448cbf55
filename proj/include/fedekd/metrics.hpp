#pragma once

#include <span>
#include <vector>

#include "fedekd/data.hpp"
#include "fedekd/numerics.hpp"

namespace fedekd {

// Accuracy (argmax, lowest index wins ties) or RMSE over an N-row output.
double accuracy(const Matrix& logits, std::span<const int> labels);
double rmse(const Matrix& predictions, std::span<const double> targets);
double client_metric(TaskKind task, const Matrix& predictions, const Dataset& targets);

std::size_t argmax(std::span<const double> row);

// Linear interpolation between closest ranks at r = p (K - 1).
double percentile(std::span<const double> values, double p);

struct NegativeTransferReport {
  TaskKind task = TaskKind::classification;
  std::vector<double> per_client_metric;
  std::vector<double> per_client_local;
  std::vector<double> delta;
  double avg_delta = 0.0;
  // Lowest delta for accuracy, highest for RMSE.
  double worst_delta = 0.0;
  // P10 of the deltas for classification, P90 for regression.
  double tail_delta = 0.0;
  double avg_metric = 0.0;
  double worst_metric = 0.0;
};

NegativeTransferReport negative_transfer(std::span<const double> metric_per_client,
                                         std::span<const double> local_per_client, TaskKind task);

}  // namespace fedekd
