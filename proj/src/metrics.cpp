#include "fedekd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedekd {

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

double accuracy(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows() == 0) throw std::invalid_argument("accuracy: empty test set");
  if (labels.size() != logits.rows()) throw std::invalid_argument("accuracy: label count mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (static_cast<int>(argmax(logits.row(i))) == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

double rmse(const Matrix& predictions, std::span<const double> targets) {
  if (predictions.rows() == 0) throw std::invalid_argument("rmse: empty test set");
  if (predictions.cols() != 1 || targets.size() != predictions.rows()) {
    throw std::invalid_argument("rmse: predictions must be n x 1 matching targets");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.rows(); ++i) {
    const double r = predictions(i, 0) - targets[i];
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(predictions.rows()));
}

double client_metric(TaskKind task, const Matrix& predictions, const Dataset& targets) {
  return task == TaskKind::classification ? accuracy(predictions, targets.labels) : rmse(predictions, targets.values);
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("percentile fraction must be in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double r = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(r));
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (r - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

NegativeTransferReport negative_transfer(std::span<const double> metric_per_client,
                                         std::span<const double> local_per_client, TaskKind task) {
  if (metric_per_client.size() != local_per_client.size()) {
    throw std::invalid_argument("negative_transfer: per-client vectors differ in length");
  }
  if (metric_per_client.empty()) throw std::invalid_argument("negative_transfer: no clients");
  NegativeTransferReport r;
  r.task = task;
  r.per_client_metric.assign(metric_per_client.begin(), metric_per_client.end());
  r.per_client_local.assign(local_per_client.begin(), local_per_client.end());
  const std::size_t k = metric_per_client.size();
  r.delta.resize(k);
  for (std::size_t i = 0; i < k; ++i) r.delta[i] = metric_per_client[i] - local_per_client[i];
  const double kd = static_cast<double>(k);
  r.avg_delta = std::accumulate(r.delta.begin(), r.delta.end(), 0.0) / kd;
  r.avg_metric = std::accumulate(r.per_client_metric.begin(), r.per_client_metric.end(), 0.0) / kd;
  const bool cls = task == TaskKind::classification;
  r.worst_delta = cls ? *std::min_element(r.delta.begin(), r.delta.end())
                      : *std::max_element(r.delta.begin(), r.delta.end());
  r.worst_metric = cls ? *std::min_element(r.per_client_metric.begin(), r.per_client_metric.end())
                       : *std::max_element(r.per_client_metric.begin(), r.per_client_metric.end());
  r.tail_delta = percentile(r.delta, cls ? 0.1 : 0.9);
  return r;
}

}  // namespace fedekd
