#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fedekd {

// Dense row-major double matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  // Rows `indices` gathered into a new matrix, in the given order.
  Matrix gather_rows(std::span<const std::size_t> indices) const;

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct LossGrad {
  double loss = 0.0;
  Matrix grad_wrt_output;
};

struct SoftmaxResult {
  Matrix probs;
  Matrix logprobs;
};

// Probabilities are never below this inside a log.
inline constexpr double kProbFloor = 1e-12;

SoftmaxResult softmax_logsoftmax(const Matrix& logits);
std::vector<double> softmax_row(std::span<const double> logits);

double entropy(std::span<const double> probs);

// KL(p||q); the symmetric variant returns (KL(p||q) + KL(q||p)) / 2.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     bool symmetric = false);

// Mean over the batch of -log softmax(logits)[label]; gradient (p - onehot)/n.
LossGrad cross_entropy_loss(const Matrix& logits, std::span<const int> labels);

// Mean squared error over an n x 1 output; gradient 2(yhat - y)/n.
LossGrad squared_error_loss(const Matrix& output, std::span<const double> targets);

// Central differences of a scalar function of a flat parameter vector.
std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> params, double h = 1e-6);

struct AdamState {
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(std::size_t n, double lr);
};

// One bias-corrected Adam update in place on both `state` and `params`.
void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grad);

// Max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-8);

}  // namespace fedekd
