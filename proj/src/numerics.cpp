#include "fedekd/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fedekd {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("matrix data length " + std::to_string(data_.size()) +
                                " does not match " + std::to_string(rows_) + "x" +
                                std::to_string(cols_));
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw std::invalid_argument("ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(rows.size(), cols, std::move(data));
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw std::out_of_range("row index out of range");
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[i] * cols_), cols_,
                out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
  }
  return out;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

namespace {

void softmax_into(std::span<const double> z, std::span<double> probs,
                  std::span<double> logprobs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : z) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - mx);
  const double log_sum = std::log(sum);
  for (std::size_t c = 0; c < z.size(); ++c) {
    logprobs[c] = z[c] - mx - log_sum;
    probs[c] = std::exp(logprobs[c]);
  }
}

void check_distribution(std::span<const double> p, const char* what) {
  for (double x : p) {
    if (!(x >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative probability");
  }
}

}  // namespace

SoftmaxResult softmax_logsoftmax(const Matrix& logits) {
  if (logits.cols() < 1) throw std::invalid_argument("softmax needs at least one class");
  if (!logits.all_finite()) throw std::invalid_argument("non-finite logits");
  SoftmaxResult out{Matrix(logits.rows(), logits.cols()), Matrix(logits.rows(), logits.cols())};
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    softmax_into(logits.row(r), out.probs.row(r), out.logprobs.row(r));
  }
  return out;
}

std::vector<double> softmax_row(std::span<const double> logits) {
  for (double v : logits) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite logits");
  }
  std::vector<double> p(logits.size()), lp(logits.size());
  softmax_into(logits, p, lp);
  return p;
}

double entropy(std::span<const double> probs) {
  check_distribution(probs, "entropy");
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(std::max(p, kProbFloor));
  }
  return std::max(h, 0.0);
}

double kl_divergence(std::span<const double> p, std::span<const double> q, bool symmetric) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: shape mismatch");
  check_distribution(p, "kl_divergence");
  check_distribution(q, "kl_divergence");
  auto one_way = [](std::span<const double> a, std::span<const double> b) {
    double kl = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
      if (a[c] > 0.0) {
        kl += a[c] * (std::log(std::max(a[c], kProbFloor)) - std::log(std::max(b[c], kProbFloor)));
      }
    }
    return std::max(kl, 0.0);
  };
  if (!symmetric) return one_way(p, q);
  return 0.5 * (one_way(p, q) + one_way(q, p));
}

LossGrad cross_entropy_loss(const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) throw std::invalid_argument("cross_entropy: label count mismatch");
  if (logits.rows() == 0) throw std::invalid_argument("cross_entropy: empty batch");
  const auto sm = softmax_logsoftmax(logits);
  const double n = static_cast<double>(logits.rows());
  LossGrad out{0.0, sm.probs};
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols()) {
      throw std::out_of_range("cross_entropy: target index " + std::to_string(y) + " out of range");
    }
    const double lp = std::max(sm.logprobs(i, static_cast<std::size_t>(y)), std::log(kProbFloor));
    out.loss -= lp;
    auto g = out.grad_wrt_output.row(i);
    g[static_cast<std::size_t>(y)] -= 1.0;
    for (double& v : g) v /= n;
  }
  out.loss /= n;
  return out;
}

LossGrad squared_error_loss(const Matrix& output, std::span<const double> targets) {
  if (output.cols() != 1 || output.rows() != targets.size()) {
    throw std::invalid_argument("squared_error: output must be n x 1 matching targets");
  }
  if (output.rows() == 0) throw std::invalid_argument("squared_error: empty batch");
  const double n = static_cast<double>(output.rows());
  LossGrad out{0.0, Matrix(output.rows(), 1)};
  for (std::size_t i = 0; i < output.rows(); ++i) {
    const double r = output(i, 0) - targets[i];
    out.loss += r * r;
    out.grad_wrt_output(i, 0) = 2.0 * r / n;
  }
  out.loss /= n;
  return out;
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> params, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
  std::vector<double> theta(params.begin(), params.end());
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + h;
    const double up = f(theta);
    theta[i] = saved - h;
    const double down = f(theta);
    theta[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::domain_error("finite_diff_grad: non-finite function value");
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

AdamState AdamState::zeros(std::size_t n, double lr) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: length mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw std::invalid_argument("max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace fedekd
