#include "fedekd/gating.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fedekd/rng.hpp"

namespace fedekd {

std::string_view to_string(EnergyKind kind) {
  switch (kind) {
    case EnergyKind::kd_symkl: return "kd_symkl";
    case EnergyKind::regression_sq: return "regression_sq";
    case EnergyKind::entropy: return "entropy";
    case EnergyKind::margin: return "margin";
    case EnergyKind::lse: return "lse";
    case EnergyKind::feat: return "feat";
  }
  return "unknown";
}

EnergyKind parse_energy_kind(std::string_view name) {
  for (auto k : {EnergyKind::kd_symkl, EnergyKind::regression_sq, EnergyKind::entropy,
                 EnergyKind::margin, EnergyKind::lse, EnergyKind::feat}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown energy kind '" + std::string(name) + "'");
}

void GateConfig::validate() const {
  if (!(beta > 0.0)) throw std::invalid_argument("gate beta must be > 0");
  if (!(lambda_kd >= 0.0)) throw std::invalid_argument("gate lambda_kd must be >= 0");
  if (!(eps_B > 0.0) || !(eps_H > 0.0)) throw std::invalid_argument("gate eps_B and eps_H must be > 0");
  if (forced_weight && !(*forced_weight >= 0.0)) throw std::invalid_argument("forced weight must be >= 0");
}

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

namespace {

constexpr double kMinWeight = std::numeric_limits<double>::min();
constexpr double kMaxWeight = 1.0 - std::numeric_limits<double>::epsilon() / 2;

void require_same_width(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": row width mismatch");
}

double log_sum_exp(std::span<const double> z) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : z) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  return mx + std::log(s);
}

}  // namespace

double energy(EnergyKind kind, std::span<const double> private_out, std::span<const double> proxy_out,
              std::span<const double> private_feat, std::span<const double> proxy_feat, double eps_H) {
  switch (kind) {
    case EnergyKind::kd_symkl: {
      require_same_width(private_out, proxy_out, "kd_symkl energy");
      if (private_out.size() < 2) throw std::invalid_argument("kd_symkl energy needs at least 2 classes");
      const auto p = softmax_row(private_out);
      const auto q = softmax_row(proxy_out);
      return kl_divergence(p, q, true) / (entropy(p) + entropy(q) + eps_H);
    }
    case EnergyKind::regression_sq: {
      require_same_width(private_out, proxy_out, "regression energy");
      double s = 0.0;
      for (std::size_t i = 0; i < private_out.size(); ++i) {
        const double r = private_out[i] - proxy_out[i];
        s += r * r;
      }
      return 0.5 * s;
    }
    case EnergyKind::entropy: {
      const auto q = softmax_row(proxy_out);
      double e = 0.0;
      for (double qc : q) e -= qc * std::log(qc + eps_H);
      return e;
    }
    case EnergyKind::margin: {
      if (proxy_out.size() < 2) throw std::invalid_argument("margin energy needs at least 2 logits");
      double first = -std::numeric_limits<double>::infinity();
      double second = first;
      for (double z : proxy_out) {
        if (z > first) {
          second = first;
          first = z;
        } else if (z > second) {
          second = z;
        }
      }
      return -(first - second);
    }
    case EnergyKind::lse:
      if (proxy_out.empty()) throw std::invalid_argument("lse energy needs logits");
      return -log_sum_exp(proxy_out);
    case EnergyKind::feat: {
      if (private_feat.empty() || proxy_feat.empty()) {
        throw std::invalid_argument("feat energy requires private and proxy features");
      }
      require_same_width(private_feat, proxy_feat, "feat energy");
      double s = 0.0;
      for (std::size_t i = 0; i < proxy_feat.size(); ++i) {
        const double r = proxy_feat[i] - private_feat[i];
        s += r * r;
      }
      return std::sqrt(s);
    }
  }
  throw std::invalid_argument("unknown energy kind");
}

EnergyBatch normalize_and_gate(std::span<const double> raw, const GateConfig& cfg) {
  if (raw.empty()) throw std::invalid_argument("normalize_and_gate: empty batch");
  for (double e : raw) {
    if (!std::isfinite(e)) throw std::invalid_argument("normalize_and_gate: non-finite energy");
  }
  EnergyBatch out;
  out.raw.assign(raw.begin(), raw.end());
  const double n = static_cast<double>(raw.size());
  double mean = 0.0;
  for (double e : raw) mean += e;
  mean /= n;
  double var = 0.0;
  for (double e : raw) var += (e - mean) * (e - mean);
  out.batch_mean = mean;
  out.batch_std = std::sqrt(var / n);
  const double denom = out.batch_std + cfg.eps_B;
  out.normalized.resize(raw.size());
  out.weights.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.normalized[i] = (raw[i] - mean) / denom;
    // Clamped so the weight stays strictly inside (0, 1) after rounding.
    const double w = 1.0 / (1.0 + std::exp(cfg.beta * out.normalized[i]));
    out.weights[i] = std::clamp(w, kMinWeight, kMaxWeight);
  }
  return out;
}

std::pair<double, double> trust_weight_bounds(std::size_t n, double beta) {
  if (n <= 1) return {0.5, 0.5};
  const double r = beta * std::sqrt(static_cast<double>(n - 1));
  return {logistic(-r), logistic(r)};
}

Matrix make_feature_projection(std::size_t from, std::size_t to, std::uint64_t seed) {
  Matrix p(to, from);
  SplitMix64 rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(from));
  for (double& v : p.data()) v = rng.normal() * scale;
  return p;
}

Matrix project_features(const Matrix& features, const Matrix& projection) {
  if (features.cols() != projection.cols()) throw std::invalid_argument("feature projection width mismatch");
  Matrix out(features.rows(), projection.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto h = features.row(i);
    for (std::size_t o = 0; o < projection.rows(); ++o) {
      const auto w = projection.row(o);
      double s = 0.0;
      for (std::size_t k = 0; k < h.size(); ++k) s += w[k] * h[k];
      out(i, o) = s;
    }
  }
  return out;
}

LossGrad supervised_loss(Head head, const Matrix& output, const BatchTargets& targets) {
  return head == Head::logits ? cross_entropy_loss(output, targets.labels)
                              : squared_error_loss(output, targets.values);
}

double distillation_loss(Head head, std::span<const double> student_out, std::span<const double> teacher_out) {
  require_same_width(student_out, teacher_out, "distillation loss");
  if (head == Head::logits) {
    return kl_divergence(softmax_row(teacher_out), softmax_row(student_out));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < student_out.size(); ++i) {
    const double r = student_out[i] - teacher_out[i];
    s += r * r;
  }
  return s;
}

std::vector<double> distillation_output_grad(Head head, std::span<const double> student_out,
                                             std::span<const double> teacher_out) {
  require_same_width(student_out, teacher_out, "distillation gradient");
  std::vector<double> g(student_out.size());
  if (head == Head::logits) {
    const auto p = softmax_row(student_out);
    const auto q = softmax_row(teacher_out);
    for (std::size_t c = 0; c < g.size(); ++c) g[c] = p[c] - q[c];
  } else {
    for (std::size_t c = 0; c < g.size(); ++c) g[c] = 2.0 * (student_out[c] - teacher_out[c]);
  }
  return g;
}

GatedLoss gated_private_loss(const GateInputs& batch, const ModelParams& private_model,
                             const ModelParams& global_proxy, const GateConfig& cfg) {
  const auto private_trace = forward(private_model, batch.inputs);
  const auto proxy_trace = forward(global_proxy, batch.inputs);
  return gated_private_loss(batch, private_model, private_trace, proxy_trace, cfg);
}

GatedLoss gated_private_loss(const GateInputs& batch, const ModelParams& private_model,
                             const ForwardTrace& private_trace, const ForwardTrace& proxy_trace,
                             const GateConfig& cfg) {
  const Head head = private_model.spec.head;
  const Matrix& f = private_trace.output();
  const Matrix& g = proxy_trace.output();
  if (f.rows() != g.rows() || f.cols() != g.cols()) {
    throw std::invalid_argument("gated_private_loss: private and proxy output shapes differ");
  }
  const std::size_t n = f.rows();
  if (n == 0) throw std::invalid_argument("gated_private_loss: empty batch");

  Matrix projected;
  if (cfg.energy_kind == EnergyKind::feat) {
    if (batch.feature_projection == nullptr) {
      throw std::invalid_argument("feat energy requires a feature projection");
    }
    projected = project_features(private_trace.features(), *batch.feature_projection);
    if (projected.cols() != proxy_trace.features().cols()) {
      throw std::invalid_argument("feature projection does not map to the proxy feature width");
    }
  }

  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (cfg.energy_kind == EnergyKind::feat) {
      raw[i] = energy(cfg.energy_kind, f.row(i), g.row(i), projected.row(i), proxy_trace.features().row(i),
                      cfg.eps_H);
    } else {
      raw[i] = energy(cfg.energy_kind, f.row(i), g.row(i), {}, {}, cfg.eps_H);
    }
  }

  GatedLoss out;
  out.energies = normalize_and_gate(raw, cfg);
  out.applied_weights = cfg.forced_weight ? std::vector<double>(n, *cfg.forced_weight) : out.energies.weights;

  auto sup = supervised_loss(head, f, batch.targets);
  out.supervised = sup.loss;
  out.output_grad = std::move(sup.grad_wrt_output);
  const double inv_n = 1.0 / static_cast<double>(n);
  double kd = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = out.applied_weights[i];
    kd += w * distillation_loss(head, f.row(i), g.row(i));
    const auto d = distillation_output_grad(head, f.row(i), g.row(i));
    const double coef = cfg.lambda_kd * w * inv_n;
    auto row = out.output_grad.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += coef * d[c];
  }
  out.distillation = kd * inv_n;
  out.loss = out.supervised + cfg.lambda_kd * out.distillation;
  out.grad = backward(private_model, private_trace, out.output_grad);
  return out;
}

std::vector<double> distillation_sample_gradient(const ModelParams& private_model, const ForwardTrace& private_trace,
                                                 std::span<const double> teacher_row, std::size_t sample,
                                                 double weight) {
  const Matrix& f = private_trace.output();
  if (sample >= f.rows()) throw std::out_of_range("distillation_sample_gradient: sample out of range");
  Matrix upstream(f.rows(), f.cols());
  const auto d = distillation_output_grad(private_model.spec.head, f.row(sample), teacher_row);
  std::copy(d.begin(), d.end(), upstream.row(sample).begin());
  auto grad = backward(private_model, private_trace, upstream);
  for (double& x : grad) x *= weight;
  return grad;
}

double variational_gate_oracle(double normalized_energy, double beta, double grid_step) {
  if (!(grid_step > 0.0) || grid_step > 0.01) throw std::invalid_argument("grid_step must be in (0, 0.01]");
  const auto points = static_cast<std::size_t>(std::llround(1.0 / grid_step));
  double best_w = 0.5;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < points; ++k) {
    const double w = static_cast<double>(k) * grid_step;
    if (w >= 1.0) break;
    const double phi = w * normalized_energy + (w * std::log(w) + (1.0 - w) * std::log1p(-w)) / beta;
    if (phi < best) {
      best = phi;
      best_w = w;
    }
  }
  return best_w;
}

}  // namespace fedekd
