#pragma once

// Energy scores, batch-relative logistic trust weights, and the gated
// backward-distillation objective for a private model.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedekd/models.hpp"
#include "fedekd/numerics.hpp"

namespace fedekd {

enum class EnergyKind { kd_symkl, regression_sq, entropy, margin, lse, feat };

std::string_view to_string(EnergyKind kind);
EnergyKind parse_energy_kind(std::string_view name);

struct GateConfig {
  EnergyKind energy_kind = EnergyKind::kd_symkl;
  double beta = 1.0;
  double lambda_kd = 1.0;
  double eps_B = 1e-8;
  double eps_H = 1e-8;
  // When set, every sample uses this weight instead of the gate output.
  // 1.0 gives ungated full-trust distillation.
  std::optional<double> forced_weight;

  void validate() const;
};

// Logistic function rho(t) = 1 / (1 + exp(-t)).
double logistic(double t);

// Scalar disagreement between one private output row and one proxy output
// row.  Logit-based single-model kinds (entropy, margin, lse) score the
// proxy row.  `feat` compares feature rows, which must already have equal
// width (see project_features).
double energy(EnergyKind kind, std::span<const double> private_out,
              std::span<const double> proxy_out,
              std::span<const double> private_feat = {},
              std::span<const double> proxy_feat = {}, double eps_H = 1e-8);

struct EnergyBatch {
  std::vector<double> raw;
  std::vector<double> normalized;
  std::vector<double> weights;
  double batch_mean = 0.0;
  double batch_std = 0.0;
};

// Population mean/std normalization, then w_i = rho(-beta * E~_i).
EnergyBatch normalize_and_gate(std::span<const double> raw, const GateConfig& cfg);

// Lower and upper trust-weight bounds for a batch of size n.
std::pair<double, double> trust_weight_bounds(std::size_t n, double beta);

// Fixed random linear map from private feature width to proxy feature width,
// shape [to x from], entries N(0, 1/from).
Matrix make_feature_projection(std::size_t from, std::size_t to, std::uint64_t seed);
Matrix project_features(const Matrix& features, const Matrix& projection);

// Targets for one minibatch; exactly one of the spans is used, chosen by the
// model head.
struct BatchTargets {
  std::span<const int> labels;
  std::span<const double> values;
};

// Supervised loss for the given head.
LossGrad supervised_loss(Head head, const Matrix& output, const BatchTargets& targets);

// Per-sample distillation loss against a detached teacher row:
// KL(q || softmax(z)) for logits, (f - g)^2 for a scalar head.
double distillation_loss(Head head, std::span<const double> student_out,
                         std::span<const double> teacher_out);

// Gradient of distillation_loss wrt the student output: p - q or 2(f - g).
std::vector<double> distillation_output_grad(Head head, std::span<const double> student_out,
                                             std::span<const double> teacher_out);

struct GatedLoss {
  double loss = 0.0;
  double supervised = 0.0;
  double distillation = 0.0;  // (1/|B|) sum_i w_i l_KD(x_i), before lambda_kd
  std::vector<double> grad;
  EnergyBatch energies;
  std::vector<double> applied_weights;
  // Gradient of `loss` wrt the private output; row i carries the supervised
  // part plus lambda_kd * w_i * distillation_output_grad / |B|.
  Matrix output_grad;
};

struct GateInputs {
  const Matrix& inputs;
  BatchTargets targets;
  // Required only for EnergyKind::feat.
  const Matrix* feature_projection = nullptr;
};

// L_sup + lambda_kd * (1/|B|) sum_i sg(w_i) l_KD(x_i).  The proxy is a frozen
// teacher and the weights are constants wrt the private parameters.
GatedLoss gated_private_loss(const GateInputs& batch, const ModelParams& private_model,
                             const ModelParams& global_proxy, const GateConfig& cfg);

// Same objective using traces the caller already computed.
GatedLoss gated_private_loss(const GateInputs& batch, const ModelParams& private_model,
                             const ForwardTrace& private_trace, const ForwardTrace& proxy_trace,
                             const GateConfig& cfg);

// w * grad_theta l_KD(x_i) for one sample of a traced batch.  The weight
// multiplies a finished ungated gradient, so the gated result is the ungated
// one scaled coordinate-by-coordinate.
std::vector<double> distillation_sample_gradient(const ModelParams& private_model,
                                                 const ForwardTrace& private_trace,
                                                 std::span<const double> teacher_row,
                                                 std::size_t sample, double weight);

// Grid minimizer of w E~ + (1/beta)[w ln w + (1-w) ln(1-w)] over
// {h, 2h, ..., 1-h}.
double variational_gate_oracle(double normalized_energy, double beta, double grid_step);

}  // namespace fedekd
