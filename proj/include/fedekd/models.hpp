#pragma once

// Fixed-depth ReLU MLPs with analytic backprop.
//
// Parameter layout (the checkpoint format and every aggregation rely on it):
// for layer l = 0, 1, ... the weight matrix W_l of shape [out_l x in_l] in
// row-major order, immediately followed by the bias vector b_l of length
// out_l.  Hidden layers apply ReLU; the last layer is linear.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fedekd/numerics.hpp"

namespace fedekd {

enum class Head { logits, scalar };

struct ModelSpec {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., output
  Head head = Head::logits;

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return layer_sizes.size() - 1; }
  // Width of the activation feeding the last layer.
  std::size_t feature_size() const { return layer_sizes[layer_sizes.size() - 2]; }
  std::size_t param_count() const;
  // Offset of W_l inside theta; the bias follows at weight_offset + in*out.
  std::size_t weight_offset(std::size_t layer) const;

  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct ModelParams {
  ModelSpec spec;
  std::vector<double> theta;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct ForwardTrace {
  // activations[l] is the input to layer l (activations[0] is the batch);
  // pre_activations[l] is layer l's affine output.
  std::vector<Matrix> activations;
  std::vector<Matrix> pre_activations;
  std::uint64_t fingerprint = 0;

  const Matrix& output() const { return pre_activations.back(); }
  // Last hidden activation; the raw input for a single-layer model.
  const Matrix& features() const { return activations.back(); }
};

// Glorot-uniform weights, zero biases.
ModelParams init_model(const ModelSpec& spec, std::uint64_t seed);

ForwardTrace forward(const ModelParams& params, const Matrix& inputs);

// Gradient of sum(grad_wrt_output .* output) wrt theta.  The trace must come
// from forward() on these exact parameters.
std::vector<double> backward(const ModelParams& params, const ForwardTrace& trace,
                             const Matrix& grad_wrt_output);

// dst.theta + alpha * src.theta.
ModelParams param_axpy(const ModelParams& dst, const ModelParams& src, double alpha);

// FNV-1a over the theta bytes; ties a trace to the parameters it came from.
std::uint64_t theta_fingerprint(std::span<const double> theta);

// Binary checkpoint: "FKDP" magic, u32 version, u32 head, u32 size count,
// u64 sizes..., u64 theta length, then theta as little-endian IEEE doubles.
void write_checkpoint(std::ostream& out, const ModelParams& params);
ModelParams read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace fedekd
