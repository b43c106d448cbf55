#include "fedekd/models.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "fedekd/rng.hpp"

namespace fedekd {

std::size_t ModelSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return n;
}

std::size_t ModelSpec::weight_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) {
    off += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return off;
}

void ModelSpec::validate() const {
  if (layer_sizes.size() < 2) throw std::invalid_argument("model spec needs at least 2 layer sizes");
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw std::invalid_argument("model spec layer sizes must be positive");
  }
  if (head == Head::scalar && layer_sizes.back() != 1) {
    throw std::invalid_argument("scalar head requires output size 1");
  }
}

std::uint64_t theta_fingerprint(std::span<const double> theta) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (double x : theta) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

ModelParams init_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ModelParams p{spec, std::vector<double>(spec.param_count(), 0.0)};
  SplitMix64 rng(seed);
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const std::size_t in = spec.layer_sizes[l];
    const std::size_t out = spec.layer_sizes[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    const std::size_t off = spec.weight_offset(l);
    for (std::size_t i = 0; i < in * out; ++i) p.theta[off + i] = rng.uniform(-a, a);
  }
  return p;
}

ForwardTrace forward(const ModelParams& params, const Matrix& inputs) {
  const ModelSpec& spec = params.spec;
  if (params.theta.size() != spec.param_count()) throw std::invalid_argument("theta length does not match spec");
  if (inputs.cols() != spec.input_size()) {
    throw std::invalid_argument("forward: input width " + std::to_string(inputs.cols()) +
                                " does not match model input " + std::to_string(spec.input_size()));
  }
  const std::size_t n = inputs.rows();
  ForwardTrace trace;
  trace.fingerprint = theta_fingerprint(params.theta);
  trace.activations.push_back(inputs);
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const std::size_t in = spec.layer_sizes[l];
    const std::size_t out = spec.layer_sizes[l + 1];
    const double* w = params.theta.data() + spec.weight_offset(l);
    const double* b = w + in * out;
    const Matrix& a = trace.activations.back();
    Matrix z(n, out);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = a.row(i);
      auto zi = z.row(i);
      for (std::size_t o = 0; o < out; ++o) {
        double s = b[o];
        const double* wo = w + o * in;
        for (std::size_t k = 0; k < in; ++k) s += wo[k] * x[k];
        zi[o] = s;
      }
    }
    if (l + 1 < spec.num_layers()) {
      Matrix act = z;
      for (double& v : act.data()) v = std::max(v, 0.0);
      trace.pre_activations.push_back(std::move(z));
      trace.activations.push_back(std::move(act));
    } else {
      trace.pre_activations.push_back(std::move(z));
    }
  }
  return trace;
}

std::vector<double> backward(const ModelParams& params, const ForwardTrace& trace,
                             const Matrix& grad_wrt_output) {
  const ModelSpec& spec = params.spec;
  if (trace.pre_activations.size() != spec.num_layers() ||
      trace.fingerprint != theta_fingerprint(params.theta)) {
    throw std::logic_error("backward: stale trace (parameters changed since forward)");
  }
  const Matrix& out = trace.output();
  if (grad_wrt_output.rows() != out.rows() || grad_wrt_output.cols() != out.cols()) {
    throw std::invalid_argument("backward: gradient shape does not match output");
  }
  std::vector<double> grad(spec.param_count(), 0.0);
  const std::size_t n = out.rows();
  Matrix delta = grad_wrt_output;
  for (std::size_t l = spec.num_layers(); l-- > 0;) {
    const std::size_t in = spec.layer_sizes[l];
    const std::size_t width = spec.layer_sizes[l + 1];
    const std::size_t off = spec.weight_offset(l);
    const double* w = params.theta.data() + off;
    double* gw = grad.data() + off;
    double* gb = gw + in * width;
    const Matrix& a = trace.activations[l];
    for (std::size_t i = 0; i < n; ++i) {
      const auto d = delta.row(i);
      const auto x = a.row(i);
      for (std::size_t o = 0; o < width; ++o) {
        const double dz = d[o];
        if (dz == 0.0) continue;
        double* g = gw + o * in;
        for (std::size_t k = 0; k < in; ++k) g[k] += dz * x[k];
        gb[o] += dz;
      }
    }
    if (l == 0) break;
    Matrix prev(n, in);
    const Matrix& z_prev = trace.pre_activations[l - 1];
    for (std::size_t i = 0; i < n; ++i) {
      const auto d = delta.row(i);
      auto pd = prev.row(i);
      for (std::size_t o = 0; o < width; ++o) {
        const double dz = d[o];
        if (dz == 0.0) continue;
        const double* wo = w + o * in;
        for (std::size_t k = 0; k < in; ++k) pd[k] += dz * wo[k];
      }
      const auto zp = z_prev.row(i);
      for (std::size_t k = 0; k < in; ++k) {
        if (!(zp[k] > 0.0)) pd[k] = 0.0;
      }
    }
    delta = std::move(prev);
  }
  return grad;
}

ModelParams param_axpy(const ModelParams& dst, const ModelParams& src, double alpha) {
  if (!(dst.spec == src.spec) || dst.theta.size() != src.theta.size()) {
    throw std::invalid_argument("param_axpy: model spec mismatch");
  }
  ModelParams out = dst;
  for (std::size_t i = 0; i < out.theta.size(); ++i) out.theta[i] += alpha * src.theta[i];
  return out;
}

namespace {

constexpr std::array<char, 4> kMagic{'F', 'K', 'D', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint truncated");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  if constexpr (std::is_same_v<T, double>) {
    return std::bit_cast<double>(bits);
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelParams& params) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, params.spec.head == Head::logits ? 0u : 1u);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.spec.layer_sizes.size()));
  for (std::size_t s : params.spec.layer_sizes) put_le<std::uint64_t>(out, s);
  put_le<std::uint64_t>(out, params.theta.size());
  for (double x : params.theta) put_le<double>(out, x);
}

ModelParams read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("not a parameter checkpoint");
  if (get_le<std::uint32_t>(in) != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version");
  ModelParams p;
  const auto head = get_le<std::uint32_t>(in);
  if (head > 1) throw std::runtime_error("bad checkpoint head tag");
  p.spec.head = head == 0 ? Head::logits : Head::scalar;
  const auto count = get_le<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) p.spec.layer_sizes.push_back(get_le<std::uint64_t>(in));
  p.spec.validate();
  const auto n = get_le<std::uint64_t>(in);
  if (n != p.spec.param_count()) throw std::runtime_error("checkpoint theta length does not match spec");
  p.theta.resize(n);
  for (auto& x : p.theta) x = get_le<double>(in);
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_checkpoint(out, params);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace fedekd
