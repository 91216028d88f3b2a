#ifndef ADVP_NN_NETWORK_HPP
#define ADVP_NN_NETWORK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "advp/errors.hpp"
#include "advp/nn/layers.hpp"
#include "advp/nn/prob_vector.hpp"
#include "advp/rng.hpp"
#include "advp/tensor.hpp"

namespace advp::nn {

/// Learned coefficients of one layer. Both tensors are empty for parameterless layers.
///   convolution: weights [kernel_h, kernel_w, in_channels, filters], bias [filters]
///   dense:       weights [in_size, units], bias [units]
struct LayerParams {
  Tensor weights;
  Tensor bias;
  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Feed-forward classifier: an input shape, an ordered layer list ending in a
/// single softmax, and coefficients for the convolution/dense layers.
/// Immutable once built; forward/backward take caller-owned scratch space.
class Network {
 public:
  Network() = default;

  /// Validates the layer stack and allocates zeroed coefficients.
  Network(Shape3 input, std::vector<LayerSpec> layers) : input_(input), layers_(std::move(layers)) {
    if (input_.size() == 0) throw ConfigError("network input shape must be positive");
    if (layers_.empty() || !std::holds_alternative<Softmax>(layers_.back()))
      throw ConfigError("the final layer must be softmax");
    shapes_.push_back(input_);
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      if (k + 1 < layers_.size() && std::holds_alternative<Softmax>(layers_[k]))
        throw ConfigError("softmax must appear exactly once, as the final layer");
      shapes_.push_back(output_shape(layers_[k], shapes_.back()));
    }
    if (class_count() < 2) throw ConfigError("a classifier needs at least two classes");
    params_.resize(layers_.size());
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const Shape3& in = shapes_[k];
      if (const auto* conv = std::get_if<Convolution>(&layers_[k])) {
        params_[k].weights = Tensor({conv->kernel_h, conv->kernel_w, in.channels, conv->filters});
        params_[k].bias = Tensor({conv->filters});
      } else if (const auto* dense = std::get_if<Dense>(&layers_[k])) {
        params_[k].weights = Tensor({in.size(), dense->units});
        params_[k].bias = Tensor({dense->units});
      }
    }
  }

  /// He-style uniform initialization: weights ~ U(-s, s), s = sqrt(6 / fan_in); biases zero.
  static Network initialized(Shape3 input, std::vector<LayerSpec> layers, std::uint64_t seed) {
    Network net(input, std::move(layers));
    Rng rng(seed);
    for (std::size_t k = 0; k < net.layers_.size(); ++k) {
      auto& w = net.params_[k].weights;
      if (w.empty()) continue;
      const std::size_t fan_in = w.size() / w.shape().back();
      const double s = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (double& v : w.values()) v = rng.uniform(-s, s);
    }
    return net;
  }

  const Shape3& input_shape() const { return input_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::size_t layer_count() const { return layers_.size(); }
  const Shape3& layer_input(std::size_t k) const { return shapes_[k]; }
  const Shape3& layer_output(std::size_t k) const { return shapes_[k + 1]; }
  std::size_t class_count() const { return shapes_.back().size(); }

  const LayerParams& params(std::size_t k) const { return params_[k]; }
  LayerParams& params(std::size_t k) { return params_[k]; }
  const std::vector<LayerParams>& all_params() const { return params_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.weights.size() + p.bias.size();
    return n;
  }

  friend bool operator==(const Network&, const Network&) = default;

 private:
  Shape3 input_;
  std::vector<LayerSpec> layers_;
  std::vector<Shape3> shapes_;  // shapes_[k] feeds layer k; shapes_.back() is the output
  std::vector<LayerParams> params_;
};

/// Per-call scratch buffers. One per thread; a Network may be shared.
struct Workspace {
  std::vector<std::vector<double>> activations;  // [0] is the input, [k + 1] the output of layer k
  std::vector<std::vector<std::uint32_t>> pool_index;
  std::vector<double> grad;
  std::vector<double> grad_next;
};

/// Gradients with the same layout as Network::all_params().
using ParamGradients = std::vector<LayerParams>;

inline ParamGradients zero_gradients(const Network& net) {
  ParamGradients g;
  g.reserve(net.layer_count());
  for (const auto& p : net.all_params()) {
    LayerParams z;
    if (!p.weights.empty()) {
      z.weights = Tensor(p.weights.shape());
      z.bias = Tensor(p.bias.shape());
    }
    g.push_back(std::move(z));
  }
  return g;
}

namespace detail {

inline void conv_forward(const Convolution& c, const Shape3& in_s, const Shape3& out_s, const double* in,
                         const LayerParams& p, double* out) {
  const std::size_t K = c.filters;
  const std::size_t row_len = c.kernel_w * in_s.channels;
  const double* w = p.weights.storage().data();
  const double* b = p.bias.storage().data();
  for (std::size_t y = 0; y < out_s.height; ++y) {
    for (std::size_t x = 0; x < out_s.width; ++x) {
      double* o = out + (y * out_s.width + x) * K;
      std::copy(b, b + K, o);
      for (std::size_t dy = 0; dy < c.kernel_h; ++dy) {
        const double* irow = in + ((y + dy) * in_s.width + x) * in_s.channels;
        const double* wrow = w + dy * row_len * K;
        for (std::size_t j = 0; j < row_len; ++j) {
          const double v = irow[j];
          const double* wk = wrow + j * K;
          for (std::size_t k = 0; k < K; ++k) o[k] += v * wk[k];
        }
      }
    }
  }
}

inline void conv_backward(const Convolution& c, const Shape3& in_s, const Shape3& out_s, const double* in,
                          const LayerParams& p, const double* g_out, double* g_in, LayerParams* g_params) {
  const std::size_t K = c.filters;
  const std::size_t row_len = c.kernel_w * in_s.channels;
  const double* w = p.weights.storage().data();
  if (g_in) std::fill(g_in, g_in + in_s.size(), 0.0);
  double* gw = g_params ? g_params->weights.storage().data() : nullptr;
  double* gb = g_params ? g_params->bias.storage().data() : nullptr;
  for (std::size_t y = 0; y < out_s.height; ++y) {
    for (std::size_t x = 0; x < out_s.width; ++x) {
      const double* g = g_out + (y * out_s.width + x) * K;
      if (std::all_of(g, g + K, [](double v) { return v == 0.0; })) continue;  // common after ReLU
      if (gb)
        for (std::size_t k = 0; k < K; ++k) gb[k] += g[k];
      for (std::size_t dy = 0; dy < c.kernel_h; ++dy) {
        const std::size_t offset = ((y + dy) * in_s.width + x) * in_s.channels;
        const double* wrow = w + dy * row_len * K;
        if (g_in) {
          double* drow = g_in + offset;
          for (std::size_t j = 0; j < row_len; ++j) {
            const double* wk = wrow + j * K;
            double s = 0.0;
            for (std::size_t k = 0; k < K; ++k) s += g[k] * wk[k];
            drow[j] += s;
          }
        }
        if (gw) {
          const double* irow = in + offset;
          double* gwrow = gw + dy * row_len * K;
          for (std::size_t j = 0; j < row_len; ++j) {
            const double v = irow[j];
            double* gk = gwrow + j * K;
            for (std::size_t k = 0; k < K; ++k) gk[k] += v * g[k];
          }
        }
      }
    }
  }
}

inline void pool_forward(const MaxPool& m, const Shape3& in_s, const Shape3& out_s, const double* in, double* out,
                         std::uint32_t* index) {
  const std::size_t C = in_s.channels;
  for (std::size_t y = 0; y < out_s.height; ++y)
    for (std::size_t x = 0; x < out_s.width; ++x)
      for (std::size_t c = 0; c < C; ++c) {
        std::size_t best = ((y * m.pool_h) * in_s.width + x * m.pool_w) * C + c;
        for (std::size_t dy = 0; dy < m.pool_h; ++dy)
          for (std::size_t dx = 0; dx < m.pool_w; ++dx) {
            const std::size_t i = ((y * m.pool_h + dy) * in_s.width + (x * m.pool_w + dx)) * C + c;
            if (in[i] > in[best]) best = i;  // first maximum in scan order wins ties
          }
        const std::size_t o = (y * out_s.width + x) * C + c;
        out[o] = in[best];
        index[o] = static_cast<std::uint32_t>(best);
      }
}

inline void dense_forward(const Shape3& in_s, std::size_t units, const double* in, const LayerParams& p,
                          double* out) {
  const double* w = p.weights.storage().data();
  const double* b = p.bias.storage().data();
  std::copy(b, b + units, out);
  for (std::size_t i = 0; i < in_s.size(); ++i) {
    const double v = in[i];
    if (v == 0.0) continue;
    const double* wi = w + i * units;
    for (std::size_t o = 0; o < units; ++o) out[o] += v * wi[o];
  }
}

inline void dense_backward(const Shape3& in_s, std::size_t units, const double* in, const LayerParams& p,
                           const double* g_out, double* g_in, LayerParams* g_params) {
  const double* w = p.weights.storage().data();
  if (g_params) {
    double* gw = g_params->weights.storage().data();
    double* gb = g_params->bias.storage().data();
    for (std::size_t o = 0; o < units; ++o) gb[o] += g_out[o];
    for (std::size_t i = 0; i < in_s.size(); ++i) {
      const double v = in[i];
      if (v == 0.0) continue;
      double* gi = gw + i * units;
      for (std::size_t o = 0; o < units; ++o) gi[o] += v * g_out[o];
    }
  }
  if (g_in)
    for (std::size_t i = 0; i < in_s.size(); ++i) {
      const double* wi = w + i * units;
      double s = 0.0;
      for (std::size_t o = 0; o < units; ++o) s += wi[o] * g_out[o];
      g_in[i] = s;
    }
}

inline void softmax_forward(std::size_t n, const double* in, double* out) {
  const double m = *std::max_element(in, in + n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - m);
    sum += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
}

}  // namespace detail

/// Runs every layer, keeping activations in `ws` for a later backward_pass.
inline void forward_pass(const Network& net, std::span<const double> input, Workspace& ws) {
  const std::size_t L = net.layer_count();
  if (input.size() != net.input_shape().size())
    throw ConfigError("input has " + std::to_string(input.size()) + " values, network expects " +
                      to_string(net.input_shape()));
  ws.activations.resize(L + 1);
  ws.pool_index.resize(L);
  ws.activations[0].assign(input.begin(), input.end());
  for (std::size_t k = 0; k < L; ++k) {
    const Shape3& in_s = net.layer_input(k);
    const Shape3& out_s = net.layer_output(k);
    const double* in = ws.activations[k].data();
    auto& out = ws.activations[k + 1];
    out.resize(out_s.size());
    std::visit(
        [&](const auto& layer) {
          using T = std::decay_t<decltype(layer)>;
          if constexpr (std::is_same_v<T, Convolution>) {
            detail::conv_forward(layer, in_s, out_s, in, net.params(k), out.data());
          } else if constexpr (std::is_same_v<T, MaxPool>) {
            ws.pool_index[k].resize(out_s.size());
            detail::pool_forward(layer, in_s, out_s, in, out.data(), ws.pool_index[k].data());
          } else if constexpr (std::is_same_v<T, Dense>) {
            detail::dense_forward(in_s, layer.units, in, net.params(k), out.data());
          } else if constexpr (std::is_same_v<T, Relu>) {
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
          } else {
            detail::softmax_forward(out.size(), in, out.data());
          }
        },
        net.layers()[k]);
    if (!all_finite(out))
      throw NumericError("non-finite output in layer " + std::to_string(k) + " (" + kind_name(net.layers()[k]) + ")",
                         k);
  }
}

/// Back-propagates d(seed . P)/d(.) through the activations stored by forward_pass.
/// Accumulates coefficient gradients into `param_grads` when given, and writes the
/// input gradient into `input_grad` when given.
inline void backward_pass(const Network& net, Workspace& ws, std::span<const double> output_seed,
                          ParamGradients* param_grads, std::vector<double>* input_grad) {
  const std::size_t L = net.layer_count();
  if (output_seed.size() != net.class_count())
    throw ConfigError("output seed has " + std::to_string(output_seed.size()) + " entries, network has " +
                      std::to_string(net.class_count()) + " classes");
  if (ws.activations.size() != L + 1) throw ConfigError("backward_pass requires a preceding forward_pass");
  ws.grad.assign(output_seed.begin(), output_seed.end());
  for (std::size_t k = L; k-- > 0;) {
    const Shape3& in_s = net.layer_input(k);
    const Shape3& out_s = net.layer_output(k);
    const bool need_input = k > 0 || input_grad != nullptr;
    LayerParams* gp = param_grads ? &(*param_grads)[k] : nullptr;
    const double* in = ws.activations[k].data();
    const double* g = ws.grad.data();
    ws.grad_next.assign(in_s.size(), 0.0);
    double* g_in = need_input ? ws.grad_next.data() : nullptr;
    std::visit(
        [&](const auto& layer) {
          using T = std::decay_t<decltype(layer)>;
          if constexpr (std::is_same_v<T, Convolution>) {
            detail::conv_backward(layer, in_s, out_s, in, net.params(k), g, g_in, gp);
          } else if constexpr (std::is_same_v<T, MaxPool>) {
            if (g_in)
              for (std::size_t o = 0; o < out_s.size(); ++o) g_in[ws.pool_index[k][o]] += g[o];
          } else if constexpr (std::is_same_v<T, Dense>) {
            detail::dense_backward(in_s, layer.units, in, net.params(k), g, g_in, gp);
          } else if constexpr (std::is_same_v<T, Relu>) {
            // Subgradient 0 at the kink.
            if (g_in)
              for (std::size_t i = 0; i < in_s.size(); ++i) g_in[i] = in[i] > 0.0 ? g[i] : 0.0;
          } else {
            const auto& p = ws.activations[k + 1];
            double dot = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) dot += g[i] * p[i];
            if (g_in)
              for (std::size_t i = 0; i < p.size(); ++i) g_in[i] = p[i] * (g[i] - dot);
          }
        },
        net.layers()[k]);
    if (!all_finite(ws.grad_next))
      throw NumericError("non-finite gradient in layer " + std::to_string(k) + " (" + kind_name(net.layers()[k]) + ")",
                         k);
    std::swap(ws.grad, ws.grad_next);
  }
  if (input_grad) *input_grad = ws.grad;
}

inline void require_input(const Network& net, const Image& image) {
  if (image.shape() != net.input_shape().extents())
    throw ConfigError("image shape " + advp::to_string(image.shape()) + " does not match network input " +
                      to_string(net.input_shape()));
}

inline ProbVector forward(const Network& net, const Image& image, Workspace& ws) {
  require_input(net, image);
  forward_pass(net, image.values(), ws);
  return ProbVector(ws.activations.back());
}

inline ProbVector forward(const Network& net, const Image& image) {
  Workspace ws;
  return forward(net, image, ws);
}

/// Exact gradient of sum_j seed_j * P_j(image) with respect to every input element.
inline Tensor input_gradient(const Network& net, const Image& image, std::span<const double> output_seed,
                             Workspace& ws) {
  require_input(net, image);
  forward_pass(net, image.values(), ws);
  std::vector<double> g;
  backward_pass(net, ws, output_seed, nullptr, &g);
  return Tensor(image.shape(), std::move(g));
}

inline Tensor input_gradient(const Network& net, const Image& image, std::span<const double> output_seed) {
  Workspace ws;
  return input_gradient(net, image, output_seed, ws);
}

}  // namespace advp::nn

#endif  // ADVP_NN_NETWORK_HPP
