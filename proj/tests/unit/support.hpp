#ifndef ADVP_TESTS_SUPPORT_HPP
#define ADVP_TESTS_SUPPORT_HPP

// Test-only oracles: a naive scalar forward pass written independently of the
// library kernels, central finite differences, and random network generators.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "advp/nn/network.hpp"
#include "advp/rng.hpp"
#include "advp/tensor.hpp"

namespace advp::test {

using nn::Convolution;
using nn::Dense;
using nn::LayerSpec;
using nn::MaxPool;
using nn::Network;
using nn::Relu;
using nn::Shape3;
using nn::Softmax;

// Plain triple-index loops over a [h][w][c] vector.
struct Volume {
  std::size_t h = 0, w = 0, c = 0;
  std::vector<double> v;
  double& operator()(std::size_t y, std::size_t x, std::size_t k) { return v[(y * w + x) * c + k]; }
  double operator()(std::size_t y, std::size_t x, std::size_t k) const { return v[(y * w + x) * c + k]; }
};

inline std::vector<double> reference_forward(const Network& net, const Image& image) {
  Volume cur{image.height(), image.width(), image.channels(), image.storage()};
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    const LayerSpec& layer = net.layers()[k];
    const auto& W = net.params(k).weights.storage();
    const auto& B = net.params(k).bias.storage();
    Volume next;
    if (const auto* conv = std::get_if<Convolution>(&layer)) {
      next = {cur.h - conv->kernel_h + 1, cur.w - conv->kernel_w + 1, conv->filters, {}};
      next.v.assign(next.h * next.w * next.c, 0.0);
      for (std::size_t y = 0; y < next.h; ++y)
        for (std::size_t x = 0; x < next.w; ++x)
          for (std::size_t f = 0; f < conv->filters; ++f) {
            double s = B[f];
            for (std::size_t dy = 0; dy < conv->kernel_h; ++dy)
              for (std::size_t dx = 0; dx < conv->kernel_w; ++dx)
                for (std::size_t ci = 0; ci < cur.c; ++ci)
                  s += cur(y + dy, x + dx, ci) * W[((dy * conv->kernel_w + dx) * cur.c + ci) * conv->filters + f];
            next(y, x, f) = s;
          }
    } else if (const auto* pool = std::get_if<MaxPool>(&layer)) {
      next = {cur.h / pool->pool_h, cur.w / pool->pool_w, cur.c, {}};
      next.v.assign(next.h * next.w * next.c, 0.0);
      for (std::size_t y = 0; y < next.h; ++y)
        for (std::size_t x = 0; x < next.w; ++x)
          for (std::size_t ci = 0; ci < cur.c; ++ci) {
            double m = -INFINITY;
            for (std::size_t dy = 0; dy < pool->pool_h; ++dy)
              for (std::size_t dx = 0; dx < pool->pool_w; ++dx)
                m = std::max(m, cur(y * pool->pool_h + dy, x * pool->pool_w + dx, ci));
            next(y, x, ci) = m;
          }
    } else if (const auto* dense = std::get_if<Dense>(&layer)) {
      next = {1, 1, dense->units, std::vector<double>(dense->units)};
      for (std::size_t o = 0; o < dense->units; ++o) {
        double s = B[o];
        for (std::size_t i = 0; i < cur.v.size(); ++i) s += cur.v[i] * W[i * dense->units + o];
        next.v[o] = s;
      }
    } else if (std::holds_alternative<Relu>(layer)) {
      next = cur;
      for (double& x : next.v) x = x > 0 ? x : 0;
    } else {
      next = cur;
      double z = 0.0;
      for (double x : cur.v) z += std::exp(x);
      for (double& x : next.v) x = std::exp(x) / z;
    }
    cur = std::move(next);
  }
  return cur.v;
}

inline Image random_image(Rng& rng, std::size_t h, std::size_t w, std::size_t c, double lo = 0.0, double hi = 1.0) {
  Image img = Tensor::image(h, w, c);
  for (double& v : img.values()) v = rng.uniform(lo, hi);
  return img;
}

/// Random network with a mixed conv/pool/dense/relu stack and at most ~10^4 parameters.
inline Network random_network(Rng& rng) {
  const std::size_t h = 6 + rng.below(5), w = 6 + rng.below(5), c = 1 + rng.below(3);
  std::vector<LayerSpec> layers;
  Shape3 s{h, w, c};
  const std::size_t convs = 1 + rng.below(2);
  for (std::size_t i = 0; i < convs; ++i) {
    const std::size_t kh = 2 + rng.below(2), kw = 2 + rng.below(2);
    if (s.height < kh + 1 || s.width < kw + 1) break;
    Convolution conv{kh, kw, 2 + rng.below(4)};
    layers.push_back(conv);
    s = nn::output_shape(conv, s);
    layers.push_back(Relu{});
  }
  if (s.height >= 2 && s.width >= 2 && rng.below(2)) {
    layers.push_back(MaxPool{2, 2});
    s = nn::output_shape(MaxPool{2, 2}, s);
  }
  layers.push_back(Dense{4 + rng.below(8)});
  layers.push_back(Relu{});
  layers.push_back(Dense{2 + rng.below(9)});
  layers.push_back(Softmax{});
  Network net = Network::initialized({h, w, c}, layers, rng.next_u64());
  for (std::size_t k = 0; k < net.layer_count(); ++k)
    for (double& b : net.params(k).bias.values()) b = rng.uniform(-0.1, 0.1);
  return net;
}

inline double seeded_output(const Network& net, const Image& x, const std::vector<double>& seed) {
  const std::vector<double> p = reference_forward(net, x);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += seed[i] * p[i];
  return s;
}

/// Central differences of seed . P(x) at every input element.
inline std::vector<double> finite_difference_gradient(const Network& net, const Image& x,
                                                      const std::vector<double>& seed, double h = 1e-5) {
  std::vector<double> g(x.size());
  Image probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = seeded_output(net, probe, seed);
    probe[i] = x[i] - h;
    const double down = seeded_output(net, probe, seed);
    probe[i] = x[i];
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

/// Smallest distance to a kink at `x`: |pre-activation| over ReLU inputs, and the gap
/// between the two largest entries of every pooling window.
inline double kink_margin(const Network& net, const Image& x) {
  nn::Workspace ws;
  nn::forward_pass(net, x.values(), ws);
  double margin = INFINITY;
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    const auto& in = ws.activations[k];
    if (std::holds_alternative<Relu>(net.layers()[k])) {
      for (double v : in) margin = std::min(margin, std::abs(v));
    } else if (const auto* pool = std::get_if<MaxPool>(&net.layers()[k])) {
      const Shape3& s = net.layer_input(k);
      const Shape3& o = net.layer_output(k);
      for (std::size_t y = 0; y < o.height; ++y)
        for (std::size_t xx = 0; xx < o.width; ++xx)
          for (std::size_t c = 0; c < s.channels; ++c) {
            std::vector<double> win;
            for (std::size_t dy = 0; dy < pool->pool_h; ++dy)
              for (std::size_t dx = 0; dx < pool->pool_w; ++dx)
                win.push_back(in[((y * pool->pool_h + dy) * s.width + xx * pool->pool_w + dx) * s.channels + c]);
            std::sort(win.rbegin(), win.rend());
            margin = std::min(margin, win[0] - win[1]);
          }
    }
  }
  return margin;
}

/// Nudges `x` by small random offsets until every kink is at least `margin` away.
inline Image tie_free_point(const Network& net, Image x, Rng& rng, double margin = 1e-4) {
  for (int attempt = 0; attempt < 200 && kink_margin(net, x) < margin; ++attempt)
    for (double& v : x.values()) v += rng.uniform(-1e-3, 1e-3);
  return x;
}

/// max_i |a_i - b_i| / max(|b|_inf, floor): error relative to the gradient's scale.
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-8) {
  double scale = floor, err = 0.0;
  for (double v : b) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(a[i] - b[i]));
  return err / scale;
}

/// Two-class softmax over logits z_j = sum_i W[i][j] x_i + b_j on an h x w x 1 image.
inline Network linear_two_class(std::size_t h, std::size_t w, const std::vector<double>& w0,
                                const std::vector<double>& w1, double b0 = 0.0, double b1 = 0.0) {
  Network net({h, w, 1}, {Dense{2}, Softmax{}});
  auto& W = net.params(0).weights;
  for (std::size_t i = 0; i < h * w; ++i) {
    W[i * 2 + 0] = w0[i];
    W[i * 2 + 1] = w1[i];
  }
  net.params(0).bias[0] = b0;
  net.params(0).bias[1] = b1;
  return net;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("advp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace advp::test

#endif  // ADVP_TESTS_SUPPORT_HPP
