#ifndef ADVP_NN_LAYERS_HPP
#define ADVP_NN_LAYERS_HPP

#include <cstddef>
#include <string>
#include <type_traits>
#include <variant>

#include "advp/errors.hpp"
#include "advp/tensor.hpp"

namespace advp::nn {

struct Shape3 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t size() const { return height * width * channels; }
  Extents extents() const { return {height, width, channels}; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

inline std::string to_string(const Shape3& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" + std::to_string(s.channels);
}

// Valid (unpadded) convolution, stride 1.
struct Convolution {
  std::size_t kernel_h = 3;
  std::size_t kernel_w = 3;
  std::size_t filters = 1;
  friend bool operator==(const Convolution&, const Convolution&) = default;
};

// Non-overlapping max pooling: stride equals the pool extent, trailing remainder dropped.
struct MaxPool {
  std::size_t pool_h = 2;
  std::size_t pool_w = 2;
  friend bool operator==(const MaxPool&, const MaxPool&) = default;
};

// Fully connected; flattens its input in row-major (h, w, c) order.
struct Dense {
  std::size_t units = 1;
  friend bool operator==(const Dense&, const Dense&) = default;
};

struct Relu {
  friend bool operator==(const Relu&, const Relu&) = default;
};

struct Softmax {
  friend bool operator==(const Softmax&, const Softmax&) = default;
};

using LayerSpec = std::variant<Convolution, MaxPool, Dense, Relu, Softmax>;

inline std::string kind_name(const LayerSpec& layer) {
  return std::visit(
      [](const auto& l) -> std::string {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, Convolution>) return "convolution";
        else if constexpr (std::is_same_v<L, MaxPool>) return "max_pool";
        else if constexpr (std::is_same_v<L, Dense>) return "dense";
        else if constexpr (std::is_same_v<L, Relu>) return "relu";
        else return "softmax";
      },
      layer);
}

inline bool has_parameters(const LayerSpec& layer) {
  return std::holds_alternative<Convolution>(layer) || std::holds_alternative<Dense>(layer);
}

inline Shape3 output_shape(const LayerSpec& layer, const Shape3& in) {
  return std::visit(
      [&](const auto& l) -> Shape3 {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, Convolution>) {
          if (l.kernel_h < 1 || l.kernel_w < 1 || l.filters < 1)
            throw ConfigError("convolution kernel extents and filter count must be >= 1");
          if (l.kernel_h > in.height || l.kernel_w > in.width)
            throw ConfigError("convolution kernel " + std::to_string(l.kernel_h) + "x" + std::to_string(l.kernel_w) +
                              " exceeds input " + to_string(in));
          return {in.height - l.kernel_h + 1, in.width - l.kernel_w + 1, l.filters};
        } else if constexpr (std::is_same_v<L, MaxPool>) {
          if (l.pool_h < 1 || l.pool_w < 1) throw ConfigError("pool extents must be >= 1");
          if (l.pool_h > in.height || l.pool_w > in.width)
            throw ConfigError("pool extent exceeds input " + to_string(in));
          return {in.height / l.pool_h, in.width / l.pool_w, in.channels};
        } else if constexpr (std::is_same_v<L, Dense>) {
          if (l.units < 1) throw ConfigError("dense layer needs >= 1 unit");
          return {1, 1, l.units};
        } else {
          return in;
        }
      },
      layer);
}

}  // namespace advp::nn

#endif  // ADVP_NN_LAYERS_HPP
