#ifndef ADVP_NN_ARCHITECTURES_HPP
#define ADVP_NN_ARCHITECTURES_HPP

#include <string>
#include <utility>
#include <vector>

#include "advp/errors.hpp"
#include "advp/nn/layers.hpp"

namespace advp::nn {

struct Architecture {
  Shape3 input;
  std::vector<LayerSpec> layers;
};

// conv-conv-pool-conv-conv-pool-dense-dense-softmax with ReLU after every conv and the first dense.
inline Architecture eight_layer(Shape3 input, std::size_t c1, std::size_t c2, std::size_t hidden,
                                std::size_t classes = 10) {
  return {input,
          {Convolution{3, 3, c1}, Relu{}, Convolution{3, 3, c1}, Relu{}, MaxPool{2, 2}, Convolution{3, 3, c2}, Relu{},
           Convolution{3, 3, c2}, Relu{}, MaxPool{2, 2}, Dense{hidden}, Relu{}, Dense{classes}, Softmax{}}};
}

inline Architecture mnist_full() { return eight_layer({28, 28, 1}, 32, 64, 128); }
inline Architecture cifar_full() { return eight_layer({32, 32, 3}, 64, 128, 512); }
// Half-width variants used for desk-scale runs.
inline Architecture mnist_desk() { return eight_layer({28, 28, 1}, 16, 32, 64); }
inline Architecture cifar_desk() { return eight_layer({32, 32, 3}, 32, 64, 256); }

inline Architecture architecture_by_name(const std::string& name) {
  if (name == "mnist") return mnist_full();
  if (name == "mnist-desk") return mnist_desk();
  if (name == "cifar") return cifar_full();
  if (name == "cifar-desk") return cifar_desk();
  throw ConfigError("unknown architecture '" + name + "' (expected mnist, mnist-desk, cifar, cifar-desk)");
}

}  // namespace advp::nn

#endif  // ADVP_NN_ARCHITECTURES_HPP
