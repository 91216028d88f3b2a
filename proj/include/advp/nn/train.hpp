#ifndef ADVP_NN_TRAIN_HPP
#define ADVP_NN_TRAIN_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "advp/errors.hpp"
#include "advp/nn/network.hpp"
#include "advp/rng.hpp"

namespace advp::nn {

inline constexpr double kLogEpsilon = 1e-12;

inline double cross_entropy(const ProbVector& probs, std::size_t label) {
  if (label >= probs.size()) throw ConfigError("label " + std::to_string(label) + " out of range");
  return -std::log(probs[label] + kLogEpsilon);
}

/// Output seed whose back-propagation yields the gradient of cross_entropy(P, label).
inline std::vector<double> cross_entropy_seed(const ProbVector& probs, std::size_t label) {
  std::vector<double> seed(probs.size(), 0.0);
  seed.at(label) = -1.0 / (probs[label] + kLogEpsilon);
  return seed;
}

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
};

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;  // drives the per-epoch shuffle
  std::function<void(const EpochStats&)> on_epoch;
};

/// Plain mini-batch SGD on mean cross-entropy. Deterministic for a given seed.
inline Network train(Network net, std::span<const Image> images, std::span<const std::size_t> labels,
                     const TrainConfig& cfg) {
  if (images.empty()) throw ConfigError("training set is empty");
  if (images.size() != labels.size()) throw ConfigError("image/label count mismatch");
  if (cfg.batch_size == 0) throw ConfigError("batch size must be >= 1");
  for (std::size_t label : labels)
    if (label >= net.class_count()) throw ConfigError("label " + std::to_string(label) + " out of range");

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(images.size());
  Workspace ws;
  ParamGradients grads = zero_gradients(net);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += cfg.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (auto& g : grads) {
        std::fill(g.weights.values().begin(), g.weights.values().end(), 0.0);
        std::fill(g.bias.values().begin(), g.bias.values().end(), 0.0);
      }
      try {
        for (std::size_t i = start; i < end; ++i) {
          const std::size_t s = order[i];
          ProbVector p = forward(net, images[s], ws);
          const double loss = cross_entropy(p, labels[s]);
          if (!std::isfinite(loss)) throw NumericError("loss is not finite");
          loss_sum += loss;
          correct += p.argmax() == labels[s];
          backward_pass(net, ws, cross_entropy_seed(p, labels[s]), &grads, nullptr);
        }
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(batch) + ": " + e.what(),
                           e.layer());
      }
      const double scale = cfg.learning_rate / static_cast<double>(end - start);
      for (std::size_t k = 0; k < net.layer_count(); ++k) {
        auto& p = net.params(k);
        for (std::size_t j = 0; j < p.weights.size(); ++j) p.weights[j] -= scale * grads[k].weights[j];
        for (std::size_t j = 0; j < p.bias.size(); ++j) p.bias[j] -= scale * grads[k].bias[j];
      }
    }
    if (cfg.on_epoch)
      cfg.on_epoch({epoch, loss_sum / static_cast<double>(order.size()),
                    static_cast<double>(correct) / static_cast<double>(order.size())});
  }
  return net;
}

inline double accuracy(const Network& net, std::span<const Image> images, std::span<const std::size_t> labels) {
  if (images.empty()) return 0.0;
  Workspace ws;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < images.size(); ++i) correct += forward(net, images[i], ws).argmax() == labels[i];
  return static_cast<double>(correct) / static_cast<double>(images.size());
}

}  // namespace advp::nn

#endif  // ADVP_NN_TRAIN_HPP
