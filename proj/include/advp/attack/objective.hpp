#ifndef ADVP_ATTACK_OBJECTIVE_HPP
#define ADVP_ATTACK_OBJECTIVE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "advp/errors.hpp"
#include "advp/nn/prob_vector.hpp"
#include "advp/perception.hpp"
#include "advp/tensor.hpp"

namespace advp::attack {

using nn::ProbVector;

inline void require_target(const ProbVector& probs, std::size_t target) {
  if (probs.size() < 2) throw ConfigError("gap needs at least two classes");
  if (target >= probs.size())
    throw ConfigError("target class " + std::to_string(target) + " out of range for " + std::to_string(probs.size()) +
                      " classes");
}

/// P_t minus the largest probability among the other classes. Positive iff t is the strict argmax.
inline double gap(const ProbVector& probs, std::size_t target) {
  require_target(probs, target);
  double best_other = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (i != target) best_other = std::max(best_other, probs[i]);
  return probs[target] - best_other;
}

/// Log-sum-exp soft maximum log(sum_j exp(k v_j)) / k, shifted by the max for overflow safety.
/// Lies in [max(v), max(v) + log(n) / k].
inline double smoothed_max(std::span<const double> values, double k) {
  if (values.empty()) throw ConfigError("smoothed_max of an empty list");
  if (!(k > 0.0)) throw ConfigError("smoothing constant k must be positive");
  const double m = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp(k * (v - m));
  return m + std::log(sum) / k;
}

inline std::vector<double> others(const ProbVector& probs, std::size_t target) {
  std::vector<double> rest;
  rest.reserve(probs.size() - 1);
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (i != target) rest.push_back(probs[i]);
  return rest;
}

/// Differentiable gap: P_t - smoothed_max({P_i : i != t}, k).
inline double smoothed_gap(const ProbVector& probs, std::size_t target, double k) {
  require_target(probs, target);
  return probs[target] - smoothed_max(others(probs, target), k);
}

/// d smoothed_gap / d P: +1 on the target, minus the temperature-k softmax weights of
/// the non-target probabilities elsewhere. Fed to input_gradient as the output seed.
inline std::vector<double> gap_output_seed(const ProbVector& probs, std::size_t target, double k) {
  require_target(probs, target);
  if (!(k > 0.0)) throw ConfigError("smoothing constant k must be positive");
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (i != target) m = std::max(m, probs[i]);
  std::vector<double> seed(probs.size());
  double z = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (i != target) {
      seed[i] = std::exp(k * (probs[i] - m));
      z += seed[i];
    }
  for (std::size_t i = 0; i < probs.size(); ++i) seed[i] = i == target ? 1.0 : -seed[i] / z;
  return seed;
}

/// |d Gap / d x_i| / Sen(x_i). The gradient sign is the perturbation direction and is
/// kept by the caller.
inline Tensor perturb_priority(const Tensor& gap_gradient, const SensitivityMap& sen) {
  require_same_shape(gap_gradient, sen.values(), "perturb_priority");
  Tensor out(gap_gradient.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(gap_gradient[i]) / sen[i];
  return out;
}

}  // namespace advp::attack

#endif  // ADVP_ATTACK_OBJECTIVE_HPP
