#ifndef ADVP_ATTACK_BASELINES_HPP
#define ADVP_ATTACK_BASELINES_HPP

// Comparison attacks. Both stop on the same perceptual-distance budget as the greedy
// attack: a step whose result would exceed max_distance is not taken.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "advp/attack/result.hpp"
#include "advp/errors.hpp"
#include "advp/nn/network.hpp"
#include "advp/nn/train.hpp"
#include "advp/perception.hpp"

namespace advp::attack {

inline constexpr double kUnlimitedDistance = std::numeric_limits<double>::infinity();

/// Iterative targeted fast gradient sign method.
struct FgsmConfig {
  std::size_t target = 0;
  double step = 0.005;  // alpha; 0 leaves the image untouched
  std::size_t max_iterations = 500;
  double max_distance = kUnlimitedDistance;
  StopMode mode = StopMode::minimal;
  double smoothing = 100.0;  // only used to rank iterates in robust mode
};

/// Each iteration moves every element by alpha * sign(d CE(P, t) / dx) downhill, clipped to [0, 1].
inline AttackResult fgsm_attack(const nn::Network& net, const Image& image, const FgsmConfig& cfg,
                                const SensitivityMap& sen) {
  if (!(cfg.step >= 0.0)) throw ConfigError("FGSM step must be non-negative");
  if (!(cfg.max_distance >= 0.0)) throw ConfigError("distance budget must be non-negative");
  detail::AttackState state(net, image, sen, cfg.target, cfg.mode, cfg.smoothing);
  if (cfg.step == 0.0) return state.result();

  while (true) {
    if (cfg.mode == StopMode::minimal && state.on_target()) break;
    if (state.iterations() >= cfg.max_iterations) break;
    const std::vector<double> grad = state.gradient(nn::cross_entropy_seed(state.probs(), cfg.target));
    Image candidate = state.image();
    bool changed = false;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      if (grad[i] == 0.0) continue;
      const double v = std::clamp(candidate[i] + (grad[i] > 0.0 ? -cfg.step : cfg.step), 0.0, 1.0);
      changed |= v != candidate[i];
      candidate[i] = v;
    }
    if (!changed) state.stall("FGSM stalled: zero or saturated gradient everywhere");
    if (state.distance_of(candidate) > cfg.max_distance) break;
    state.image() = std::move(candidate);
    state.commit_step();
  }
  return state.result();
}

/// Simplified single-element saliency attack (JSMA-style).
struct JsmaConfig {
  std::size_t target = 0;
  double theta = 1.0;  // per-pick increase, in (0, 1]
  std::size_t max_iterations = 5000;
  double max_distance = kUnlimitedDistance;
  StopMode mode = StopMode::minimal;
  double smoothing = 100.0;
};

/// Each iteration raises the unsaturated element with the largest positive dP_t/dx by theta (capped at 1).
inline AttackResult jsma_attack(const nn::Network& net, const Image& image, const JsmaConfig& cfg,
                                const SensitivityMap& sen) {
  if (!(cfg.theta > 0.0 && cfg.theta <= 1.0)) throw ConfigError("JSMA theta must lie in (0, 1]");
  if (!(cfg.max_distance >= 0.0)) throw ConfigError("distance budget must be non-negative");
  detail::AttackState state(net, image, sen, cfg.target, cfg.mode, cfg.smoothing);
  std::vector<double> seed(net.class_count(), 0.0);
  seed.at(cfg.target) = 1.0;

  while (true) {
    if (cfg.mode == StopMode::minimal && state.on_target()) break;
    if (state.iterations() >= cfg.max_iterations) break;
    const std::vector<double> grad = state.gradient(seed);
    const Image& x = state.image();
    std::size_t pick = x.size();
    for (std::size_t i = 0; i < x.size(); ++i)
      if (grad[i] > 0.0 && x[i] < 1.0 && (pick == x.size() || grad[i] > grad[pick])) pick = i;
    if (pick == x.size()) state.stall("JSMA stalled: no unsaturated element with positive target gradient");
    Image candidate = x;
    candidate[pick] = std::min(1.0, candidate[pick] + cfg.theta);
    if (state.distance_of(candidate) > cfg.max_distance) break;
    state.image() = std::move(candidate);
    state.commit_step();
  }
  return state.result();
}

}  // namespace advp::attack

#endif  // ADVP_ATTACK_BASELINES_HPP
