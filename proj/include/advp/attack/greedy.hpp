#ifndef ADVP_ATTACK_GREEDY_HPP
#define ADVP_ATTACK_GREEDY_HPP

#include <algorithm>
#include <cstddef>
#include <vector>

#include "advp/attack/objective.hpp"
#include "advp/attack/result.hpp"
#include "advp/nn/network.hpp"
#include "advp/perception.hpp"

namespace advp::attack {

/// Indices of the (at most) `count` highest-priority eligible elements, best first;
/// equal priorities go to the lower flat index.
inline std::vector<std::size_t> select_top(std::span<const double> priority, std::span<const char> eligible,
                                           std::size_t count) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < priority.size(); ++i)
    if (eligible[i]) idx.push_back(i);
  const std::size_t n = std::min(count, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return priority[a] > priority[b] || (priority[a] == priority[b] && a < b);
                    });
  idx.resize(n);
  return idx;
}

/// Greedy perceptual attack. Each iteration ranks elements by |dGap/dx| / Sen, moves
/// the top m admissible ones by delta along the gradient sign, and re-measures the
/// perceptual distance; it stops once the distance reaches the budget.
///
/// An element is admissible when its gradient is non-zero, it is not saturated in the
/// move direction, and the move does not shrink its displacement from the original.
/// The last rule keeps the net displacement equal to the accumulated step magnitudes,
/// so the distance grows strictly every iteration.
inline AttackResult greedy_attack(const nn::Network& net, const Image& image, const AttackConfig& cfg,
                                  const SensitivityMap& sen) {
  cfg.validate(net.class_count());
  detail::AttackState state(net, image, sen, cfg.target, cfg.mode, cfg.smoothing);
  const std::size_t n = image.size();
  std::vector<double> priority(n);
  std::vector<char> eligible(n);

  while (true) {
    if (cfg.mode == StopMode::minimal && state.on_target()) break;
    if (state.distance() >= cfg.max_distance || state.iterations() >= cfg.max_iterations) break;

    const std::vector<double> grad = state.gradient(gap_output_seed(state.probs(), cfg.target, cfg.smoothing));
    Image& x = state.image();
    const Image& x0 = state.original();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grad[i];
      priority[i] = std::abs(g) / sen[i];
      const double moved = x[i] - x0[i];
      eligible[i] = (g > 0.0 && x[i] < 1.0 && moved >= 0.0) || (g < 0.0 && x[i] > 0.0 && moved <= 0.0);
    }
    const std::vector<std::size_t> chosen = select_top(priority, eligible, cfg.pixels_per_iteration);
    if (chosen.empty()) state.stall("greedy attack stalled: no admissible element to perturb");
    for (std::size_t i : chosen) x[i] = std::clamp(x[i] + (grad[i] > 0.0 ? cfg.step : -cfg.step), 0.0, 1.0);
    state.commit_step();
  }
  return state.result();
}

inline AttackResult greedy_attack(const nn::Network& net, const Image& image, const AttackConfig& cfg) {
  return greedy_attack(net, image, cfg, sensitivity_map(image, cfg.window, cfg.sd_floor));
}

}  // namespace advp::attack

#endif  // ADVP_ATTACK_GREEDY_HPP
