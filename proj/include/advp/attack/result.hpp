#ifndef ADVP_ATTACK_RESULT_HPP
#define ADVP_ATTACK_RESULT_HPP

#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "advp/attack/objective.hpp"
#include "advp/errors.hpp"
#include "advp/nn/network.hpp"
#include "advp/perception.hpp"
#include "advp/tensor.hpp"

namespace advp::attack {

enum class StopMode {
  minimal,        // stop at the first iterate classified as the target
  robust_budget,  // spend the distance budget, keep the best-gap target iterate
};

inline std::string to_string(StopMode m) { return m == StopMode::minimal ? "minimal" : "robust"; }

inline StopMode parse_stop_mode(const std::string& s) {
  if (s == "minimal" || s == "minimal-stop") return StopMode::minimal;
  if (s == "robust" || s == "robust-budget") return StopMode::robust_budget;
  throw ConfigError("unknown attack mode '" + s + "' (expected minimal or robust)");
}

/// Settings of the greedy perceptual attack.
struct AttackConfig {
  std::size_t target = 0;
  double smoothing = 100.0;              // k of the log-sum-exp max
  std::size_t pixels_per_iteration = 20;  // m
  double step = 0.01;                    // delta
  double max_distance = 70.0;            // D_max
  StopMode mode = StopMode::minimal;
  std::size_t max_iterations = 5000;
  std::size_t window = kDefaultWindow;
  double sd_floor = kDefaultSdFloor;

  void validate(std::size_t class_count) const {
    if (target >= class_count) throw ConfigError("target class " + std::to_string(target) + " out of range");
    if (!(smoothing > 0.0)) throw ConfigError("smoothing constant k must be positive");
    if (pixels_per_iteration < 1) throw ConfigError("pixels per iteration must be >= 1");
    if (!(step > 0.0)) throw ConfigError("step magnitude must be positive");
    if (!(max_distance >= 0.0)) throw ConfigError("distance budget must be non-negative");
    if (max_iterations < 1) throw ConfigError("iteration cap must be >= 1");
  }
};

struct TraceEntry {
  std::size_t iteration = 0;
  double distance = 0.0;
  double gap = 0.0;
  std::size_t predicted = 0;
  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct AttackResult {
  Image adversarial;
  bool success = false;
  std::size_t predicted = 0;
  double gap = 0.0;       // unsmoothed gap of the returned image
  double distance = 0.0;  // perceptual distance of the returned image
  std::size_t iterations = 0;        // iterations actually run
  std::size_t result_iteration = 0;  // iteration that produced `adversarial` (0 = original)
  std::vector<TraceEntry> trace;     // one entry per iteration, after its perturbation

  friend bool operator==(const AttackResult&, const AttackResult&) = default;
};

/// The attack could not make progress (no admissible element to move).
class StalledAttackError : public Error {
 public:
  StalledAttackError(const std::string& what, AttackResult partial) : Error(what), partial_(std::move(partial)) {}
  const AttackResult& partial() const { return partial_; }

 private:
  AttackResult partial_;
};

inline std::string trace_csv(const AttackResult& r) {
  std::string out = "iteration,distance,gap,predicted_class\r\n";
  char buf[128];
  for (const auto& e : r.trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%zu\r\n", e.iteration, e.distance, e.gap, e.predicted);
    out += buf;
  }
  return out;
}

namespace detail {

/// Iterate bookkeeping shared by the greedy attack and the baselines: current image,
/// its probabilities and distance, the trace, and the best-gap target iterate.
class AttackState {
 public:
  AttackState(const nn::Network& net, const Image& original, const SensitivityMap& sen, std::size_t target,
              StopMode mode, double smoothing)
      : net_(net), original_(original), sen_(sen), target_(target), mode_(mode), smoothing_(smoothing),
        current_(original) {
    nn::require_input(net, original);
    require_same_shape(original, sen.values(), "attack sensitivity map");
    if (target >= net.class_count()) throw ConfigError("target class " + std::to_string(target) + " out of range");
    evaluate();
    consider_best();
  }

  Image& image() { return current_; }
  const Image& image() const { return current_; }
  const Image& original() const { return original_; }
  const nn::ProbVector& probs() const { return probs_; }
  double distance() const { return distance_; }
  std::size_t iterations() const { return iterations_; }
  bool on_target() const { return probs_.argmax() == target_; }

  /// Input gradient of sum_j seed_j P_j at the current image.
  std::vector<double> gradient(std::span<const double> seed) {
    std::vector<double> g;
    nn::backward_pass(net_, ws_, seed, nullptr, &g);
    return g;
  }

  double distance_of(const Image& candidate) const { return perceptual_distance(original_, candidate, sen_); }

  /// Call after modifying image(): re-evaluates and records one iteration.
  void commit_step() {
    distance_ = distance_of(current_);
    ++iterations_;
    evaluate();
    trace_.push_back({iterations_, distance_, gap(probs_, target_), probs_.argmax()});
    consider_best();
  }

  AttackResult result() const {
    if (mode_ != StopMode::robust_budget || !best_) return snapshot(true);
    AttackResult r = *best_;
    r.iterations = iterations_;
    r.trace = trace_;
    return r;
  }

  [[noreturn]] void stall(const std::string& why) const { throw StalledAttackError(why, result()); }

 private:
  void evaluate() {
    nn::forward_pass(net_, current_.values(), ws_);
    probs_ = nn::ProbVector(ws_.activations.back());
  }

  AttackResult snapshot(bool with_trace) const {
    AttackResult r;
    r.adversarial = current_;
    r.predicted = probs_.argmax();
    r.success = r.predicted == target_;
    r.gap = gap(probs_, target_);
    r.distance = distance_;
    r.iterations = iterations_;
    r.result_iteration = iterations_;
    if (with_trace) r.trace = trace_;
    return r;
  }

  void consider_best() {
    if (mode_ != StopMode::robust_budget || !on_target()) return;
    const double g = smoothed_gap(probs_, target_, smoothing_);
    if (best_ && !(g > best_smoothed_)) return;
    best_smoothed_ = g;
    best_ = snapshot(false);
  }

  const nn::Network& net_;
  const Image& original_;
  const SensitivityMap& sen_;
  std::size_t target_;
  StopMode mode_;
  double smoothing_;

  Image current_;
  nn::ProbVector probs_;
  nn::Workspace ws_;
  double distance_ = 0.0;
  std::size_t iterations_ = 0;
  std::vector<TraceEntry> trace_;
  std::optional<AttackResult> best_;
  double best_smoothed_ = -std::numeric_limits<double>::infinity();
};

}  // namespace detail

}  // namespace advp::attack

#endif  // ADVP_ATTACK_RESULT_HPP
