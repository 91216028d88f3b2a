#ifndef ADVP_NN_PROB_VECTOR_HPP
#define ADVP_NN_PROB_VECTOR_HPP

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "advp/errors.hpp"

namespace advp::nn {

/// Class probabilities: non-negative, summing to one within 1e-9.
class ProbVector {
 public:
  static constexpr double kSumTolerance = 1e-9;

  ProbVector() = default;

  explicit ProbVector(std::vector<double> p) : p_(std::move(p)) {
    if (p_.empty()) throw ConfigError("probability vector must not be empty");
    double sum = 0.0;
    for (double v : p_) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("probabilities must be finite and non-negative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
      throw ConfigError("probabilities sum to " + std::to_string(sum) + ", expected 1");
  }

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const { return p_; }
  auto begin() const { return p_.begin(); }
  auto end() const { return p_.end(); }

  // Lowest index wins ties.
  std::size_t argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p_.size(); ++i)
      if (p_[i] > p_[best]) best = i;
    return best;
  }

  friend bool operator==(const ProbVector&, const ProbVector&) = default;

 private:
  std::vector<double> p_;
};

}  // namespace advp::nn

#endif  // ADVP_NN_PROB_VECTOR_HPP
