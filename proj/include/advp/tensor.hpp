#ifndef ADVP_TENSOR_HPP
#define ADVP_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "advp/errors.hpp"

namespace advp {

using Extents = std::vector<std::size_t>;

inline std::size_t element_count(const Extents& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string to_string(const Extents& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

inline bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

/// Dense row-major array of doubles. Images are rank 3: height x width x channels.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Extents shape, double fill = 0.0) : shape_(std::move(shape)) {
    validate_extents();
    data_.assign(element_count(shape_), fill);
  }

  Tensor(Extents shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_extents();
    if (element_count(shape_) != data_.size())
      throw ConfigError("tensor shape " + advp::to_string(shape_) + " does not match " +
                        std::to_string(data_.size()) + " values");
  }

  static Tensor image(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0) {
    return Tensor({height, width, channels}, fill);
  }

  const Extents& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Rank-3 accessors.
  std::size_t height() const { return shape_.at(0); }
  std::size_t width() const { return shape_.at(1); }
  std::size_t channels() const { return shape_.at(2); }
  double& at(std::size_t y, std::size_t x, std::size_t c) { return data_[(y * shape_[1] + x) * shape_[2] + c]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return data_[(y * shape_[1] + x) * shape_[2] + c];
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  void validate_extents() const {
    for (std::size_t e : shape_)
      if (e == 0) throw ConfigError("tensor extents must be positive, got " + advp::to_string(shape_));
  }

  Extents shape_;
  std::vector<double> data_;
};

using Image = Tensor;

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape())
    throw ConfigError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

inline void require_image(const Tensor& t, const char* what) {
  if (t.rank() != 3) throw ConfigError(std::string(what) + ": expected a rank-3 image, got " + to_string(t.shape()));
}

}  // namespace advp

#endif  // ADVP_TENSOR_HPP
