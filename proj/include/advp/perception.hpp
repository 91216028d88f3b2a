#ifndef ADVP_PERCEPTION_HPP
#define ADVP_PERCEPTION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "advp/errors.hpp"
#include "advp/tensor.hpp"

namespace advp {

inline constexpr std::size_t kDefaultWindow = 3;
inline constexpr double kDefaultSdFloor = 1e-2;

/// Local standard deviation of every element over the n x n window centred on it,
/// per channel. Windows are clipped at the image border and the divisor is the
/// number of in-image pixels (population SD).
inline Tensor sd_map(const Image& image, std::size_t n = kDefaultWindow) {
  require_image(image, "sd_map");
  if (n < 3 || n % 2 == 0) throw ConfigError("window size must be odd and >= 3, got " + std::to_string(n));
  const std::size_t H = image.height(), W = image.width(), C = image.channels();
  const std::size_t r = n / 2;
  Tensor out(image.shape());
  for (std::size_t y = 0; y < H; ++y) {
    const std::size_t y0 = y >= r ? y - r : 0, y1 = std::min(H - 1, y + r);
    for (std::size_t x = 0; x < W; ++x) {
      const std::size_t x0 = x >= r ? x - r : 0, x1 = std::min(W - 1, x + r);
      const double count = static_cast<double>((y1 - y0 + 1) * (x1 - x0 + 1));
      for (std::size_t c = 0; c < C; ++c) {
        double mean = 0.0;
        for (std::size_t yy = y0; yy <= y1; ++yy)
          for (std::size_t xx = x0; xx <= x1; ++xx) mean += image.at(yy, xx, c);
        mean /= count;
        double ss = 0.0;
        for (std::size_t yy = y0; yy <= y1; ++yy)
          for (std::size_t xx = x0; xx <= x1; ++xx) {
            const double d = image.at(yy, xx, c) - mean;
            ss += d * d;
          }
        out.at(y, x, c) = std::sqrt(ss / count);
      }
    }
  }
  return out;
}

/// Per-element perturbation sensitivity 1 / max(SD, floor), computed once from the
/// original image and kept fixed for the whole attack.
class SensitivityMap {
 public:
  SensitivityMap(Tensor values, std::size_t window, double sd_floor)
      : values_(std::move(values)), window_(window), sd_floor_(sd_floor) {}

  const Tensor& values() const { return values_; }
  const Extents& shape() const { return values_.shape(); }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t window() const { return window_; }
  double sd_floor() const { return sd_floor_; }
  double max_sensitivity() const { return 1.0 / sd_floor_; }

 private:
  Tensor values_;
  std::size_t window_;
  double sd_floor_;
};

inline SensitivityMap sensitivity_map(const Image& image, std::size_t n = kDefaultWindow,
                                      double sd_floor = kDefaultSdFloor) {
  if (!(sd_floor > 0.0)) throw ConfigError("SD floor must be positive");
  Tensor sen = sd_map(image, n);
  for (double& v : sen.values()) v = 1.0 / std::max(v, sd_floor);
  return SensitivityMap(std::move(sen), n, sd_floor);
}

/// Human-perceptual distance: sum_i |candidate_i - original_i| * Sen_i.
inline double perceptual_distance(const Image& original, const Image& candidate, const SensitivityMap& sen) {
  require_same_shape(original, candidate, "perceptual_distance");
  require_same_shape(original, sen.values(), "perceptual_distance");
  double d = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) d += std::abs(candidate[i] - original[i]) * sen[i];
  return d;
}

}  // namespace advp

#endif  // ADVP_PERCEPTION_HPP
