#ifndef ADVP_TRANSFORMS_HPP
#define ADVP_TRANSFORMS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "advp/errors.hpp"
#include "advp/rng.hpp"
#include "advp/tensor.hpp"

namespace advp::transforms {

inline double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

/// out = clip(in + N(0, sigma^2)), one normal draw per element in storage order.
inline Image add_gaussian_noise(const Image& image, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ConfigError("noise standard deviation must be >= 0");
  Image out = image;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (double& v : out.values()) v = clip01(v + sigma * rng.normal());
  return out;
}

/// Normalized taps w_j ~ exp(-j^2 / (2 sigma^2)), j = -radius..radius.
inline std::vector<double> gaussian_kernel(double sigma, std::size_t radius) {
  if (!(sigma > 0.0)) throw ConfigError("blur sigma must be positive");
  if (radius < 1) throw ConfigError("blur radius must be >= 1");
  std::vector<double> w(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double j = static_cast<double>(i) - static_cast<double>(radius);
    w[i] = std::exp(-j * j / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

/// Separable Gaussian blur; near the border the taps falling outside the image are
/// dropped and the remaining ones renormalized.
inline Image gaussian_blur(const Image& image, double sigma, std::size_t radius) {
  require_image(image, "gaussian_blur");
  const std::vector<double> w = gaussian_kernel(sigma, radius);
  const std::size_t H = image.height(), W = image.width(), C = image.channels();
  const auto r = static_cast<std::ptrdiff_t>(radius);
  auto pass = [&](const Image& src, bool horizontal) {
    Image dst(src.shape());
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        for (std::size_t c = 0; c < C; ++c) {
          double acc = 0.0, mass = 0.0;
          for (std::ptrdiff_t j = -r; j <= r; ++j) {
            const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y) + (horizontal ? 0 : j);
            const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x) + (horizontal ? j : 0);
            if (yy < 0 || xx < 0 || yy >= static_cast<std::ptrdiff_t>(H) || xx >= static_cast<std::ptrdiff_t>(W))
              continue;
            const double wj = w[static_cast<std::size_t>(j + r)];
            acc += wj * src.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx), c);
            mass += wj;
          }
          dst.at(y, x, c) = clip01(acc / mass);
        }
    return dst;
  };
  return pass(pass(image, true), false);
}

inline Image adjust_contrast(const Image& image, double factor) {
  if (!(factor >= 0.0)) throw ConfigError("contrast factor must be >= 0");
  Image out = image;
  for (double& v : out.values()) v = clip01((v - 0.5) * factor + 0.5);
  return out;
}

inline Image adjust_brightness(const Image& image, double offset) {
  Image out = image;
  for (double& v : out.values()) v = clip01(v + offset);
  return out;
}

// ---------------------------------------------------------------------------
// JPEG-like compression: 8x8 orthonormal DCT-II, quantization with the standard
// luminance table (libjpeg quality scaling), no chroma subsampling or entropy coding.

using Block = std::array<double, 64>;

inline const std::array<int, 64>& luminance_table() {
  static const std::array<int, 64> t = {
      16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
      14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
      18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
      49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
  return t;
}

/// Quantizer entries on the 0..255 scale for a quality in [1, 100].
inline std::array<int, 64> quantization_table(int quality) {
  if (quality < 1 || quality > 100) throw ConfigError("JPEG quality must be in [1, 100]");
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, 64> q{};
  const auto& base = luminance_table();
  for (std::size_t i = 0; i < 64; ++i)
    q[i] = std::clamp(static_cast<int>(std::lround(base[i] * scale / 100.0)), 1, 255);
  return q;
}

inline const std::array<double, 64>& dct_matrix() {
  static const std::array<double, 64> m = [] {
    std::array<double, 64> a{};
    for (std::size_t u = 0; u < 8; ++u)
      for (std::size_t x = 0; x < 8; ++x) {
        const double alpha = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
        a[u * 8 + x] = alpha * std::cos((2.0 * static_cast<double>(x) + 1.0) * static_cast<double>(u) *
                                        std::numbers::pi / 16.0);
      }
    return a;
  }();
  return m;
}

/// Orthonormal 2-D DCT-II: F = M X M^T.
inline Block dct2(const Block& x) {
  const auto& m = dct_matrix();
  Block tmp{}, out{};
  for (std::size_t u = 0; u < 8; ++u)
    for (std::size_t c = 0; c < 8; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < 8; ++r) s += m[u * 8 + r] * x[r * 8 + c];
      tmp[u * 8 + c] = s;
    }
  for (std::size_t u = 0; u < 8; ++u)
    for (std::size_t v = 0; v < 8; ++v) {
      double s = 0.0;
      for (std::size_t c = 0; c < 8; ++c) s += tmp[u * 8 + c] * m[v * 8 + c];
      out[u * 8 + v] = s;
    }
  return out;
}

/// Inverse: X = M^T F M.
inline Block idct2(const Block& f) {
  const auto& m = dct_matrix();
  Block tmp{}, out{};
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t v = 0; v < 8; ++v) {
      double s = 0.0;
      for (std::size_t u = 0; u < 8; ++u) s += m[u * 8 + r] * f[u * 8 + v];
      tmp[r * 8 + v] = s;
    }
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) {
      double s = 0.0;
      for (std::size_t v = 0; v < 8; ++v) s += tmp[r * 8 + v] * m[v * 8 + c];
      out[r * 8 + c] = s;
    }
  return out;
}

inline Image jpeg_like(const Image& image, int quality) {
  require_image(image, "jpeg_like");
  const std::array<int, 64> q = quantization_table(quality);
  const std::size_t H = image.height(), W = image.width(), C = image.channels();
  Image out(image.shape());
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t by = 0; by < H; by += 8)
      for (std::size_t bx = 0; bx < W; bx += 8) {
        Block block{};
        for (std::size_t r = 0; r < 8; ++r)
          for (std::size_t k = 0; k < 8; ++k)  // edge blocks replicate the last row/column
            block[r * 8 + k] = image.at(std::min(by + r, H - 1), std::min(bx + k, W - 1), c) - 0.5;
        Block f = dct2(block);
        for (std::size_t i = 0; i < 64; ++i) {
          const double step = q[i] / 255.0;
          f[i] = std::round(f[i] / step) * step;
        }
        const Block rec = idct2(f);
        for (std::size_t r = 0; r < 8 && by + r < H; ++r)
          for (std::size_t k = 0; k < 8 && bx + k < W; ++k) out.at(by + r, bx + k, c) = clip01(rec[r * 8 + k] + 0.5);
      }
  return out;
}

// ---------------------------------------------------------------------------

enum class Kind { identity, noise, blur, jpeg, contrast, brightness };

/// One transformation with its parameters. Grid strings look like
/// "identity", "noise:0.05", "blur:1.0:3", "jpeg:60", "contrast:0.8", "brightness:-0.1".
struct TransformSpec {
  Kind kind = Kind::identity;
  double value = 0.0;      // sigma_n | sigma_b | quality | factor | offset
  std::size_t radius = 3;  // blur only
  std::uint64_t seed = 0;  // noise only

  void validate() const {
    switch (kind) {
      case Kind::noise:
        if (!(value >= 0.0)) throw ConfigError("noise std must be >= 0");
        break;
      case Kind::blur:
        if (!(value > 0.0) || radius < 1) throw ConfigError("blur needs sigma > 0 and radius >= 1");
        break;
      case Kind::jpeg:
        if (value != std::floor(value) || value < 1 || value > 100)
          throw ConfigError("JPEG quality must be an integer in [1, 100]");
        break;
      case Kind::contrast:
        if (!(value > 0.0)) throw ConfigError("contrast factor must be > 0");
        break;
      default:
        break;
    }
  }
};

inline std::string kind_name(Kind k) {
  switch (k) {
    case Kind::identity: return "identity";
    case Kind::noise: return "noise";
    case Kind::blur: return "blur";
    case Kind::jpeg: return "jpeg";
    case Kind::contrast: return "contrast";
    case Kind::brightness: return "brightness";
  }
  return "?";
}

inline Kind parse_kind(const std::string& s) {
  for (Kind k : {Kind::identity, Kind::noise, Kind::blur, Kind::jpeg, Kind::contrast, Kind::brightness})
    if (kind_name(k) == s) return k;
  throw ConfigError("unknown transform kind '" + s + "'");
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// Parameter column text: "0.05", "1:3" for blur, "" for identity.
inline std::string parameter_string(const TransformSpec& t) {
  switch (t.kind) {
    case Kind::identity: return "";
    case Kind::blur: return format_number(t.value) + ":" + std::to_string(t.radius);
    default: return format_number(t.value);
  }
}

inline std::string to_string(const TransformSpec& t) {
  const std::string p = parameter_string(t);
  return p.empty() ? kind_name(t.kind) : kind_name(t.kind) + ":" + p;
}

inline TransformSpec parse_transform(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t colon = text.find(':', start);
    parts.push_back(text.substr(start, colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  TransformSpec t;
  t.kind = parse_kind(parts[0]);
  const std::size_t expected = t.kind == Kind::identity ? 1 : t.kind == Kind::blur ? 3 : 2;
  if (parts.size() != expected && !(t.kind == Kind::blur && parts.size() == 2))
    throw ConfigError("malformed transform '" + text + "'");
  try {
    std::size_t used = 0;
    if (parts.size() > 1) {
      t.value = std::stod(parts[1], &used);
      if (used != parts[1].size()) throw std::invalid_argument("trailing characters");
    }
    if (parts.size() > 2) {
      t.radius = std::stoul(parts[2], &used);
      if (used != parts[2].size()) throw std::invalid_argument("trailing characters");
    }
  } catch (const std::logic_error&) {
    throw ConfigError("malformed transform parameter in '" + text + "'");
  }
  t.validate();
  return t;
}

inline std::vector<TransformSpec> parse_grid(const std::string& text) {
  std::vector<TransformSpec> grid;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    std::string item = text.substr(start, comma - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) grid.push_back(parse_transform(item));
    start = comma + 1;
  }
  return grid;
}

/// Default robustness grid: the five noise levels plus mild blur/contrast/brightness/JPEG settings.
inline std::vector<TransformSpec> default_grid() {
  return parse_grid(
      "noise:0.05,noise:0.1,noise:0.15,noise:0.2,noise:0.25,blur:0.5:3,blur:1:3,contrast:0.8,contrast:1.2,"
      "brightness:-0.1,brightness:0.1,jpeg:90,jpeg:75,jpeg:60");
}

inline Image apply(const TransformSpec& t, const Image& image) {
  t.validate();
  switch (t.kind) {
    case Kind::identity: return image;
    case Kind::noise: return add_gaussian_noise(image, t.value, t.seed);
    case Kind::blur: return gaussian_blur(image, t.value, t.radius);
    case Kind::jpeg: return jpeg_like(image, static_cast<int>(t.value));
    case Kind::contrast: return adjust_contrast(image, t.value);
    case Kind::brightness: return adjust_brightness(image, t.value);
  }
  return image;
}

}  // namespace advp::transforms

#endif  // ADVP_TRANSFORMS_HPP
