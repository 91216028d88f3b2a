#ifndef ADVP_IO_PNM_HPP
#define ADVP_IO_PNM_HPP

// Binary portable anymaps: P5 (1 channel) and P6 (3 channels), maxval 255.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "advp/errors.hpp"
#include "advp/io/atomic_file.hpp"
#include "advp/tensor.hpp"

namespace advp::io {

/// Intensity in [0,1] to byte, rounding half away from zero.
inline unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::clamp(std::floor(v * 255.0 + 0.5), 0.0, 255.0));
}

inline std::string encode_pnm(const Image& image) {
  require_image(image, "encode_pnm");
  const std::size_t c = image.channels();
  if (c != 1 && c != 3) throw ConfigError("PNM output supports 1 or 3 channels, got " + std::to_string(c));
  std::string out = (c == 1 ? "P5\n" : "P6\n") + std::to_string(image.width()) + " " +
                    std::to_string(image.height()) + "\n255\n";
  out.reserve(out.size() + image.size());
  for (double v : image.values()) out += static_cast<char>(to_byte(v));
  return out;
}

inline Image decode_pnm(std::string_view bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) {
    skip_space();
    const std::size_t start = pos;
    unsigned long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos])) && pos - start < 9)
      v = v * 10 + static_cast<unsigned long>(bytes[pos++] - '0');
    if (pos == start) throw ParseError(std::string("expected PNM ") + what, pos);
    return static_cast<std::size_t>(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw ParseError("unsupported PNM magic (expected P5 or P6)", 0);
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;
  pos = 2;
  const std::size_t width = read_uint("width");
  const std::size_t height = read_uint("height");
  const std::size_t maxval_at = pos;
  const std::size_t maxval = read_uint("maxval");
  if (maxval != 255) throw ParseError("unsupported PNM maxval " + std::to_string(maxval) + " (only 255)", maxval_at);
  if (width == 0 || height == 0) throw ParseError("PNM dimensions must be positive", maxval_at);
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw ParseError("missing whitespace after PNM header", pos);
  ++pos;
  const std::size_t n = width * height * channels;
  if (bytes.size() - pos < n) throw ParseError("truncated PNM raster", bytes.size());
  Image img = Tensor::image(height, width, channels);
  for (std::size_t i = 0; i < n; ++i) img[i] = static_cast<unsigned char>(bytes[pos + i]) / 255.0;
  return img;
}

inline void write_image(const std::filesystem::path& path, const Image& image) {
  write_file_atomic(path, encode_pnm(image));
}

inline Image read_image(const std::filesystem::path& path) { return decode_pnm(read_file(path)); }

}  // namespace advp::io

#endif  // ADVP_IO_PNM_HPP
