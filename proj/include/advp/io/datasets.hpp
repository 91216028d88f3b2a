#ifndef ADVP_IO_DATASETS_HPP
#define ADVP_IO_DATASETS_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "advp/errors.hpp"
#include "advp/io/atomic_file.hpp"
#include "advp/io/pnm.hpp"
#include "advp/nn/layers.hpp"
#include "advp/tensor.hpp"

namespace advp::io {

/// Labelled images held in memory. Grayscale data is shaped H x W x 1.
struct Dataset {
  std::string name;
  nn::Shape3 shape;
  std::vector<Image> images;
  std::vector<std::size_t> labels;

  std::size_t size() const { return images.size(); }

  Dataset head(std::size_t n) const {
    Dataset d{name, shape, {}, {}};
    n = std::min(n, size());
    d.images.assign(images.begin(), images.begin() + static_cast<std::ptrdiff_t>(n));
    d.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
    return d;
  }
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {

inline std::uint32_t read_be32(std::string_view bytes, std::size_t offset, const char* what) {
  if (bytes.size() < offset + 4) throw ParseError(std::string("truncated IDX header (") + what + ")", bytes.size());
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  return v;
}

}  // namespace detail

/// IDX image file (big-endian header: magic 0x803, count, rows, cols; then bytes).
inline std::vector<Image> parse_idx_images(std::string_view bytes) {
  const std::uint32_t magic = detail::read_be32(bytes, 0, "magic");
  if (magic != kIdxImagesMagic) throw ParseError("bad IDX image magic number", 0);
  const std::size_t count = detail::read_be32(bytes, 4, "count");
  const std::size_t rows = detail::read_be32(bytes, 8, "rows");
  const std::size_t cols = detail::read_be32(bytes, 12, "cols");
  if (rows == 0 || cols == 0) throw ParseError("IDX image dimensions must be positive", 8);
  const std::size_t per = rows * cols;
  if ((bytes.size() - 16) / per < count) throw ParseError("truncated IDX image data", bytes.size());
  std::vector<Image> images;
  images.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    Image img = Tensor::image(rows, cols, 1);
    const std::size_t base = 16 + n * per;
    for (std::size_t i = 0; i < per; ++i) img[i] = static_cast<unsigned char>(bytes[base + i]) / 255.0;
    images.push_back(std::move(img));
  }
  return images;
}

inline std::vector<std::size_t> parse_idx_labels(std::string_view bytes) {
  const std::uint32_t magic = detail::read_be32(bytes, 0, "magic");
  if (magic != kIdxLabelsMagic) throw ParseError("bad IDX label magic number", 0);
  const std::size_t count = detail::read_be32(bytes, 4, "count");
  if (bytes.size() - 8 < count) throw ParseError("truncated IDX label data", bytes.size());
  std::vector<std::size_t> labels(count);
  for (std::size_t i = 0; i < count; ++i) {
    labels[i] = static_cast<unsigned char>(bytes[8 + i]);
    if (labels[i] > 9) throw IntegrityError("IDX label " + std::to_string(labels[i]) + " outside [0, 9]");
  }
  return labels;
}

inline Dataset make_mnist(std::string_view image_bytes, std::string_view label_bytes) {
  Dataset d;
  d.name = "mnist";
  d.images = parse_idx_images(image_bytes);
  d.labels = parse_idx_labels(label_bytes);
  if (d.images.size() != d.labels.size())
    throw IntegrityError("IDX image count " + std::to_string(d.images.size()) + " != label count " +
                         std::to_string(d.labels.size()));
  if (!d.images.empty()) d.shape = {d.images[0].height(), d.images[0].width(), 1};
  return d;
}

inline Dataset load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels) {
  return make_mnist(read_file(images), read_file(labels));
}

inline constexpr std::size_t kCifarRecord = 3073;

/// CIFAR-10 binary batch: 3073-byte records, a label byte then channel-planar R, G, B (32x32 each).
inline void parse_cifar10_into(std::string_view bytes, Dataset& d) {
  if (bytes.size() % kCifarRecord != 0)
    throw ParseError("CIFAR-10 batch length " + std::to_string(bytes.size()) + " is not a multiple of 3073",
                     bytes.size() - bytes.size() % kCifarRecord);
  for (std::size_t off = 0; off < bytes.size(); off += kCifarRecord) {
    const auto label = static_cast<unsigned char>(bytes[off]);
    if (label > 9) throw IntegrityError("CIFAR-10 label " + std::to_string(label) + " outside [0, 9]");
    Image img = Tensor::image(32, 32, 3);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 32; ++y)
        for (std::size_t x = 0; x < 32; ++x)
          img.at(y, x, c) = static_cast<unsigned char>(bytes[off + 1 + c * 1024 + y * 32 + x]) / 255.0;
    d.images.push_back(std::move(img));
    d.labels.push_back(label);
  }
}

inline Dataset make_cifar10(std::string_view bytes) {
  Dataset d{"cifar10", {32, 32, 3}, {}, {}};
  parse_cifar10_into(bytes, d);
  return d;
}

inline Dataset load_cifar10(const std::vector<std::filesystem::path>& batches) {
  Dataset d{"cifar10", {32, 32, 3}, {}, {}};
  for (const auto& p : batches) parse_cifar10_into(read_file(p), d);
  return d;
}

/// Every .pgm/.ppm file in `dir`, sorted by name; the label is the integer before the
/// first '_' of the file name (e.g. "3_0042.pgm").
inline Dataset load_image_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Dataset d{"directory", {}, {}, {}};
  for (const auto& f : files) {
    const std::string stem = f.stem().string();
    std::size_t label = 0;
    try {
      label = std::stoul(stem.substr(0, stem.find('_')));
    } catch (const std::logic_error&) {
      throw IntegrityError("cannot read a label from file name " + f.filename().string());
    }
    Image img = read_image(f);
    nn::Shape3 s{img.height(), img.width(), img.channels()};
    if (d.images.empty()) d.shape = s;
    else if (!(s == d.shape)) throw IntegrityError("image " + f.filename().string() + " has a different shape");
    d.images.push_back(std::move(img));
    d.labels.push_back(label);
  }
  return d;
}

}  // namespace advp::io

#endif  // ADVP_IO_DATASETS_HPP
