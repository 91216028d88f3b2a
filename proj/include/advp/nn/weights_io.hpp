#ifndef ADVP_NN_WEIGHTS_IO_HPP
#define ADVP_NN_WEIGHTS_IO_HPP

// Weight file: one JSON document.
//
//   {
//     "format": "advp-weights",
//     "version": 1,
//     "input_shape": [H, W, C],
//     "layers": [
//       {"kind": "convolution", "kernel_h": 3, "kernel_w": 3, "filters": F,
//        "weights_shape": [3, 3, C, F], "weights": [...], "bias": [...]},
//       {"kind": "relu"},
//       {"kind": "max_pool", "pool_h": 2, "pool_w": 2},
//       {"kind": "dense", "units": U, "weights_shape": [N, U], "weights": [...], "bias": [...]},
//       {"kind": "softmax"}
//     ]
//   }
//
// Coefficients are written with 17 significant digits, so load(save(net)) is bit-exact.

#include <array>
#include <charconv>
#include <cstddef>
#include <filesystem>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "advp/errors.hpp"
#include "advp/io/atomic_file.hpp"
#include "advp/nn/network.hpp"

namespace advp::nn {

inline constexpr int kWeightsVersion = 1;
inline constexpr const char* kWeightsFormat = "advp-weights";

namespace detail {

inline void append_double(std::string& out, double v) {
  std::array<char, 40> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  out.append(buf.data(), res.ptr);
}

inline void append_array(std::string& out, std::span<const double> values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += (i % 8 == 0) ? ",\n      " : ", ";
    append_double(out, values[i]);
  }
  out += ']';
}

inline void append_extents(std::string& out, const Extents& e) {
  out += '[';
  for (std::size_t i = 0; i < e.size(); ++i) out += (i ? ", " : "") + std::to_string(e[i]);
  out += ']';
}

using Json = nlohmann::json;

inline const Json& require(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw IntegrityError(where + ": missing key '" + key + "'");
  return obj.at(key);
}

inline std::size_t require_size(const Json& obj, const char* key, const std::string& where) {
  const Json& v = require(obj, key, where);
  if (!v.is_number_unsigned()) throw IntegrityError(where + ": '" + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

inline std::vector<double> require_numbers(const Json& obj, const char* key, const std::string& where) {
  const Json& v = require(obj, key, where);
  if (!v.is_array()) throw IntegrityError(where + ": '" + key + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const Json& x : v) {
    if (!x.is_number()) throw IntegrityError(where + ": '" + key + "' contains a non-number");
    out.push_back(x.get<double>());
  }
  return out;
}

inline Extents require_extents(const Json& obj, const char* key, const std::string& where) {
  const Json& v = require(obj, key, where);
  if (!v.is_array()) throw IntegrityError(where + ": '" + key + "' must be an array");
  Extents e;
  for (const Json& x : v) {
    if (!x.is_number_unsigned()) throw IntegrityError(where + ": '" + key + "' must hold non-negative integers");
    e.push_back(x.get<std::size_t>());
  }
  return e;
}

}  // namespace detail

inline std::string serialize_weights(const Network& net) {
  std::string out;
  out += "{\n  \"format\": \"";
  out += kWeightsFormat;
  out += "\",\n  \"version\": " + std::to_string(kWeightsVersion) + ",\n  \"input_shape\": ";
  detail::append_extents(out, net.input_shape().extents());
  out += ",\n  \"layers\": [";
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    const LayerSpec& layer = net.layers()[k];
    out += k ? ",\n    {" : "\n    {";
    out += "\"kind\": \"" + kind_name(layer) + "\"";
    if (const auto* c = std::get_if<Convolution>(&layer)) {
      out += ", \"kernel_h\": " + std::to_string(c->kernel_h) + ", \"kernel_w\": " + std::to_string(c->kernel_w) +
             ", \"filters\": " + std::to_string(c->filters);
    } else if (const auto* m = std::get_if<MaxPool>(&layer)) {
      out += ", \"pool_h\": " + std::to_string(m->pool_h) + ", \"pool_w\": " + std::to_string(m->pool_w);
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      out += ", \"units\": " + std::to_string(d->units);
    }
    if (has_parameters(layer)) {
      const LayerParams& p = net.params(k);
      out += ",\n     \"weights_shape\": ";
      detail::append_extents(out, p.weights.shape());
      out += ",\n     \"weights\": ";
      detail::append_array(out, p.weights.values());
      out += ",\n     \"bias\": ";
      detail::append_array(out, p.bias.values());
    }
    out += "}";
  }
  out += "\n  ]\n}\n";
  return out;
}

inline Network parse_weights(const std::string& text) {
  using detail::Json;
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("malformed weight file: ") + e.what(), e.byte);
  }
  const std::string top = "weight file";
  const Json& format = detail::require(doc, "format", top);
  if (!format.is_string() || format.get<std::string>() != kWeightsFormat)
    throw IntegrityError("not an advp weight file (format tag mismatch)");
  const Json& version = detail::require(doc, "version", top);
  if (!version.is_number_integer() || version.get<long long>() != kWeightsVersion)
    throw UnsupportedVersionError("unsupported weight file version " + version.dump() + " (supported: " +
                                  std::to_string(kWeightsVersion) + ")");
  const Extents in = detail::require_extents(doc, "input_shape", top);
  if (in.size() != 3) throw IntegrityError("input_shape must have three extents");
  const Json& layers_json = detail::require(doc, "layers", top);
  if (!layers_json.is_array()) throw IntegrityError("'layers' must be an array");

  std::vector<LayerSpec> layers;
  for (std::size_t k = 0; k < layers_json.size(); ++k) {
    const Json& l = layers_json[k];
    const std::string where = "layer " + std::to_string(k);
    const Json& kind_json = detail::require(l, "kind", where);
    const std::string kind = kind_json.is_string() ? kind_json.get<std::string>() : "";
    if (kind == "convolution")
      layers.emplace_back(Convolution{detail::require_size(l, "kernel_h", where),
                                      detail::require_size(l, "kernel_w", where),
                                      detail::require_size(l, "filters", where)});
    else if (kind == "max_pool")
      layers.emplace_back(MaxPool{detail::require_size(l, "pool_h", where), detail::require_size(l, "pool_w", where)});
    else if (kind == "dense")
      layers.emplace_back(Dense{detail::require_size(l, "units", where)});
    else if (kind == "relu")
      layers.emplace_back(Relu{});
    else if (kind == "softmax")
      layers.emplace_back(Softmax{});
    else
      throw IntegrityError(where + ": unknown layer kind '" + kind_json.dump() + "'");
  }

  Network net;
  try {
    net = Network(Shape3{in[0], in[1], in[2]}, std::move(layers));
  } catch (const ConfigError& e) {
    throw IntegrityError(std::string("inconsistent layer stack: ") + e.what());
  }
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    if (!has_parameters(net.layers()[k])) continue;
    const Json& l = layers_json[k];
    const std::string where = "layer " + std::to_string(k);
    LayerParams& p = net.params(k);
    if (detail::require_extents(l, "weights_shape", where) != p.weights.shape())
      throw IntegrityError(where + ": weights_shape does not match the layer header (expected " +
                           advp::to_string(p.weights.shape()) + ")");
    std::vector<double> w = detail::require_numbers(l, "weights", where);
    std::vector<double> b = detail::require_numbers(l, "bias", where);
    if (w.size() != p.weights.size())
      throw IntegrityError(where + ": expected " + std::to_string(p.weights.size()) + " weights, found " +
                           std::to_string(w.size()));
    if (b.size() != p.bias.size())
      throw IntegrityError(where + ": expected " + std::to_string(p.bias.size()) + " biases, found " +
                           std::to_string(b.size()));
    p.weights.storage() = std::move(w);
    p.bias.storage() = std::move(b);
  }
  return net;
}

inline void save_weights(const Network& net, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_weights(net));
}

inline Network load_weights(const std::filesystem::path& path) { return parse_weights(io::read_file(path)); }

}  // namespace advp::nn

#endif  // ADVP_NN_WEIGHTS_IO_HPP
