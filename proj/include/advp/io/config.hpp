#ifndef ADVP_IO_CONFIG_HPP
#define ADVP_IO_CONFIG_HPP

// Run configuration: an INI file with one section per module. Command-line flags are
// applied on top as "section.key" overrides, so a flag always wins over the file.
//
//   [data]        kind = mnist | cifar10 | directory
//                 train_images, train_labels, test_images, test_labels   (mnist)
//                 train_batches, test_batches   (cifar10, comma separated)
//                 directory                      (directory of <label>_*.pgm/.ppm)
//   [model]       path, architecture, init_seed
//   [train]       epochs, batch_size, learning_rate, seed, limit
//   [attack]      method, target, smoothing, pixels, step, max_distance, mode,
//                 max_iterations, window, sd_floor, fgsm_step, fgsm_iterations, jsma_theta
//   [experiment]  grid, seed, samples, methods, jobs, output

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "advp/attack/result.hpp"
#include "advp/errors.hpp"
#include "advp/io/atomic_file.hpp"
#include "advp/io/datasets.hpp"
#include "advp/robustness.hpp"
#include "advp/transforms.hpp"

namespace advp::io {

using ConfigTree = boost::property_tree::ptree;
using Override = std::pair<std::string, std::string>;  // "section.key", value

inline ConfigTree parse_config(const std::string& text) {
  ConfigTree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError("config line " + std::to_string(e.line()) + ": " + e.message(), 0);
  }
  return tree;
}

inline ConfigTree load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

inline void apply_overrides(ConfigTree& tree, const std::vector<Override>& overrides) {
  for (const auto& [key, value] : overrides) tree.put(key, value);
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct DataConfig {
  std::string kind = "mnist";
  std::filesystem::path train_images, train_labels, test_images, test_labels;
  std::vector<std::filesystem::path> train_batches, test_batches;
  std::filesystem::path directory;
};

struct ModelConfig {
  std::filesystem::path path;
  std::string architecture = "mnist-desk";
  std::uint64_t init_seed = 7;
};

struct TrainSettings {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;
  std::size_t limit = 0;  // 0 = use every training sample
};

struct RunConfig {
  DataConfig data;
  ModelConfig model;
  TrainSettings train;
  robustness::ExperimentConfig experiment;  // attack settings, grid, seed, jobs
  std::vector<robustness::Method> methods = {robustness::Method::greedy};
  std::size_t samples = 100;
  std::filesystem::path output = "out";
};

namespace detail {

template <class T>
T get_value(const ConfigTree& tree, const std::string& key, T fallback) {
  const auto text = tree.get_optional<std::string>(key);
  if (!text) return fallback;
  const auto v = tree.get_optional<T>(key);
  if (!v) throw ConfigError("config key '" + key + "' has invalid value '" + *text + "'");
  return *v;
}

inline std::vector<std::filesystem::path> get_paths(const ConfigTree& tree, const std::string& key) {
  std::vector<std::filesystem::path> out;
  for (const auto& s : split_list(tree.get<std::string>(key, ""))) out.emplace_back(s);
  return out;
}

}  // namespace detail

inline RunConfig make_run_config(const ConfigTree& tree) {
  using detail::get_value;
  RunConfig c;
  auto& d = c.data;
  d.kind = get_value<std::string>(tree, "data.kind", d.kind);
  if (d.kind != "mnist" && d.kind != "cifar10" && d.kind != "directory")
    throw ConfigError("data.kind must be mnist, cifar10 or directory");
  d.train_images = get_value<std::string>(tree, "data.train_images", "");
  d.train_labels = get_value<std::string>(tree, "data.train_labels", "");
  d.test_images = get_value<std::string>(tree, "data.test_images", "");
  d.test_labels = get_value<std::string>(tree, "data.test_labels", "");
  d.train_batches = detail::get_paths(tree, "data.train_batches");
  d.test_batches = detail::get_paths(tree, "data.test_batches");
  d.directory = get_value<std::string>(tree, "data.directory", "");

  c.model.path = get_value<std::string>(tree, "model.path", "");
  c.model.architecture = get_value(tree, "model.architecture", c.model.architecture);
  c.model.init_seed = get_value(tree, "model.init_seed", c.model.init_seed);

  auto& t = c.train;
  t.epochs = get_value(tree, "train.epochs", t.epochs);
  t.batch_size = get_value(tree, "train.batch_size", t.batch_size);
  t.learning_rate = get_value(tree, "train.learning_rate", t.learning_rate);
  t.seed = get_value(tree, "train.seed", t.seed);
  t.limit = get_value(tree, "train.limit", t.limit);

  auto& e = c.experiment;
  auto& a = e.attack;
  a.target = get_value(tree, "attack.target", a.target);
  a.smoothing = get_value(tree, "attack.smoothing", a.smoothing);
  a.pixels_per_iteration = get_value(tree, "attack.pixels", a.pixels_per_iteration);
  a.step = get_value(tree, "attack.step", a.step);
  a.max_distance = get_value(tree, "attack.max_distance", a.max_distance);
  a.mode = attack::parse_stop_mode(get_value<std::string>(tree, "attack.mode", attack::to_string(a.mode)));
  a.max_iterations = get_value(tree, "attack.max_iterations", a.max_iterations);
  a.window = get_value(tree, "attack.window", a.window);
  a.sd_floor = get_value(tree, "attack.sd_floor", a.sd_floor);
  e.method = robustness::parse_method(get_value<std::string>(tree, "attack.method", "greedy"));
  e.fgsm_step = get_value(tree, "attack.fgsm_step", e.fgsm_step);
  e.fgsm_iterations = get_value(tree, "attack.fgsm_iterations", e.fgsm_iterations);
  e.jsma_theta = get_value(tree, "attack.jsma_theta", e.jsma_theta);

  const auto grid = tree.get_optional<std::string>("experiment.grid");
  e.grid = grid ? transforms::parse_grid(*grid) : transforms::default_grid();
  e.seed = get_value(tree, "experiment.seed", e.seed);
  e.jobs = get_value<std::size_t>(tree, "experiment.jobs", 0);
  c.samples = get_value(tree, "experiment.samples", c.samples);
  c.output = get_value<std::string>(tree, "experiment.output", c.output.string());
  if (const auto m = tree.get_optional<std::string>("experiment.methods")) {
    c.methods.clear();
    for (const auto& s : split_list(*m)) c.methods.push_back(robustness::parse_method(s));
    if (c.methods.empty()) throw ConfigError("experiment.methods is empty");
  }
  return c;
}

inline void require_exists(const std::filesystem::path& p, const std::string& key) {
  if (p.empty()) throw ConfigError("missing required setting " + key);
  if (!std::filesystem::exists(p)) throw ConfigError(key + ": path does not exist: " + p.string());
}

enum class Split { train, test };

/// Checks the dataset paths needed for `split` and loads it.
inline Dataset load_dataset(const DataConfig& d, Split split) {
  const bool train = split == Split::train;
  if (d.kind == "mnist") {
    const auto& images = train ? d.train_images : d.test_images;
    const auto& labels = train ? d.train_labels : d.test_labels;
    require_exists(images, train ? "data.train_images" : "data.test_images");
    require_exists(labels, train ? "data.train_labels" : "data.test_labels");
    return load_mnist(images, labels);
  }
  if (d.kind == "cifar10") {
    const auto& batches = train ? d.train_batches : d.test_batches;
    if (batches.empty()) throw ConfigError(train ? "missing data.train_batches" : "missing data.test_batches");
    for (const auto& b : batches) require_exists(b, train ? "data.train_batches" : "data.test_batches");
    return load_cifar10(batches);
  }
  require_exists(d.directory, "data.directory");
  return load_image_directory(d.directory);
}

}  // namespace advp::io

#endif  // ADVP_IO_CONFIG_HPP
