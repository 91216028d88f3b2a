#ifndef ADVP_CLI_HPP
#define ADVP_CLI_HPP

// The `advp` command line. run_cli() is the whole program minus main(), so tests can
// drive it with argv vectors and captured streams.
//
// Exit codes: 0 success, 1 usage/configuration error, 2 data or parse error,
// 3 numeric error or stalled attack.

#include <CLI11.hpp>

#include <cstddef>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "advp/attack/baselines.hpp"
#include "advp/attack/greedy.hpp"
#include "advp/errors.hpp"
#include "advp/io/config.hpp"
#include "advp/io/csv.hpp"
#include "advp/io/datasets.hpp"
#include "advp/io/pnm.hpp"
#include "advp/nn/architectures.hpp"
#include "advp/nn/train.hpp"
#include "advp/nn/weights_io.hpp"
#include "advp/robustness.hpp"
#include "advp/transforms.hpp"

namespace advp::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

namespace detail {

struct Settings {
  std::string config_path;
  std::vector<io::Override> overrides;

  io::RunConfig resolve() const {
    io::ConfigTree tree = config_path.empty() ? io::ConfigTree{} : io::load_config(config_path);
    io::apply_overrides(tree, overrides);
    return io::make_run_config(tree);
  }
};

// A flag that overrides config key `key`.
inline CLI::Option* flag(CLI::App* app, Settings& s, const std::string& name, const std::string& key,
                         const std::string& help) {
  return app->add_option_function<std::string>(
      name, [&s, key](const std::string& v) { s.overrides.emplace_back(key, v); }, help + " [" + key + "]");
}

inline void data_flags(CLI::App* app, Settings& s) {
  flag(app, s, "--data-kind", "data.kind", "mnist, cifar10 or directory");
  flag(app, s, "--train-images", "data.train_images", "IDX training images");
  flag(app, s, "--train-labels", "data.train_labels", "IDX training labels");
  flag(app, s, "--test-images", "data.test_images", "IDX test images");
  flag(app, s, "--test-labels", "data.test_labels", "IDX test labels");
  flag(app, s, "--train-batches", "data.train_batches", "CIFAR-10 training batches, comma separated");
  flag(app, s, "--test-batches", "data.test_batches", "CIFAR-10 test batches, comma separated");
  flag(app, s, "--image-dir", "data.directory", "directory of <label>_*.pgm/.ppm images");
}

inline void attack_flags(CLI::App* app, Settings& s) {
  flag(app, s, "--method", "attack.method", "greedy, fgsm or jsma");
  flag(app, s, "--mode", "attack.mode", "minimal or robust");
  flag(app, s, "--max-distance", "attack.max_distance", "perceptual distance budget");
  flag(app, s, "--pixels", "attack.pixels", "elements perturbed per greedy iteration");
  flag(app, s, "--step", "attack.step", "greedy step magnitude");
  flag(app, s, "--smoothing", "attack.smoothing", "log-sum-exp sharpness k");
  flag(app, s, "--max-iterations", "attack.max_iterations", "iteration cap");
  flag(app, s, "--fgsm-step", "attack.fgsm_step", "FGSM per-iteration step");
  flag(app, s, "--jsma-theta", "attack.jsma_theta", "JSMA per-pick increase");
}

inline std::filesystem::path require_model(const io::RunConfig& c) {
  io::require_exists(c.model.path, "model.path");
  return c.model.path;
}

inline std::size_t job_count(std::size_t configured) {
  if (configured) return configured;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

inline std::string image_extension(const Image& img) { return img.channels() == 1 ? ".pgm" : ".ppm"; }

// ---------------------------------------------------------------------------

inline int cmd_train(const Settings& s, std::ostream& out) {
  const io::RunConfig c = s.resolve();
  if (c.model.path.empty()) throw ConfigError("missing required setting model.path (output weight file)");
  io::Dataset data = io::load_dataset(c.data, io::Split::train);
  if (c.train.limit) data = data.head(c.train.limit);
  const nn::Architecture arch = nn::architecture_by_name(c.model.architecture);
  if (!data.images.empty() && !(data.shape == arch.input))
    throw ConfigError("dataset shape " + nn::to_string(data.shape) + " does not match architecture input " +
                      nn::to_string(arch.input));
  nn::TrainConfig tc;
  tc.epochs = c.train.epochs;
  tc.batch_size = c.train.batch_size;
  tc.learning_rate = c.train.learning_rate;
  tc.seed = c.train.seed;
  tc.on_epoch = [&out](const nn::EpochStats& e) {
    out << "epoch " << e.epoch + 1 << "  loss " << robustness::fixed(e.mean_loss) << "  train_accuracy "
        << robustness::fixed(e.train_accuracy) << '\n';
  };
  const nn::Network net = nn::train(nn::Network::initialized(arch.input, arch.layers, c.model.init_seed),
                                    data.images, data.labels, tc);
  nn::save_weights(net, c.model.path);
  out << "saved " << c.model.path.string() << " (" << net.parameter_count() << " parameters)\n";

  const bool has_test = c.data.kind == "mnist" ? !c.data.test_images.empty() : !c.data.test_batches.empty();
  if (has_test) {
    const io::Dataset test = io::load_dataset(c.data, io::Split::test);
    out << "test_accuracy " << robustness::fixed(nn::accuracy(net, test.images, test.labels)) << '\n';
  } else {
    out << "train_accuracy " << robustness::fixed(nn::accuracy(net, data.images, data.labels)) << '\n';
  }
  return kOk;
}

struct AttackArgs {
  std::string image;
  std::string out_dir = "attack_out";
  std::size_t index = 0;
  std::size_t count = 1;
  std::optional<std::size_t> target;
};

inline int cmd_attack(const Settings& s, const AttackArgs& args, std::ostream& out) {
  const io::RunConfig c = s.resolve();
  const nn::Network net = nn::load_weights(require_model(c));

  struct Job {
    std::string name;
    Image image;
    std::size_t target;
  };
  std::vector<Job> jobs;
  if (!args.image.empty()) {
    if (!args.target) throw ConfigError("--target is required with --image");
    jobs.push_back({std::filesystem::path(args.image).stem().string(), io::read_image(args.image), *args.target});
  } else {
    const io::Dataset data = io::load_dataset(c.data, io::Split::test);
    if (args.index + args.count > data.size()) throw ConfigError("--index/--count exceed the dataset size");
    for (std::size_t i = args.index; i < args.index + args.count; ++i) {
      const std::size_t t = args.target ? *args.target
                                        : robustness::assign_target(c.experiment.seed, i, data.labels[i],
                                                                    net.class_count());
      jobs.push_back({"sample" + std::to_string(i), data.images[i], t});
    }
  }

  const std::filesystem::path dir = args.out_dir;
  io::CsvRow header = {"name", "method", "target", "success", "predicted", "distance", "gap", "iterations"};
  std::vector<io::CsvRow> rows = {header};
  int code = kOk;
  for (const auto& job : jobs) {
    robustness::ExperimentConfig e = c.experiment;
    attack::AttackResult r;
    try {
      r = robustness::run_attack(net, job.image, job.target, e);
    } catch (const attack::StalledAttackError& err) {
      std::cerr << job.name << ": " << err.what() << '\n';
      r = err.partial();
      code = kNumeric;
    }
    const std::string ext = image_extension(job.image);
    io::write_image(dir / (job.name + "_original" + ext), job.image);
    io::write_image(dir / (job.name + "_adversarial" + ext), r.adversarial);
    io::write_file_atomic(dir / (job.name + "_trace.csv"), attack::trace_csv(r));
    rows.push_back({job.name, robustness::method_name(e.method), std::to_string(job.target), r.success ? "1" : "0",
                    std::to_string(r.predicted), robustness::fixed(r.distance), robustness::fixed(r.gap),
                    std::to_string(r.iterations)});
  }
  std::string csv;
  for (const auto& row : rows) csv += io::csv_line(row);
  io::write_file_atomic(dir / "attack_summary.csv", csv);
  out << robustness::format_table(rows);
  return code;
}

struct TransformArgs {
  std::string spec;
  std::string kind;
  std::optional<double> sigma, factor, offset;
  std::optional<int> quality;
  std::size_t radius = 3;
  std::uint64_t seed = 0;
  std::string input, output;
};

inline transforms::TransformSpec transform_spec(const TransformArgs& a) {
  using transforms::Kind;
  if (!a.spec.empty()) {
    if (!a.kind.empty()) throw ConfigError("give either --spec or --kind, not both");
    transforms::TransformSpec t = transforms::parse_transform(a.spec);
    t.seed = a.seed;
    return t;
  }
  if (a.kind.empty()) throw ConfigError("--kind or --spec is required");
  transforms::TransformSpec t;
  t.kind = transforms::parse_kind(a.kind);
  t.radius = a.radius;
  t.seed = a.seed;
  auto need = [&](const auto& v, const char* name) {
    if (!v) throw ConfigError("--kind " + a.kind + " needs " + name);
    return static_cast<double>(*v);
  };
  switch (t.kind) {
    case Kind::identity: break;
    case Kind::noise:
    case Kind::blur: t.value = need(a.sigma, "--sigma"); break;
    case Kind::jpeg: t.value = need(a.quality, "--quality"); break;
    case Kind::contrast: t.value = need(a.factor, "--factor"); break;
    case Kind::brightness: t.value = need(a.offset, "--offset"); break;
  }
  t.validate();
  return t;
}

inline int cmd_transform(const TransformArgs& a, std::ostream& out) {
  const transforms::TransformSpec t = transform_spec(a);
  const Image img = io::read_image(a.input);
  io::write_image(a.output, transforms::apply(t, img));
  out << transforms::to_string(t) << ": " << a.input << " -> " << a.output << '\n';
  return kOk;
}

inline int cmd_evaluate(const Settings& s, std::ostream& out) {
  const io::RunConfig c = s.resolve();
  const nn::Network net = nn::load_weights(require_model(c));
  io::Dataset data = io::load_dataset(c.data, io::Split::test).head(c.samples);
  if (data.size() < c.samples)
    out << "note: dataset has only " << data.size() << " samples (requested " << c.samples << ")\n";

  std::vector<robustness::ExperimentReport> reports;
  for (robustness::Method m : c.methods) {
    robustness::ExperimentConfig e = c.experiment;
    e.method = m;
    e.jobs = job_count(e.jobs);
    reports.push_back(robustness::run_experiment(net, data.images, data.labels, e));
    io::write_file_atomic(c.output / ("records_" + robustness::method_name(m) + ".csv"),
                          robustness::records_csv(reports.back()));
  }
  const std::string report = robustness::report_csv(reports);
  const std::string summary = robustness::summary_csv(reports);
  io::write_file_atomic(c.output / "report.csv", report);
  io::write_file_atomic(c.output / "summary.csv", summary);
  out << robustness::format_table(io::parse_csv(summary)) << '\n' << robustness::format_table(io::parse_csv(report));
  return kOk;
}

inline int cmd_report(const std::string& path, std::ostream& out) {
  const auto rows = io::parse_csv(io::read_file(path));
  if (rows.empty()) throw ParseError("report has no header row", 0);
  out << robustness::format_table(rows);
  return kOk;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace detail;
  CLI::App app{"Perceptual adversarial examples: train, attack, transform, evaluate, report", "advp"};
  app.require_subcommand(1);
  app.fallthrough();
  Settings settings;
  app.add_option("-c,--config", settings.config_path, "INI configuration file (flags override it)");

  auto* train = app.add_subcommand("train", "train a classifier and write its weight file");
  data_flags(train, settings);
  flag(train, settings, "-o,--model", "model.path", "output weight file");
  flag(train, settings, "--arch", "model.architecture", "mnist, mnist-desk, cifar or cifar-desk");
  flag(train, settings, "--init-seed", "model.init_seed", "weight initialization seed");
  flag(train, settings, "--epochs", "train.epochs", "training epochs");
  flag(train, settings, "--batch-size", "train.batch_size", "mini-batch size");
  flag(train, settings, "--learning-rate", "train.learning_rate", "SGD learning rate");
  flag(train, settings, "--seed", "train.seed", "shuffle seed");
  flag(train, settings, "--limit", "train.limit", "use only the first N training samples");

  AttackArgs attack_args;
  auto* atk = app.add_subcommand("attack", "craft adversarial images for one image or dataset samples");
  data_flags(atk, settings);
  attack_flags(atk, settings);
  flag(atk, settings, "-m,--model", "model.path", "weight file");
  flag(atk, settings, "--seed", "experiment.seed", "seed for random targets");
  atk->add_option("--image", attack_args.image, "PGM/PPM input image (instead of the test set)");
  atk->add_option("--index", attack_args.index, "first test-set sample");
  atk->add_option("--count", attack_args.count, "number of test-set samples")->check(CLI::PositiveNumber);
  atk->add_option("--target", attack_args.target, "target class (random per sample if omitted)");
  atk->add_option("-o,--out", attack_args.out_dir, "output directory");

  TransformArgs targs;
  auto* tr = app.add_subcommand("transform", "apply one image transformation");
  tr->add_option("--spec", targs.spec, "transform as kind[:value[:radius]], e.g. jpeg:60");
  tr->add_option("--kind", targs.kind, "identity, noise, blur, jpeg, contrast or brightness");
  tr->add_option("--sigma", targs.sigma, "noise or blur standard deviation");
  tr->add_option("--radius", targs.radius, "blur kernel radius");
  tr->add_option("--quality", targs.quality, "JPEG quality 1..100");
  tr->add_option("--factor", targs.factor, "contrast factor");
  tr->add_option("--offset", targs.offset, "brightness offset");
  tr->add_option("--seed", targs.seed, "noise seed");
  tr->add_option("input", targs.input, "input PGM/PPM")->required();
  tr->add_option("output", targs.output, "output PGM/PPM")->required();

  auto* ev = app.add_subcommand("evaluate", "run the robustness experiment grid and write report.csv");
  data_flags(ev, settings);
  attack_flags(ev, settings);
  flag(ev, settings, "-m,--model", "model.path", "weight file");
  flag(ev, settings, "--methods", "experiment.methods", "comma-separated attack methods");
  flag(ev, settings, "--grid", "experiment.grid", "comma-separated transforms, e.g. noise:0.1,jpeg:60");
  flag(ev, settings, "--samples", "experiment.samples", "number of test samples");
  flag(ev, settings, "--seed", "experiment.seed", "experiment seed");
  flag(ev, settings, "-j,--jobs", "experiment.jobs", "worker threads (0 = all processors)");
  flag(ev, settings, "-o,--out", "experiment.output", "output directory");

  std::string report_path;
  auto* rep = app.add_subcommand("report", "pretty-print a report CSV");
  rep->add_option("report", report_path, "report CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (train->parsed()) return cmd_train(settings, out);
    if (atk->parsed()) return cmd_attack(settings, attack_args, out);
    if (tr->parsed()) return cmd_transform(targs, out);
    if (ev->parsed()) return cmd_evaluate(settings, out);
    if (rep->parsed()) return cmd_report(report_path, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const attack::StalledAttackError& e) {
    err << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {  // parse, integrity, version and I/O failures
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

}  // namespace advp::cli

#endif  // ADVP_CLI_HPP
