// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   acceptance --data <dir with MNIST IDX files> --work <scratch dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../unit/support.hpp"
#include "CLI11.hpp"
#include "advp/advp.hpp"

using namespace advp;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and thresholds.
constexpr std::size_t kGradientNets = 20;
constexpr std::size_t kMaxNetParameters = 10000;
constexpr double kFdStep = 1e-5;
constexpr double kGradientTolerance = 1e-4;
constexpr double kGradientSeconds = 60.0;

constexpr double kSmoothK1 = 0.84, kSmoothK1Tol = 5e-3;
constexpr double kSmoothK100 = 0.2000005, kSmoothK100Tol = 1e-6;

constexpr double kMinAccuracy = 0.90;
constexpr std::size_t kSamples = 100;
constexpr double kBudget = 70.0;
constexpr double kMinSuccessRate = 0.80;
constexpr double kAttackSeconds = 600.0;

constexpr double kRobustMargin = 0.10;
constexpr double kInversionTolerance = 0.05;
constexpr double kRobustSeconds = 1200.0;

constexpr double kDctTolerance = 1e-10;
constexpr double kPropertySeconds = 60.0;

constexpr std::uint64_t kExperimentSeed = 2017;
constexpr std::uint64_t kInitSeed = 7;

// Lifted budget for the baselines in the distance comparison: they stop at first success.
constexpr double kUnbounded = 1e12;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void print(int id, const std::string& title, const Verdict& v) {
  std::cout << "criterion " << id << " " << (v.pass ? "PASS" : "FAIL") << "  " << title << ": " << v.detail
            << std::endl;
  failures += !v.pass;
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------------------
// 1. Gradient correctness

Verdict gradient_check() {
  const auto start = Clock::now();
  Rng rng(20241016);
  double worst = 0.0;
  std::size_t biggest = 0, with_conv = 0, with_pool = 0;
  for (std::size_t n = 0; n < kGradientNets; ++n) {
    const nn::Network net = test::random_network(rng);
    biggest = std::max(biggest, net.parameter_count());
    for (const auto& layer : net.layers()) {
      with_conv += std::holds_alternative<nn::Convolution>(layer);
      with_pool += std::holds_alternative<nn::MaxPool>(layer);
    }
    const nn::Shape3 s = net.input_shape();
    Image x = test::random_image(rng, s.height, s.width, s.channels);
    x = test::tie_free_point(net, x, rng);
    std::vector<double> seed(net.class_count());
    for (double& v : seed) v = rng.uniform(-1.0, 1.0);
    const Tensor g = nn::input_gradient(net, x, seed);
    const std::vector<double> analytic(g.values().begin(), g.values().end());
    worst = std::max(worst, test::max_relative_error(analytic, test::finite_difference_gradient(net, x, seed, kFdStep)));
  }
  const double t = seconds_since(start);
  Verdict v;
  v.pass = worst < kGradientTolerance && biggest <= kMaxNetParameters && with_conv > 0 && with_pool > 0 &&
           t < kGradientSeconds;
  v.detail = std::to_string(kGradientNets) + " nets (largest " + std::to_string(biggest) +
             " params), max relative error " + num(worst * 1e6, 3) + "e-6 (limit 1e-4), " + num(t, 1) + " s";
  return v;
}

// ---------------------------------------------------------------------------
// 2. Smoothing fidelity

Verdict smoothing_check() {
  const std::vector<double> xy = {0.2, 0.1};
  const double k1 = attack::smoothed_max(xy, 1.0), k100 = attack::smoothed_max(xy, 100.0);
  Verdict v;
  v.pass = std::abs(k1 - kSmoothK1) <= kSmoothK1Tol && std::abs(k100 - kSmoothK100) <= kSmoothK100Tol;
  v.detail = "k=1 -> " + num(k1, 6) + " (0.84 +- 5e-3), k=100 -> " + num(k100, 9) + " (0.2000005 +- 1e-6)";
  return v;
}

// ---------------------------------------------------------------------------
// 3-6. Trained-model experiments

struct Artifacts {
  std::string weights;
  double accuracy = 0.0;
  double train_seconds = 0.0;
  robustness::ExperimentReport minimal_greedy;
  std::vector<robustness::ExperimentReport> minimal_baselines;  // fgsm, jsma with lifted budget
  double minimal_seconds = 0.0;
  std::vector<robustness::ExperimentReport> robust;  // greedy, fgsm, jsma at the shared budget
  double robust_seconds = 0.0;

  // Every CSV the run produces, keyed by file name.
  std::vector<std::pair<std::string, std::string>> files() const {
    std::vector<std::pair<std::string, std::string>> out;
    const std::vector<robustness::ExperimentReport> minimal = {minimal_greedy, minimal_baselines[0],
                                                               minimal_baselines[1]};
    out.emplace_back("minimal_summary.csv", robustness::summary_csv(minimal));
    for (const auto& r : minimal) out.emplace_back("minimal_records_" + r.method + ".csv", robustness::records_csv(r));
    out.emplace_back("robust_report.csv", robustness::report_csv(robust));
    out.emplace_back("robust_summary.csv", robustness::summary_csv(robust));
    for (const auto& r : robust) out.emplace_back("robust_records_" + r.method + ".csv", robustness::records_csv(r));
    return out;
  }
};

struct Selection {
  std::vector<Image> images;
  std::vector<std::size_t> labels;
};

robustness::ExperimentConfig experiment(robustness::Method m, attack::StopMode mode, double budget,
                                        std::vector<transforms::TransformSpec> grid) {
  robustness::ExperimentConfig cfg;
  cfg.method = m;
  cfg.attack.mode = mode;
  cfg.attack.max_distance = budget;
  cfg.grid = std::move(grid);
  cfg.seed = kExperimentSeed;
  cfg.jobs = jobs();
  return cfg;
}

std::vector<transforms::TransformSpec> robustness_grid() {
  return transforms::parse_grid("noise:0.05,noise:0.1,noise:0.15,noise:0.2,noise:0.25,jpeg:60");
}

Artifacts run_pipeline(const io::Dataset& train, const io::Dataset& test_set, Selection& selection) {
  Artifacts a;
  auto start = Clock::now();
  const nn::Architecture arch = nn::mnist_desk();
  const nn::Network net =
      nn::train(nn::Network::initialized(arch.input, arch.layers, kInitSeed), train.images, train.labels, {});
  a.train_seconds = seconds_since(start);
  a.weights = nn::serialize_weights(net);
  a.accuracy = nn::accuracy(net, test_set.images, test_set.labels);

  // The first 100 held-out images the model classifies correctly.
  selection = {};
  for (std::size_t i = 0; i < test_set.size() && selection.images.size() < kSamples; ++i)
    if (nn::forward(net, test_set.images[i]).argmax() == test_set.labels[i]) {
      selection.images.push_back(test_set.images[i]);
      selection.labels.push_back(test_set.labels[i]);
    }

  using robustness::Method;
  using attack::StopMode;
  start = Clock::now();
  a.minimal_greedy = robustness::run_experiment(net, selection.images, selection.labels,
                                                experiment(Method::greedy, StopMode::minimal, kBudget, {}));
  a.minimal_seconds = seconds_since(start) + a.train_seconds;
  for (Method m : {Method::fgsm, Method::jsma})
    a.minimal_baselines.push_back(robustness::run_experiment(net, selection.images, selection.labels,
                                                             experiment(m, StopMode::minimal, kUnbounded, {})));

  start = Clock::now();
  for (Method m : {Method::greedy, Method::fgsm, Method::jsma})
    a.robust.push_back(robustness::run_experiment(net, selection.images, selection.labels,
                                                  experiment(m, StopMode::robust_budget, kBudget, robustness_grid())));
  a.robust_seconds = seconds_since(start);
  return a;
}

Verdict success_check(const Artifacts& a, std::size_t selected) {
  const auto& rep = a.minimal_greedy;
  const double rate = selected ? static_cast<double>(rep.attack_success) / static_cast<double>(selected) : 0.0;
  Verdict v;
  v.pass = a.accuracy >= kMinAccuracy && selected == kSamples && rep.originally_correct == kSamples &&
           rate >= kMinSuccessRate && a.minimal_seconds < kAttackSeconds;
  v.detail = "held-out accuracy " + num(a.accuracy) + " (>= 0.90), greedy minimal success " +
             std::to_string(rep.attack_success) + "/" + std::to_string(selected) + " = " + num(rate, 2) +
             " (>= 0.80), stalled " + std::to_string(rep.stalled) + ", " + num(a.minimal_seconds, 0) +
             " s incl. training";
  return v;
}

Verdict distance_check(const Artifacts& a) {
  const auto& g = a.minimal_greedy.records;
  const auto& f = a.minimal_baselines[0].records;
  const auto& j = a.minimal_baselines[1].records;
  double dg = 0.0, df = 0.0, dj = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i].qualifies() && f[i].qualifies() && j[i].qualifies()) {
      dg += g[i].distance;
      df += f[i].distance;
      dj += j[i].distance;
      ++n;
    }
  Verdict v;
  if (n == 0) {
    v.detail = "no pair where all three methods succeed";
    return v;
  }
  dg /= n, df /= n, dj /= n;
  v.pass = dg < df && dg < dj;
  auto own = [](const robustness::ExperimentReport& r) {
    return r.method + " " + std::to_string(r.attack_success) + " ok, mean " + num(r.mean_distance, 2);
  };
  v.detail = "over " + std::to_string(n) + " pairs all methods solve: D greedy " + num(dg, 2) + ", fgsm " +
             num(df, 2) + ", jsma " + num(dj, 2) + " [per method: " + own(a.minimal_greedy) + "; " +
             own(a.minimal_baselines[0]) + "; " + own(a.minimal_baselines[1]) + "]";
  return v;
}

std::optional<double> r_value(const robustness::ExperimentReport& rep, std::size_t t) {
  if (!rep.robustness[t]) return std::nullopt;
  return rep.robustness[t]->value;
}

std::string r_text(const std::optional<double>& r) { return r ? num(*r, 3) : "N/A"; }

Verdict noise_check(const Artifacts& a) {
  constexpr std::size_t kNoiseLevels = 5, kSigma025 = 4;
  Verdict v;
  v.pass = a.robust_seconds < kRobustSeconds;
  std::ostringstream detail;
  for (const auto& rep : a.robust) {
    detail << rep.method << " R(noise .05..0.25) =";
    std::vector<double> rs;
    bool defined = true;
    for (std::size_t t = 0; t < kNoiseLevels; ++t) {
      const auto r = r_value(rep, t);
      detail << " " << r_text(r);
      defined = defined && r.has_value();
      if (r) rs.push_back(*r);
    }
    std::size_t inversions = 0;
    bool small = true;
    for (std::size_t t = 1; t < rs.size(); ++t)
      if (rs[t] > rs[t - 1]) {
        ++inversions;
        small = small && rs[t] - rs[t - 1] <= kInversionTolerance;
      }
    const bool monotone = defined && (inversions == 0 || (inversions == 1 && small));
    detail << (monotone ? " (non-increasing); " : defined ? " (NOT non-increasing); " : " (undefined); ");
    v.pass = v.pass && monotone;
  }
  const auto rg = r_value(a.robust[0], kSigma025), rf = r_value(a.robust[1], kSigma025);
  const bool margin = rg && rf && *rg >= *rf + kRobustMargin;
  v.pass = v.pass && margin;
  detail << "at sigma 0.25 greedy " << r_text(rg) << " vs fgsm " << r_text(rf) << " + 0.10"
         << (rf ? "" : " (fgsm has no successful example inside D_max, so R is undefined)") << ", "
         << num(a.robust_seconds, 0) << " s";
  v.detail = detail.str();
  return v;
}

Verdict jpeg_check(const Artifacts& a) {
  constexpr std::size_t kJpeg60 = 5;
  const auto rg = r_value(a.robust[0], kJpeg60), rf = r_value(a.robust[1], kJpeg60);
  Verdict v;
  v.pass = rg && rf && *rg > *rf;
  v.detail = "R(jpeg q=60) greedy " + r_text(rg) + " vs fgsm " + r_text(rf) +
             (rf ? "" : " (fgsm has no successful example inside D_max, so R is undefined)");
  return v;
}

// ---------------------------------------------------------------------------
// 7. Metric and transform invariants

Verdict property_check() {
  const auto start = Clock::now();
  Rng rng(77);
  std::vector<std::string> broken;
  auto require = [&](bool ok, const std::string& what) {
    if (!ok) broken.push_back(what);
  };

  for (int trial = 0; trial < 20; ++trial) {
    const Image x = test::random_image(rng, 12, 10, trial % 2 ? 3 : 1);
    const SensitivityMap sen = sensitivity_map(x);
    require(perceptual_distance(x, x, sen) == 0.0, "D(X,X) = 0");
    Image eta = x;
    for (double& e : eta.values()) e = rng.uniform(-0.05, 0.05);
    auto shifted = [&](double a) {
      Image y = x;
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * eta[i];
      return y;
    };
    const double d1 = perceptual_distance(x, shifted(1.0), sen);
    for (double a : {0.5, 2.0, 3.0})
      require(std::abs(perceptual_distance(x, shifted(a), sen) - a * d1) <= 1e-10 * std::max(1.0, a * d1),
              "D linear in perturbation scale");

    const Tensor sd = sd_map(x);
    for (std::size_t i = 0; i < sd.size(); ++i) {
      require(sen[i] <= 1.0 / kDefaultSdFloor && sen[i] > 0.0, "Sen capped at 1/eps_SD");
      for (std::size_t j = 0; j < sd.size(); ++j)
        if (sd[i] < sd[j]) require(sen[i] >= sen[j], "Sen anti-monotone in SD");
    }

    for (const auto& spec : transforms::default_grid()) {
      transforms::TransformSpec s = spec;
      s.seed = rng.next_u64();
      const Image y = transforms::apply(s, x);
      require(std::all_of(y.values().begin(), y.values().end(), [](double v) { return v >= 0.0 && v <= 1.0; }),
              "transform " + transforms::to_string(spec) + " stays in [0,1]");
    }

    transforms::Block block;
    for (double& b : block) b = rng.uniform();
    const transforms::Block back = transforms::idct2(transforms::dct2(block));
    for (std::size_t i = 0; i < block.size(); ++i)
      require(std::abs(back[i] - block[i]) < kDctTolerance, "DCT round trip");

    const Image flat = Tensor::image(9, 11, trial % 2 ? 3 : 1, rng.uniform());
    const Image blurred = transforms::gaussian_blur(flat, 1.0, 2);
    for (std::size_t i = 0; i < flat.size(); ++i)
      require(std::abs(blurred[i] - flat[i]) <= 1e-15, "constant image fixed by blur");
    require(transforms::adjust_contrast(flat, 1.0) == flat, "contrast c=1 is identity");
    require(transforms::adjust_brightness(flat, 0.0) == flat, "brightness b=0 is identity");
  }

  // R(identity) = 1 on a small classifier whose samples all survive the identity.
  const nn::Network net = test::random_network(rng);
  const nn::Shape3 s = net.input_shape();
  std::vector<Image> xs;
  std::vector<std::size_t> ys;
  for (int i = 0; i < 16; ++i) {
    xs.push_back(test::random_image(rng, s.height, s.width, s.channels));
    ys.push_back(nn::forward(net, xs.back()).argmax());
  }
  robustness::ExperimentConfig cfg;
  cfg.grid = transforms::parse_grid("identity");
  cfg.attack.max_distance = 1e6;
  const auto rep = robustness::run_experiment(net, xs, ys, cfg);
  require(rep.robustness[0] && rep.robustness[0]->value == 1.0, "R(identity) = 1");

  const double t = seconds_since(start);
  std::sort(broken.begin(), broken.end());
  broken.erase(std::unique(broken.begin(), broken.end()), broken.end());
  Verdict v;
  v.pass = broken.empty() && t < kPropertySeconds;
  std::string list;
  for (const auto& b : broken) list += (list.empty() ? "" : "; ") + b;
  v.detail = (broken.empty() ? std::string("all invariants hold") : "violated: " + list) + " (R(identity) over " +
             (rep.robustness[0] ? std::to_string(rep.robustness[0]->denominator) : std::string("0")) +
             " samples), " + num(t, 1) + " s";
  return v;
}

// ---------------------------------------------------------------------------

void write_artifacts(const fs::path& dir, const Artifacts& a) {
  for (const auto& [name, text] : a.files()) io::write_file_atomic(dir / name, text);
  io::write_file_atomic(dir / "model.json", a.weights);
}

Verdict determinism_check(const Artifacts& first, const Artifacts& second) {
  const auto f1 = first.files(), f2 = second.files();
  std::vector<std::string> differing;
  for (std::size_t i = 0; i < f1.size(); ++i)
    if (f1[i].second != f2[i].second) differing.push_back(f1[i].first);
  if (first.weights != second.weights) differing.push_back("model.json");
  Verdict v;
  v.pass = differing.empty();
  std::string list;
  for (const auto& d : differing) list += " " + d;
  v.detail = v.pass ? std::to_string(f1.size()) + " report CSVs and the trained weights are bit-identical across reruns"
                    : "differences in" + list;
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance run"};
  fs::path data_dir = "data/mnist", work_dir = "acceptance_work";
  app.add_option("--data", data_dir, "directory holding the MNIST IDX files");
  app.add_option("--work", work_dir, "scratch directory for run artifacts");
  CLI11_PARSE(app, argc, argv);

  print(1, "gradient correctness", gradient_check());
  print(2, "smoothing fidelity", smoothing_check());

  std::optional<io::Dataset> train, test_set;
  std::string data_error;
  try {
    train = io::load_mnist(data_dir / "train-images-idx3-ubyte", data_dir / "train-labels-idx1-ubyte");
    test_set = io::load_mnist(data_dir / "test-images-idx3-ubyte", data_dir / "test-labels-idx1-ubyte");
  } catch (const std::exception& e) {
    data_error = e.what();
  }

  if (!train) {
    const Verdict missing{false, "MNIST data unavailable (" + data_error + "); run scripts/fetch_mnist.py"};
    print(3, "attack success", missing);
    print(4, "imperceptibility ordering", missing);
    print(5, "robustness under noise", missing);
    print(6, "jpeg ordering", missing);
    print(7, "metric/transform invariants", property_check());
    print(8, "determinism", missing);
  } else {
    std::cout << "training on " << train->size() << " images, evaluating on " << test_set->size() << std::endl;
    Selection selection;
    const Artifacts first = run_pipeline(*train, *test_set, selection);
    write_artifacts(work_dir / "run1", first);
    print(3, "attack success", success_check(first, selection.images.size()));
    print(4, "imperceptibility ordering", distance_check(first));
    print(5, "robustness under noise", noise_check(first));
    print(6, "jpeg ordering", jpeg_check(first));
    print(7, "metric/transform invariants", property_check());

    Selection again;
    const Artifacts second = run_pipeline(*train, *test_set, again);
    write_artifacts(work_dir / "run2", second);
    print(8, "determinism", determinism_check(first, second));
  }

  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
