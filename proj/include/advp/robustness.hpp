#ifndef ADVP_ROBUSTNESS_HPP
#define ADVP_ROBUSTNESS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "advp/attack/baselines.hpp"
#include "advp/attack/greedy.hpp"
#include "advp/errors.hpp"
#include "advp/io/csv.hpp"
#include "advp/nn/network.hpp"
#include "advp/perception.hpp"
#include "advp/rng.hpp"
#include "advp/transforms.hpp"

namespace advp::robustness {

enum class Method { greedy, fgsm, jsma };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::greedy: return "greedy";
    case Method::fgsm: return "fgsm";
    case Method::jsma: return "jsma";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "greedy") return Method::greedy;
  if (s == "fgsm") return Method::fgsm;
  if (s == "jsma") return Method::jsma;
  throw ConfigError("unknown attack method '" + s + "' (expected greedy, fgsm or jsma)");
}

/// 1 iff the network's argmax (lowest index on ties) equals `label`.
inline int indicator_C(const nn::Network& net, const Image& image, std::size_t label) {
  return nn::forward(net, image).argmax() == label ? 1 : 0;
}

struct RobustnessRecord {
  std::size_t sample_id = 0;
  std::size_t label = 0;
  std::size_t original_prediction = 0;
  std::size_t target = 0;
  bool attack_success = false;
  bool stalled = false;
  double distance = 0.0;
  double gap = 0.0;
  std::size_t iterations = 0;
  std::vector<std::optional<bool>> survived;  // per transform; engaged only when attack_success

  bool originally_correct() const { return original_prediction == label; }
  bool qualifies() const { return originally_correct() && attack_success; }
  friend bool operator==(const RobustnessRecord&, const RobustnessRecord&) = default;
};

struct RatioEstimate {
  std::size_t numerator = 0;
  std::size_t denominator = 0;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// 95% Wilson score interval for k successes out of n > 0 trials.
inline std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054) {
  if (n == 0) throw UndefinedMetricError("Wilson interval of zero trials");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z / (1 + z2 / nn) * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Fraction of originally-correct, successfully attacked samples whose transformed
/// adversarial image is still classified as the target.
inline RatioEstimate robustness_R(std::span<const RobustnessRecord> records, std::size_t transform) {
  RatioEstimate r;
  for (const auto& rec : records) {
    if (!rec.qualifies()) continue;
    if (transform >= rec.survived.size() || !rec.survived[transform])
      throw ConfigError("record " + std::to_string(rec.sample_id) + " lacks a survival flag for transform " +
                        std::to_string(transform));
    ++r.denominator;
    r.numerator += *rec.survived[transform] ? 1 : 0;
  }
  if (r.denominator == 0) throw UndefinedMetricError("robustness undefined: no originally-correct successful attacks");
  r.value = static_cast<double>(r.numerator) / static_cast<double>(r.denominator);
  std::tie(r.ci_low, r.ci_high) = wilson_interval(r.numerator, r.denominator);
  return r;
}

struct ExperimentConfig {
  Method method = Method::greedy;
  attack::AttackConfig attack;  // mode, budget and greedy settings; target is assigned per sample
  double fgsm_step = 0.005;
  std::size_t fgsm_iterations = 500;
  double jsma_theta = 1.0;
  std::vector<transforms::TransformSpec> grid;
  std::uint64_t seed = 2017;
  std::size_t jobs = 1;
};

struct ExperimentReport {
  std::string method;
  std::vector<transforms::TransformSpec> grid;
  std::vector<std::optional<RatioEstimate>> robustness;  // per transform; empty optional = N/A
  std::size_t samples = 0;                                // m
  std::size_t originally_correct = 0;
  std::size_t attack_success = 0;  // among originally correct
  std::size_t stalled = 0;
  double mean_distance = 0.0;  // over qualifying samples
  double mean_gap = 0.0;
  std::vector<RobustnessRecord> records;
};

// Independent streams derived from the experiment seed, indexed by sample id.
inline constexpr std::uint64_t kTargetStream = 1;
inline constexpr std::uint64_t kNoiseStream = 2;

/// Uniform random target among the classes other than `label`.
inline std::size_t assign_target(std::uint64_t seed, std::size_t sample_id, std::size_t label, std::size_t classes) {
  Rng rng(derive_seed(seed, {kTargetStream, sample_id}));
  const auto r = static_cast<std::size_t>(rng.below(classes - 1));
  return r >= label ? r + 1 : r;
}

inline std::uint64_t noise_seed(std::uint64_t seed, std::size_t sample_id, std::size_t transform) {
  return derive_seed(seed, {kNoiseStream, sample_id, transform});
}

/// Runs the configured attack on one sample (target already chosen).
inline attack::AttackResult run_attack(const nn::Network& net, const Image& image, std::size_t target,
                                       const ExperimentConfig& cfg) {
  const auto& a = cfg.attack;
  const SensitivityMap sen = sensitivity_map(image, a.window, a.sd_floor);
  switch (cfg.method) {
    case Method::greedy: {
      attack::AttackConfig g = a;
      g.target = target;
      return attack::greedy_attack(net, image, g, sen);
    }
    case Method::fgsm: {
      attack::FgsmConfig f;
      f.target = target;
      f.step = cfg.fgsm_step;
      f.max_iterations = cfg.fgsm_iterations;
      f.max_distance = a.max_distance;
      f.mode = a.mode;
      f.smoothing = a.smoothing;
      return attack::fgsm_attack(net, image, f, sen);
    }
    case Method::jsma: {
      attack::JsmaConfig j;
      j.target = target;
      j.theta = cfg.jsma_theta;
      j.max_iterations = a.max_iterations;
      j.max_distance = a.max_distance;
      j.mode = a.mode;
      j.smoothing = a.smoothing;
      return attack::jsma_attack(net, image, j, sen);
    }
  }
  throw ConfigError("unknown method");
}

inline RobustnessRecord evaluate_sample(const nn::Network& net, const Image& image, std::size_t label,
                                        std::size_t sample_id, const ExperimentConfig& cfg) {
  RobustnessRecord rec;
  rec.sample_id = sample_id;
  rec.label = label;
  rec.target = assign_target(cfg.seed, sample_id, label, net.class_count());
  nn::Workspace ws;
  rec.original_prediction = nn::forward(net, image, ws).argmax();
  rec.survived.assign(cfg.grid.size(), std::nullopt);
  if (!rec.originally_correct()) return rec;

  attack::AttackResult result;
  try {
    result = run_attack(net, image, rec.target, cfg);
  } catch (const attack::StalledAttackError& e) {
    rec.stalled = true;
    rec.distance = e.partial().distance;
    rec.gap = e.partial().gap;
    rec.iterations = e.partial().iterations;
    return rec;
  }
  rec.attack_success = result.success;
  rec.distance = result.distance;
  rec.gap = result.gap;
  rec.iterations = result.iterations;
  if (!rec.attack_success) return rec;
  for (std::size_t t = 0; t < cfg.grid.size(); ++t) {
    transforms::TransformSpec spec = cfg.grid[t];
    spec.seed = noise_seed(cfg.seed, sample_id, t);
    rec.survived[t] = nn::forward(net, transforms::apply(spec, result.adversarial), ws).argmax() == rec.target;
  }
  return rec;
}

/// Aggregates per-transform robustness and the distance/gap summaries.
inline ExperimentReport summarize(std::string method, std::vector<transforms::TransformSpec> grid,
                                  std::vector<RobustnessRecord> records) {
  ExperimentReport rep;
  rep.method = std::move(method);
  rep.grid = std::move(grid);
  rep.samples = records.size();
  double dsum = 0.0, gsum = 0.0;
  for (const auto& r : records) {
    rep.originally_correct += r.originally_correct();
    rep.attack_success += r.qualifies();
    rep.stalled += r.stalled;
    if (r.qualifies()) {
      dsum += r.distance;
      gsum += r.gap;
    }
  }
  if (rep.attack_success) {
    rep.mean_distance = dsum / static_cast<double>(rep.attack_success);
    rep.mean_gap = gsum / static_cast<double>(rep.attack_success);
  }
  for (std::size_t t = 0; t < rep.grid.size(); ++t) {
    try {
      rep.robustness.emplace_back(robustness_R(records, t));
    } catch (const UndefinedMetricError&) {
      rep.robustness.emplace_back(std::nullopt);
    }
  }
  rep.records = std::move(records);
  return rep;
}

/// Attack every sample (targets drawn from cfg.seed), apply every transform to each
/// successful adversarial image, and aggregate. Samples are processed by cfg.jobs
/// worker threads; the result does not depend on the thread count.
inline ExperimentReport run_experiment(const nn::Network& net, std::span<const Image> images,
                                       std::span<const std::size_t> labels, const ExperimentConfig& cfg) {
  if (images.empty()) throw ConfigError("experiment needs at least one sample");
  if (images.size() != labels.size()) throw ConfigError("image/label count mismatch");
  for (const auto& t : cfg.grid) t.validate();
  std::vector<RobustnessRecord> records(images.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < images.size();) {
      try {
        records[i] = evaluate_sample(net, images[i], labels[i], i, cfg);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = images.size();
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(cfg.jobs, 1, images.size());
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return summarize(method_name(cfg.method), cfg.grid, std::move(records));
}

// ---------------------------------------------------------------------------
// Reporting

inline std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline const io::CsvRow& report_header() {
  static const io::CsvRow h = {"method", "transform", "parameter", "numerator", "denominator", "R", "ci_low", "ci_high"};
  return h;
}

/// One row per method x transform; R and its interval read "N/A" when undefined.
inline std::string report_csv(std::span<const ExperimentReport> reports) {
  std::string out = io::csv_line(report_header());
  for (const auto& rep : reports)
    for (std::size_t t = 0; t < rep.grid.size(); ++t) {
      const auto& spec = rep.grid[t];
      const auto& r = rep.robustness[t];
      std::size_t denominator = 0;
      for (const auto& rec : rep.records) denominator += rec.qualifies();
      io::CsvRow row = {rep.method, transforms::kind_name(spec.kind), transforms::parameter_string(spec)};
      if (r) {
        row.insert(row.end(), {std::to_string(r->numerator), std::to_string(r->denominator), fixed(r->value),
                               fixed(r->ci_low), fixed(r->ci_high)});
      } else {
        row.insert(row.end(), {"0", std::to_string(denominator), "N/A", "N/A", "N/A"});
      }
      out += io::csv_line(row);
    }
  return out;
}

inline std::string summary_csv(std::span<const ExperimentReport> reports) {
  std::string out = io::csv_line(
      {"method", "samples", "originally_correct", "attack_success", "stalled", "mean_distance", "mean_gap"});
  for (const auto& rep : reports)
    out += io::csv_line({rep.method, std::to_string(rep.samples), std::to_string(rep.originally_correct),
                         std::to_string(rep.attack_success), std::to_string(rep.stalled), fixed(rep.mean_distance),
                         fixed(rep.mean_gap)});
  return out;
}

/// Per-sample detail: one row per sample, survival flags as 1/0/- per transform.
inline std::string records_csv(const ExperimentReport& rep) {
  io::CsvRow header = {"method", "sample", "label", "original_prediction", "target", "attack_success",
                       "stalled", "distance", "gap", "iterations"};
  for (const auto& t : rep.grid) header.push_back(transforms::to_string(t));
  std::string out = io::csv_line(header);
  for (const auto& r : rep.records) {
    io::CsvRow row = {rep.method,
                      std::to_string(r.sample_id),
                      std::to_string(r.label),
                      std::to_string(r.original_prediction),
                      std::to_string(r.target),
                      r.attack_success ? "1" : "0",
                      r.stalled ? "1" : "0",
                      fixed(r.distance),
                      fixed(r.gap),
                      std::to_string(r.iterations)};
    for (const auto& s : r.survived) row.push_back(s ? (*s ? "1" : "0") : "-");
    out += io::csv_line(row);
  }
  return out;
}

/// Aligned plain-text rendering of CSV rows (first row is the header).
inline std::string format_table(const std::vector<io::CsvRow>& rows) {
  if (rows.empty()) return {};
  std::vector<std::size_t> width;
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (width.size() <= i) width.push_back(0);
      width[i] = std::max(width[i], row[i].size());
    }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      out += rows[r][i];
      if (i + 1 < rows[r].size()) out += std::string(width[i] - rows[r][i].size() + 2, ' ');
    }
    out += '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w + 2;
      out += std::string(total > 2 ? total - 2 : total, '-') + '\n';
    }
  }
  return out;
}

}  // namespace advp::robustness

#endif  // ADVP_ROBUSTNESS_HPP
