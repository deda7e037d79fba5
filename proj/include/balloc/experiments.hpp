#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "balloc/load_state.hpp"
#include "balloc/potentials.hpp"
#include "balloc/process.hpp"
#include "balloc/table.hpp"

namespace balloc {

// Declarative sweep; see README for the key=value file schema.
struct ExperimentConfig {
  std::string process = "two-choice";
  std::vector<std::size_t> n{1024};
  std::vector<double> beta;
  std::vector<double> delta;
  std::vector<int> d;
  std::vector<std::string> b;  // batch sizes: "n", "2n", "4096", ...
  std::string m = "10n";
  std::size_t repetitions = 50;
  std::uint64_t seed = 1;
  std::string probes = "every:n";  // "final", "every:n", "every:<k>", or a comma list of count rules
  std::string gamma = "none";      // "none", a number, "corollary", "theorem"
  std::vector<double> thresholds;
  std::string weights = "unit";
  std::string graph;  // graph spec for the graphical process
  std::string tie = "higher-index";
  std::string output;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  void validate() const;
};

// "1000" → 1000, "200n", "10nlogn" (natural log, rounded up), "50b"; a bare
// multiplier may be omitted ("n", "nlogn", "b").
std::uint64_t resolve_count(const std::string& rule, std::size_t n, std::size_t b = 0);

// One point of the factorial sweep.
struct SweepPoint {
  ProcessSpec spec;
  std::size_t n = 0;
  std::uint64_t m = 0;
  std::size_t b = 0;
  double gamma = 0.0;
  std::optional<ConditionParams> cond;
  double c_cap = 0.0;
  double s_const = 0.0;
  std::string conductance_source;  // "exact" or "bounds" for graphical points
};

std::vector<SweepPoint> expand(const ExperimentConfig& config);

// Parameters under which the process's vector (or comparison vector) meets C₁/C₂.
std::optional<ConditionParams> process_condition_params(const ProcessSpec& spec, std::size_t n);

std::vector<std::string> record_columns(const ExperimentConfig& config);

using RowSink = std::function<void(const std::vector<Cell>&)>;

// Runs the full sweep; rows reach the sink ordered by (point, repetition, step).
Table sweep(const ExperimentConfig& config, const RowSink& sink = nullptr);

struct PointSummary {
  std::string key;
  std::size_t n = 0;
  double beta = 0.0;
  double delta = 0.0;
  double b = 0.0;
  std::vector<double> final_gaps;  // one per seed
  double median_gap = 0.0;
};

// Final-step gap per seed, grouped by configuration point in table order.
std::vector<PointSummary> summarize(const Table& table);

// Per-(config point, step) median and 5%/95% quantiles of gap, max_abs_y, gamma_total.
Table aggregate(const Table& table);

enum class ScalingAxis { kBeta, kDelta, kBOverN, kLogN };
ScalingAxis parse_axis(const std::string& s);

struct FitPoint {
  double axis_value = 0.0;
  std::size_t n = 0;
  double median_gap = 0.0;
  double predictor = 0.0;
};

struct FitReport {
  ScalingAxis axis = ScalingAxis::kLogN;
  std::vector<FitPoint> points;
  double kappa = 0.0;  // least squares through the origin: gap ≈ κ̂·predictor
  double max_rel_residual = 0.0;
  double slope = 0.0;  // affine least squares gap ≈ slope·predictor + intercept
  double intercept = 0.0;
};

FitReport gap_scaling_report(const Table& table, ScalingAxis axis);

struct OutsideCounts {
  std::int64_t above = 0;
  std::int64_t below = 0;
};

// Bins with ỹ ≥ z and with ỹ ≤ −z.
OutsideCounts count_bins_outside(const LoadState& state, double z);

// q·n for the uniform part of the process's allocation (q ≥ c/n); throws when absent.
double uniform_component(const ProcessSpec& spec);

struct LowerBoundResult {
  double pass_fraction = 0.0;
  std::uint64_t m = 0;
  double kappa = 0.0;
  std::vector<double> gaps;
};

// Gap ≥ κ·ln n after m = c_scale·n·ln n balls.
LowerBoundResult lower_bound_trials(const ProcessSpec& spec, std::size_t n, double c_scale, double kappa,
                                    std::size_t reps, std::uint64_t seed);
// κ̂ = 0.5 × the 5th percentile of Gap/ln n at the calibration n.
double fit_lower_bound_kappa(const ProcessSpec& spec, std::size_t n, double c_scale, std::size_t reps,
                             std::uint64_t seed);
// Exponential weights, m = n: Gap ≥ ½·ln n.
LowerBoundResult exponential_weight_lower_bound(ProcessSpec spec, std::size_t n, std::size_t reps,
                                                std::uint64_t seed);

struct HeightResult {
  double c_fitted = 0.0;
  std::vector<double> z;
  std::vector<double> pass_fraction;
};

// m = n·z balls per z. above: count{ỹ ≥ z} ≥ ½·n·e^{−c z}; below: count{ỹ ≤ −z}.
// c is fitted at the smallest z (tightest value with 95% of seeds passing) and held.
HeightResult height_experiment(const ProcessSpec& spec, std::size_t n, std::vector<double> zs, std::size_t reps,
                               std::uint64_t seed, bool above);

double median(std::vector<double> xs);
double quantile(std::vector<double> xs, double q);

}  // namespace balloc
