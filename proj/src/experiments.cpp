#include "balloc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "balloc/config_file.hpp"
#include "balloc/error.hpp"
#include "balloc/graphs.hpp"
#include "balloc/weights.hpp"

namespace balloc {

namespace {

const char* const kConfigColumns[] = {"process", "n", "beta", "delta", "d", "b", "weights", "graph", "conductance", "m"};
constexpr std::size_t kNumConfigColumns = std::size(kConfigColumns);

std::string format_z(double z) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", z);
  return buf;
}

bool is_quantile_kind(ProcessKind k) {
  return k == ProcessKind::kQuantile || k == ProcessKind::kTwinning || k == ProcessKind::kPenalty;
}

ProcessKind kind_of(const std::string& name) {
  static const std::map<std::string, ProcessKind> kinds = {
      {"one-choice", ProcessKind::kOneChoice},       {"two-choice", ProcessKind::kDChoice},
      {"d-choice", ProcessKind::kDChoice},           {"one-plus-beta", ProcessKind::kOnePlusBeta},
      {"quantile", ProcessKind::kQuantile},          {"twinning", ProcessKind::kTwinning},
      {"penalty", ProcessKind::kPenalty},            {"reset-memory", ProcessKind::kResetMemory},
      {"graphical", ProcessKind::kGraphical}};
  auto it = kinds.find(name);
  if (it == kinds.end()) throw ValidationError("unknown process '" + name + "'");
  return it->second;
}

double c_cap_of(const ProcessSpec& spec) {
  return spec.kind == ProcessKind::kDChoice ? static_cast<double>(spec.d) : 2.0;
}

}  // namespace

std::uint64_t resolve_count(const std::string& raw, std::size_t n, std::size_t b) {
  std::string rule = trim(raw);
  if (rule.empty()) throw ValidationError("empty count rule");
  auto split = [&](const std::string& suffix, double& k) {
    if (rule.size() < suffix.size() || rule.compare(rule.size() - suffix.size(), suffix.size(), suffix) != 0) {
      return false;
    }
    std::string head = rule.substr(0, rule.size() - suffix.size());
    k = head.empty() ? 1.0 : parse_double(head, "count rule '" + rule + "'");
    return true;
  };
  const double nn = static_cast<double>(n);
  double k = 0.0;
  double value;
  if (split("nlogn", k)) {
    value = k * nn * std::log(nn);
  } else if (split("n", k)) {
    value = k * nn;
  } else if (split("b", k)) {
    if (b == 0) throw ValidationError("count rule '" + rule + "' needs a batch size b");
    value = k * static_cast<double>(b);
  } else {
    value = parse_double(rule, "count rule");
  }
  if (!(value >= 0.0) || !std::isfinite(value)) throw ValidationError("count rule '" + rule + "' is negative");
  return static_cast<std::uint64_t>(std::ceil(value - 1e-9));
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig c;
  bool have_process = false;
  for (const auto& e : parse_key_values(text)) {
    const std::string where = "config line " + std::to_string(e.line) + " (" + e.key + ")";
    auto doubles = [&] {
      std::vector<double> out;
      for (auto& s : split_list(e.value)) out.push_back(parse_double(s, where));
      return out;
    };
    if (e.key == "process") {
      c.process = e.value;
      have_process = true;
    } else if (e.key == "n") {
      c.n.clear();
      for (auto& s : split_list(e.value)) {
        long long v = parse_int(s, where);
        if (v < 1) throw ValidationError(where + ": n must be >= 1");
        c.n.push_back(static_cast<std::size_t>(v));
      }
    } else if (e.key == "beta") {
      c.beta = doubles();
    } else if (e.key == "delta") {
      c.delta = doubles();
    } else if (e.key == "d") {
      for (auto& s : split_list(e.value)) c.d.push_back(static_cast<int>(parse_int(s, where)));
    } else if (e.key == "b") {
      c.b = split_list(e.value);
    } else if (e.key == "m") {
      c.m = e.value;
    } else if (e.key == "repetitions") {
      long long v = parse_int(e.value, where);
      if (v < 1) throw ValidationError(where + ": repetitions must be >= 1");
      c.repetitions = static_cast<std::size_t>(v);
    } else if (e.key == "seed") {
      c.seed = static_cast<std::uint64_t>(parse_int(e.value, where));
    } else if (e.key == "probes") {
      c.probes = e.value;
    } else if (e.key == "gamma") {
      c.gamma = e.value;
    } else if (e.key == "thresholds") {
      c.thresholds = doubles();
    } else if (e.key == "weights") {
      c.weights = e.value;
    } else if (e.key == "graph") {
      c.graph = e.value;
    } else if (e.key == "tie") {
      c.tie = e.value;
    } else if (e.key == "output") {
      c.output = e.value;
    } else {
      throw ValidationError(where + ": unknown key '" + e.key + "'");
    }
  }
  if (!have_process) throw ValidationError("config: missing required key 'process'");
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) { return parse(read_text_file(path)); }

void ExperimentConfig::validate() const {
  ProcessKind kind = kind_of(process);
  if (n.empty()) throw ValidationError("config: n list is empty");
  if (repetitions < 1) throw ValidationError("config: repetitions must be >= 1");
  for (double z : thresholds)
    if (!(z > 0.0)) throw ValidationError("config: thresholds must be positive");
  if (tie != "higher-index" && tie != "random") throw ValidationError("config: tie must be higher-index or random");
  WeightDistribution w = WeightDistribution::parse(weights);
  if (!b.empty()) {
    if (!w.is_unit()) {
      throw ValidationError("config: the batched setting is only defined for unit-weight balls (weights=" + weights + ")");
    }
    if (!(kind == ProcessKind::kOneChoice || kind == ProcessKind::kDChoice || kind == ProcessKind::kOnePlusBeta ||
          kind == ProcessKind::kQuantile)) {
      throw ValidationError("config: batched runs need a process with a time-homogeneous allocation vector");
    }
  }
  if ((kind == ProcessKind::kTwinning || kind == ProcessKind::kPenalty) && !w.is_unit()) {
    throw ValidationError("config: " + process + " allocates fixed integer ball counts; weights must be unit");
  }
  if (kind == ProcessKind::kOnePlusBeta && beta.empty()) throw ValidationError("config: one-plus-beta needs beta");
  if (is_quantile_kind(kind) && delta.empty()) throw ValidationError("config: " + process + " needs delta");
  if (process == "d-choice" && d.empty()) throw ValidationError("config: d-choice needs d");
  if (kind == ProcessKind::kGraphical && graph.empty()) throw ValidationError("config: graphical needs graph");
  if (probes != "final" && probes.rfind("every:", 0) != 0) {
    for (auto& r : split_list(probes)) resolve_count(r, 1024, 1024);
  }
  if (gamma != "none" && gamma != "corollary" && gamma != "theorem") {
    double g = parse_double(gamma, "config gamma");
    if (!(g > 0.0 && g <= 1.0)) throw ValidationError("config: gamma must lie in (0,1]");
  }
}

std::optional<ConditionParams> process_condition_params(const ProcessSpec& spec, std::size_t n) {
  auto divisible = [n](double delta) {
    double k = delta * static_cast<double>(n);
    return std::abs(k - std::round(k)) <= 1e-9;
  };
  switch (spec.kind) {
    case ProcessKind::kOnePlusBeta:
      if (spec.beta > 0.0 && spec.beta < 1.0 + 1e-15 && divisible(0.25)) return ConditionParams(0.25, spec.beta / 2.0, 2.0);
      return std::nullopt;
    case ProcessKind::kDChoice:
      if (spec.d >= 2 && divisible(0.25)) return ConditionParams(0.25, 0.5, static_cast<double>(spec.d));
      return std::nullopt;
    case ProcessKind::kResetMemory:
      if (divisible(0.25)) return ConditionParams(0.25, 0.5, 2.0);
      return std::nullopt;
    case ProcessKind::kQuantile:
    case ProcessKind::kTwinning:
    case ProcessKind::kPenalty:
      if (spec.delta > 0.0 && spec.delta < 1.0 && divisible(spec.delta)) {
        return ConditionParams(spec.delta, 1.0 - spec.delta, 2.0);
      }
      return std::nullopt;
    case ProcessKind::kGraphical: {
      if (!spec.graph || spec.graph->n() != n || n % 2 != 0) return std::nullopt;
      double phi = n <= kExactConductanceMaxN ? conductance_exact(*spec.graph) : conductance_bounds(*spec.graph).lower;
      if (!(phi > 0.0 && phi < 1.0)) return std::nullopt;
      return ConditionParams(0.5, phi, 2.0);
    }
    default:
      return std::nullopt;
  }
}

std::vector<SweepPoint> expand(const ExperimentConfig& config) {
  config.validate();
  const ProcessKind kind = kind_of(config.process);
  const WeightDistribution weights = WeightDistribution::parse(config.weights);
  std::vector<double> betas = kind == ProcessKind::kOnePlusBeta ? config.beta : std::vector<double>{0.0};
  std::vector<double> deltas = is_quantile_kind(kind) ? config.delta : std::vector<double>{0.0};
  std::vector<int> ds = config.process == "d-choice" ? config.d : std::vector<int>{kind == ProcessKind::kDChoice ? 2 : 1};
  std::vector<std::string> bs = config.b.empty() ? std::vector<std::string>{""} : config.b;

  std::vector<SweepPoint> points;
  for (std::size_t n : config.n) {
    std::shared_ptr<const RegularGraph> graph;
    if (kind == ProcessKind::kGraphical) {
      graph = std::make_shared<RegularGraph>(build_from_spec(config.graph, n, derive_seed(config.seed, 0x67726170ULL + n)));
    }
    for (double beta : betas)
      for (double delta : deltas)
        for (int d : ds)
          for (const auto& brule : bs) {
            SweepPoint p;
            p.n = n;
            p.spec.kind = kind;
            p.spec.d = d;
            p.spec.beta = beta;
            p.spec.weights = weights;
            p.spec.tie_rule = config.tie == "random" ? TieRule::kRandom : TieRule::kHigherIndex;
            p.spec.graph = graph;
            if (is_quantile_kind(kind)) {
              // Snap δ to the nearest feasible quantile k/n.
              double k = std::round(delta * static_cast<double>(n));
              if (k < 1.0) k = 1.0;
              p.spec.delta = k / static_cast<double>(n);
            }
            if (!brule.empty()) {
              p.b = static_cast<std::size_t>(resolve_count(brule, n));
              if (p.b == 0) throw ValidationError("config: batch size must be >= 1");
              p.spec.batch = p.b;
            }
            p.spec.validate(n);
            p.m = resolve_count(config.m, n, p.b);
            p.c_cap = c_cap_of(p.spec);
            p.s_const = drift_s_constant(weights);

            if (config.gamma == "none") {
              p.gamma = 0.0;
            } else if (config.gamma == "corollary" || config.gamma == "theorem") {
              p.cond = process_condition_params(p.spec, n);
              if (kind == ProcessKind::kGraphical) p.conductance_source = n <= kExactConductanceMaxN ? "exact" : "bounds";
              if (!p.cond) {
                throw ValidationError("config: no condition parameters for " + p.spec.name() + " at n=" + std::to_string(n) +
                                      " (gamma=" + config.gamma + ")");
              }
              const double ed = p.cond->epsilon * p.cond->delta;
              if (config.gamma == "corollary") {
                bool sequential_vector = p.spec.batch == 0 &&
                                         (p.spec.has_time_homogeneous_vector() || kind == ProcessKind::kGraphical);
                if (!sequential_vector) {
                  throw ValidationError("config: gamma=corollary applies to sequential one-ball processes; use gamma=theorem for " +
                                        p.spec.name());
                }
                p.gamma = gamma_for_weighted(*p.cond, p.c_cap, p.s_const);
              } else {
                double K;
                if (p.spec.batch > 0) {
                  K = 5.0 * p.c_cap * p.c_cap * static_cast<double>(p.b) / static_cast<double>(n);
                } else if (kind == ProcessKind::kTwinning || kind == ProcessKind::kPenalty) {
                  K = 5.0;
                } else if (kind == ProcessKind::kResetMemory) {
                  K = 6.0 * p.s_const;
                } else {
                  throw ValidationError("config: gamma=theorem covers twinning, penalty, reset-memory and batched runs; use gamma=corollary for " +
                                        p.spec.name());
                }
                p.gamma = std::min(1.0, ed / (8.0 * K));
              }
            } else {
              p.gamma = parse_double(config.gamma, "gamma");
            }
            points.push_back(std::move(p));
          }
  }
  return points;
}

std::vector<std::string> record_columns(const ExperimentConfig& config) {
  std::vector<std::string> cols(std::begin(kConfigColumns), std::end(kConfigColumns));
  for (const char* c : {"step", "gap", "max_abs_y", "gamma_value", "gamma_total"}) cols.emplace_back(c);
  for (double z : config.thresholds) cols.push_back("bins_ge_" + format_z(z));
  for (double z : config.thresholds) cols.push_back("bins_le_" + format_z(z));
  cols.emplace_back("seed");
  return cols;
}

namespace {

ProbeConfig probe_config(const ExperimentConfig& config, const SweepPoint& p) {
  ProbeConfig probes;
  probes.gamma = p.gamma;
  probes.thresholds = config.thresholds;
  probes.final = true;
  if (config.probes == "final") {
  } else if (config.probes.rfind("every:", 0) == 0) {
    probes.every = resolve_count(config.probes.substr(6), p.n, p.b);
    if (probes.every == 0) throw ValidationError("config: probe interval must be >= 1");
  } else {
    for (auto& r : split_list(config.probes)) probes.at.push_back(resolve_count(r, p.n, p.b));
    std::sort(probes.at.begin(), probes.at.end());
  }
  return probes;
}

std::vector<Cell> config_cells(const SweepPoint& p, const ExperimentConfig& config) {
  std::vector<Cell> row;
  row.emplace_back(p.spec.kind == ProcessKind::kDChoice && p.spec.d == 2 ? std::string("two-choice") : config.process);
  row.emplace_back(static_cast<std::int64_t>(p.n));
  row.emplace_back(p.spec.kind == ProcessKind::kOnePlusBeta ? Cell(p.spec.beta) : Cell());
  row.emplace_back(is_quantile_kind(p.spec.kind) ? Cell(p.spec.delta) : Cell());
  row.emplace_back(p.spec.kind == ProcessKind::kDChoice ? Cell(static_cast<std::int64_t>(p.spec.d)) : Cell());
  row.emplace_back(p.b > 0 ? Cell(static_cast<std::int64_t>(p.b)) : Cell());
  row.emplace_back(config.weights);
  row.emplace_back(p.spec.graph ? Cell(p.spec.graph->label()) : Cell());
  if (p.cond && p.spec.kind == ProcessKind::kGraphical) {
    row.emplace_back(p.conductance_source + ":" + format_cell(Cell(p.cond->epsilon)));
  } else {
    row.emplace_back(Cell());
  }
  row.emplace_back(static_cast<std::int64_t>(p.m));
  return row;
}

}  // namespace

Table sweep(const ExperimentConfig& config, const RowSink& sink) {
  auto points = expand(config);
  Table table;
  table.columns = record_columns(config);
  const std::size_t reps = config.repetitions;
  const std::size_t tasks = points.size() * reps;

  std::vector<std::vector<std::vector<Cell>>> results(tasks);
  std::vector<char> done(tasks, 0);
  std::vector<std::exception_ptr> errors(tasks);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (;;) {
      std::size_t t = next.fetch_add(1);
      if (t >= tasks) return;
      const SweepPoint& p = points[t / reps];
      std::size_t rep = t % reps;
      std::vector<std::vector<Cell>> rows;
      try {
        auto base = config_cells(p, config);
        std::uint64_t seed = derive_seed(config.seed, rep);
        run(p.spec, p.n, p.m, seed, probe_config(config, p), [&](const RunRecord& r, const LoadState&) {
          std::vector<Cell> row = base;
          row.emplace_back(static_cast<std::int64_t>(r.step));
          row.emplace_back(r.gap);
          row.emplace_back(r.max_abs_y);
          row.emplace_back(r.has_gamma ? Cell(r.gamma_value) : Cell());
          row.emplace_back(r.has_gamma ? Cell(r.gamma_total) : Cell());
          for (auto c : r.bins_ge) row.emplace_back(c);
          for (auto c : r.bins_le) row.emplace_back(c);
          row.emplace_back(static_cast<std::int64_t>(r.seed));
          rows.push_back(std::move(row));
        });
      } catch (...) {
        errors[t] = std::current_exception();
      }
      {
        std::lock_guard lock(mu);
        results[t] = std::move(rows);
        done[t] = 1;
      }
      cv.notify_all();
    }
  };

  unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(tasks)));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  std::exception_ptr first_error;
  for (std::size_t t = 0; t < tasks; ++t) {
    std::vector<std::vector<Cell>> rows;
    {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return done[t] != 0; });
      rows = std::move(results[t]);
    }
    if (errors[t] && !first_error) first_error = errors[t];
    for (auto& row : rows) {
      if (sink) sink(row);
      table.rows.push_back(std::move(row));
    }
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return table;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw ValidationError("quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  double pos = q * static_cast<double>(xs.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, xs.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return xs[lo] + (xs[hi] - xs[lo]) * frac;
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

namespace {

std::string row_key(const Table& t, std::size_t r) {
  std::string key;
  for (std::size_t c = 0; c < kNumConfigColumns && c < t.columns.size(); ++c) {
    if (c) key.push_back('|');
    key += t.text(r, c);
  }
  return key;
}

void require_record_table(const Table& t) {
  for (std::size_t c = 0; c < kNumConfigColumns; ++c) {
    if (t.columns.size() <= c || t.columns[c] != kConfigColumns[c]) {
      throw ValidationError("table is not a sweep record table (column '" + std::string(kConfigColumns[c]) + "')");
    }
  }
  t.column("step");
  t.column("gap");
  t.column("seed");
}

}  // namespace

std::vector<PointSummary> summarize(const Table& t) {
  require_record_table(t);
  const std::size_t c_step = t.column("step"), c_gap = t.column("gap"), c_seed = t.column("seed");
  std::vector<PointSummary> out;
  std::map<std::string, std::size_t> index;
  std::vector<std::map<std::int64_t, std::pair<double, double>>> finals;  // seed -> (step, gap)
  std::vector<std::vector<std::int64_t>> seed_order;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::string key = row_key(t, r);
    auto [it, inserted] = index.emplace(key, out.size());
    if (inserted) {
      PointSummary s;
      s.key = key;
      s.n = static_cast<std::size_t>(t.number(r, t.column("n")));
      double beta = t.number(r, t.column("beta")), delta = t.number(r, t.column("delta")), b = t.number(r, t.column("b"));
      s.beta = std::isnan(beta) ? 0.0 : beta;
      s.delta = std::isnan(delta) ? 0.0 : delta;
      s.b = std::isnan(b) ? 0.0 : b;
      out.push_back(s);
      finals.emplace_back();
      seed_order.emplace_back();
    }
    auto seed = static_cast<std::int64_t>(t.number(r, c_seed));
    auto& f = finals[it->second];
    double step = t.number(r, c_step);
    auto found = f.find(seed);
    if (found == f.end()) {
      seed_order[it->second].push_back(seed);
      f[seed] = {step, t.number(r, c_gap)};
    } else if (step >= found->second.first) {
      found->second = {step, t.number(r, c_gap)};
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (auto seed : seed_order[i]) out[i].final_gaps.push_back(finals[i][seed].second);
    out[i].median_gap = median(out[i].final_gaps);
  }
  return out;
}

Table aggregate(const Table& t) {
  require_record_table(t);
  const std::size_t c_step = t.column("step");
  const std::size_t c_gap = t.column("gap"), c_y = t.column("max_abs_y"), c_g = t.column("gamma_total");
  struct Group {
    std::size_t first_row;
    std::vector<double> gap, y, g;
  };
  std::vector<std::string> order;
  std::map<std::string, Group> groups;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::string key = row_key(t, r) + "#" + t.text(r, c_step);
    auto [it, inserted] = groups.emplace(key, Group{r, {}, {}, {}});
    if (inserted) order.push_back(key);
    it->second.gap.push_back(t.number(r, c_gap));
    it->second.y.push_back(t.number(r, c_y));
    it->second.g.push_back(t.number(r, c_g));
  }
  Table out;
  out.columns.assign(std::begin(kConfigColumns), std::end(kConfigColumns));
  for (const char* c : {"step", "runs", "gap_median", "gap_q05", "gap_q95", "max_abs_y_median", "gamma_total_median"}) {
    out.columns.emplace_back(c);
  }
  for (const auto& key : order) {
    const Group& g = groups[key];
    std::vector<Cell> row(t.rows[g.first_row].begin(), t.rows[g.first_row].begin() + kNumConfigColumns);
    row.push_back(t.rows[g.first_row][c_step]);
    row.emplace_back(static_cast<std::int64_t>(g.gap.size()));
    row.emplace_back(median(g.gap));
    row.emplace_back(quantile(g.gap, 0.05));
    row.emplace_back(quantile(g.gap, 0.95));
    row.emplace_back(median(g.y));
    bool has_gamma = std::none_of(g.g.begin(), g.g.end(), [](double v) { return std::isnan(v); });
    row.emplace_back(has_gamma ? Cell(median(g.g)) : Cell());
    out.rows.push_back(std::move(row));
  }
  return out;
}

ScalingAxis parse_axis(const std::string& s) {
  if (s == "beta") return ScalingAxis::kBeta;
  if (s == "delta") return ScalingAxis::kDelta;
  if (s == "b_over_n") return ScalingAxis::kBOverN;
  if (s == "log_n") return ScalingAxis::kLogN;
  throw ValidationError("unknown scaling axis '" + s + "' (beta, delta, b_over_n, log_n)");
}

FitReport gap_scaling_report(const Table& table, ScalingAxis axis) {
  auto points = summarize(table);
  if (points.size() < 3) throw ValidationError("gap_scaling_report: need at least 3 axis points, got " + std::to_string(points.size()));
  FitReport rep;
  rep.axis = axis;
  for (const auto& p : points) {
    FitPoint f;
    f.n = p.n;
    f.median_gap = p.median_gap;
    double ln = std::log(static_cast<double>(p.n));
    switch (axis) {
      case ScalingAxis::kBeta:
        if (!(p.beta > 0.0)) throw ValidationError("gap_scaling_report: beta axis needs beta > 0");
        f.axis_value = p.beta;
        f.predictor = ln / p.beta;
        break;
      case ScalingAxis::kDelta:
        if (!(p.delta > 0.0 && p.delta < 1.0)) throw ValidationError("gap_scaling_report: delta axis needs delta in (0,1)");
        f.axis_value = p.delta;
        f.predictor = p.delta <= 0.5 ? ln / p.delta : ln / (1.0 - p.delta);
        break;
      case ScalingAxis::kBOverN:
        if (!(p.b > 0.0)) throw ValidationError("gap_scaling_report: b_over_n axis needs batched rows");
        f.axis_value = p.b / static_cast<double>(p.n);
        f.predictor = f.axis_value * ln;
        break;
      case ScalingAxis::kLogN:
        f.axis_value = ln;
        f.predictor = ln;
        break;
    }
    rep.points.push_back(f);
  }
  double sxy = 0, sxx = 0, sx = 0, sy = 0;
  for (const auto& f : rep.points) {
    sxy += f.predictor * f.median_gap;
    sxx += f.predictor * f.predictor;
    sx += f.predictor;
    sy += f.median_gap;
  }
  const double k = static_cast<double>(rep.points.size());
  rep.kappa = sxy / sxx;
  double denom = k * sxx - sx * sx;
  if (std::abs(denom) > 1e-12 * k * sxx) {
    rep.slope = (k * sxy - sx * sy) / denom;
    rep.intercept = (sy - rep.slope * sx) / k;
  } else {
    rep.slope = rep.kappa;
  }
  for (const auto& f : rep.points) {
    double fit = rep.kappa * f.predictor;
    double rel = f.median_gap != 0.0 ? std::abs(f.median_gap - fit) / std::abs(f.median_gap) : std::abs(fit);
    rep.max_rel_residual = std::max(rep.max_rel_residual, rel);
  }
  return rep;
}

OutsideCounts count_bins_outside(const LoadState& state, double z) {
  if (!(z > 0.0)) throw ValidationError("count_bins_outside: z must be positive");
  OutsideCounts c;
  const double avg = state.average();
  for (double x : state.loads()) {
    double y = x - avg;
    if (y >= z) ++c.above;
    if (y <= -z) ++c.below;
  }
  return c;
}

double uniform_component(const ProcessSpec& spec) {
  switch (spec.kind) {
    case ProcessKind::kOneChoice:
    case ProcessKind::kTwinning:
    case ProcessKind::kResetMemory:
      return 1.0;
    case ProcessKind::kOnePlusBeta:
      if (spec.beta < 1.0) return 1.0 - spec.beta;
      break;
    case ProcessKind::kQuantile:
    case ProcessKind::kPenalty:
      return spec.delta;
    default:
      break;
  }
  throw ValidationError(spec.name() + " has no uniform allocation component (needs q >= c/n for every bin)");
}

LowerBoundResult lower_bound_trials(const ProcessSpec& spec, std::size_t n, double c_scale, double kappa,
                                    std::size_t reps, std::uint64_t seed) {
  uniform_component(spec);
  if (reps == 0) throw ValidationError("lower_bound_trials: reps must be >= 1");
  if (!(c_scale > 0.0)) throw ValidationError("lower_bound_trials: c_scale must be positive");
  LowerBoundResult res;
  res.kappa = kappa;
  const double ln = std::log(static_cast<double>(n));
  res.m = static_cast<std::uint64_t>(std::ceil(c_scale * static_cast<double>(n) * ln));
  std::size_t pass = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    double g = gap(run_to_state(spec, n, res.m, derive_seed(seed, r)));
    res.gaps.push_back(g);
    if (g >= kappa * ln) ++pass;
  }
  res.pass_fraction = static_cast<double>(pass) / static_cast<double>(reps);
  return res;
}

double fit_lower_bound_kappa(const ProcessSpec& spec, std::size_t n, double c_scale, std::size_t reps,
                             std::uint64_t seed) {
  auto res = lower_bound_trials(spec, n, c_scale, 0.0, reps, seed);
  std::vector<double> ratio;
  for (double g : res.gaps) ratio.push_back(g / std::log(static_cast<double>(n)));
  return 0.5 * quantile(ratio, 0.05);
}

LowerBoundResult exponential_weight_lower_bound(ProcessSpec spec, std::size_t n, std::size_t reps,
                                                std::uint64_t seed) {
  spec.weights = WeightDistribution::exponential();
  LowerBoundResult res;
  const double ln = std::log(static_cast<double>(n));
  res.kappa = 0.5;
  res.m = n;
  std::size_t pass = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    double g = gap(run_to_state(spec, n, n, derive_seed(seed, r)));
    res.gaps.push_back(g);
    if (g >= 0.5 * ln) ++pass;
  }
  res.pass_fraction = static_cast<double>(pass) / static_cast<double>(reps);
  return res;
}

HeightResult height_experiment(const ProcessSpec& spec, std::size_t n, std::vector<double> zs, std::size_t reps,
                               std::uint64_t seed, bool above) {
  if (zs.empty() || reps == 0) throw ValidationError("height_experiment: need z values and reps");
  std::sort(zs.begin(), zs.end());
  HeightResult res;
  res.z = zs;
  std::vector<std::vector<double>> counts(zs.size());
  for (std::size_t k = 0; k < zs.size(); ++k) {
    auto m = static_cast<std::uint64_t>(std::ceil(static_cast<double>(n) * zs[k]));
    for (std::size_t r = 0; r < reps; ++r) {
      auto c = count_bins_outside(run_to_state(spec, n, m, derive_seed(seed, r)), zs[k]);
      counts[k].push_back(static_cast<double>(above ? c.above : c.below));
    }
  }
  double q = quantile(counts[0], 0.05);
  if (!(q > 0.0)) throw ValidationError("height_experiment: calibration counts are zero; choose a smaller z");
  res.c_fitted = -std::log(2.0 * q / static_cast<double>(n)) / zs[0];
  for (std::size_t k = 0; k < zs.size(); ++k) {
    double need = 0.5 * static_cast<double>(n) * std::exp(-res.c_fitted * zs[k]);
    auto pass = std::count_if(counts[k].begin(), counts[k].end(), [&](double c) { return c >= need * (1 - 1e-12); });
    res.pass_fraction.push_back(static_cast<double>(pass) / static_cast<double>(reps));
  }
  return res;
}

}  // namespace balloc
