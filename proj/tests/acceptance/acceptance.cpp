// One line per acceptance criterion: "[PASS] <id> <title>: <evidence> (<seconds>s)".
// With no arguments every criterion runs; otherwise only the listed ids.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "balloc/cli.hpp"
#include "balloc/experiments.hpp"
#include "balloc/graphs.hpp"
#include "balloc/potentials.hpp"
#include "balloc/process.hpp"
#include "balloc/selftest.hpp"
#include "balloc/weights.hpp"

using namespace balloc;

namespace {

struct Verdict {
  bool pass = false;
  std::string evidence;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<double> final_gaps(const ProcessSpec& spec, std::size_t n, std::uint64_t m, std::size_t reps,
                               std::uint64_t seed) {
  std::vector<double> gaps;
  for (std::size_t r = 0; r < reps; ++r) gaps.push_back(gap(run_to_state(spec, n, m, derive_seed(seed, r))));
  return gaps;
}

std::uint64_t n_log_n(std::size_t n, double k) {
  return static_cast<std::uint64_t>(std::ceil(k * static_cast<double>(n) * std::log(static_cast<double>(n))));
}

// 1
Verdict key_lemma() {
  auto c = key_lemma_campaign(10000, 101);
  std::ostringstream e;
  e << c.instances << " instances, " << c.failures << " failures, " << c.misclassified << " off-target;";
  bool every_case = c.per_case.size() == 7;
  for (auto& [k, v] : c.per_case) {
    e << ' ' << to_string(k) << '=' << v;
    every_case = every_case && v >= 500;
  }
  e << "; min relative slack " << fmt("%.3g", c.min_relative_slack);
  if (!c.first_failure.empty()) e << "; " << c.first_failure;
  return {c.failures == 0 && c.misclassified == 0 && every_case && c.instances == 10000, e.str()};
}

// 2
Verdict exact_vectors() {
  CounterRng rng(202, 0);
  std::size_t compared = 0;
  auto distinct = [&](std::size_t n) {
    std::vector<double> loads(n);
    std::iota(loads.begin(), loads.end(), 0.0);
    std::shuffle(loads.begin(), loads.end(), rng);
    return LoadState::from_loads(loads);
  };
  const Rational betas[] = {Rational(1, 10), Rational(1, 4), Rational(1, 3), Rational(1, 2), Rational(2, 3), Rational(1)};
  for (std::int64_t n = 2; n <= 32; ++n) {
    const auto un = static_cast<std::size_t>(n);
    auto two = empirical_allocation_vector_exact(ProcessSpec::two_choice(), distinct(un));
    for (std::int64_t i = 1; i <= n; ++i) {
      if (two[i - 1] != Rational(2 * i - 1, n * n)) return {false, "two-choice mismatch at n=" + std::to_string(n)};
      ++compared;
    }
    for (const auto& beta : betas) {
      auto p = empirical_allocation_vector_exact(ProcessSpec::one_plus_beta(boost::rational_cast<double>(beta)),
                                                 distinct(un), beta);
      for (std::int64_t i = 1; i <= n; ++i) {
        if (p[i - 1] != (1 - beta) / n + beta * Rational(2 * i - 1, n * n)) {
          return {false, "one-plus-beta mismatch at n=" + std::to_string(n)};
        }
        ++compared;
      }
    }
    for (std::int64_t k0 = 1; k0 < n; ++k0) {
      Rational delta(k0, n);
      auto p = empirical_allocation_vector_exact(ProcessSpec::quantile(boost::rational_cast<double>(delta)), distinct(un));
      for (std::int64_t i = 1; i <= n; ++i) {
        if (p[i - 1] != (i <= k0 ? delta / n : (1 + delta) / n)) {
          return {false, "quantile mismatch at n=" + std::to_string(n) + " k0=" + std::to_string(k0)};
        }
        ++compared;
      }
    }
  }
  return {true, std::to_string(compared) + " rational entries equal, n = 2..32"};
}

// 3
Verdict expansion() {
  CounterRng rng(303, 0);
  std::size_t graphs = 0, orders = 0, violations = 0;
  for (const auto& g : small_graph_catalogue(24, 303)) {
    double phi = conductance_exact(g);
    ++graphs;
    for (int t = 0; t < 100; ++t) {
      std::vector<double> loads(g.n());
      std::iota(loads.begin(), loads.end(), 0.0);
      std::shuffle(loads.begin(), loads.end(), rng);
      violations += expansion_violations(graphical_allocation_vector(g, LoadState::from_loads(loads)), phi);
      ++orders;
    }
  }
  return {violations == 0, std::to_string(graphs) + " graphs, " + std::to_string(orders) + " load orders, " +
                               std::to_string(violations) + " violations"};
}

// 4
Verdict gamma_expectation() {
  const std::size_t n = 256, seeds = 30;
  std::ostringstream e;
  bool pass = true;
  struct Case {
    ProcessSpec spec;
    const char* name;
  } cases[] = {{ProcessSpec::one_plus_beta(1.0), "one-plus-beta(1)"}, {ProcessSpec::quantile(0.5), "quantile(1/2)"}};
  for (auto& c : cases) {
    auto cond = *process_condition_params(c.spec, n);
    ProbeConfig probes;
    probes.at = {n, 10 * n, n_log_n(n, 10.0)};
    probes.final = false;
    probes.gamma = gamma_for_weighted(cond, cond.c_cap, drift_s_constant(c.spec.weights));
    std::vector<std::vector<double>> totals(probes.at.size());
    for (std::size_t s = 0; s < seeds; ++s) {
      auto recs = run(c.spec, n, probes.at.back(), derive_seed(404, s), probes);
      for (const auto& r : recs) {
        auto it = std::find(probes.at.begin(), probes.at.end(), r.step);
        if (it != probes.at.end()) totals[static_cast<std::size_t>(it - probes.at.begin())].push_back(r.gamma_total);
      }
    }
    e << c.name << " gamma=" << fmt("%.6g", probes.gamma) << ":";
    for (std::size_t k = 0; k < totals.size(); ++k) {
      if (totals[k].size() != seeds) return {false, "missing probe rows"};
      auto chk = gamma_expectation_bound(totals[k], n, cond);
      pass = pass && chk.pass;
      e << " m=" << probes.at[k] << " mean " << fmt("%.1f", chk.value) << " <= " << fmt("%.1f", chk.bound);
    }
    e << "; ";
  }
  return {pass, e.str()};
}

// 5
Verdict one_plus_beta_scaling() {
  ExperimentConfig cfg;
  cfg.process = "one-plus-beta";
  cfg.n = {1024};
  cfg.beta = {0.1, 0.2, 0.4, 0.8};
  cfg.m = "200n";
  cfg.repetitions = 50;
  cfg.seed = 505;
  cfg.probes = "final";
  Table t = sweep(cfg);
  auto report = gap_scaling_report(t, ScalingAxis::kBeta);
  double lo = INFINITY, hi = 0;
  std::ostringstream e;
  for (const auto& p : report.points) {
    double v = p.median_gap * p.axis_value;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    e << "beta=" << p.axis_value << " median " << p.median_gap << "; ";
  }
  e << "gap*beta in [" << fmt("%.3g", lo) << ", " << fmt("%.3g", hi) << "], spread " << fmt("%.3g", hi / lo)
    << " (limit 2.5); fitted kappa " << fmt("%.3g", report.kappa);
  return {hi / lo <= 2.5, e.str()};
}

// 6
Verdict log_n_family() {
  const std::size_t ns[] = {256, 1024, 4096};
  struct Case {
    ProcessSpec spec;
    const char* name;
  } cases[] = {{ProcessSpec::twinning(0.5), "twinning(1/2)"},
               {ProcessSpec::penalty(0.5), "penalty(1/2)"},
               {ProcessSpec::reset_memory(), "reset-memory"}};
  bool pass = true;
  std::ostringstream e;
  for (auto& c : cases) {
    double lo = INFINITY, hi = 0;
    e << c.name << ":";
    for (std::size_t n : ns) {
      double v = median(final_gaps(c.spec, n, n_log_n(n, 4.0), 50, 606)) / std::log(static_cast<double>(n));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      e << ' ' << fmt("%.3f", v);
    }
    e << " (U/L " << fmt("%.2f", hi / lo) << "); ";
    pass = pass && hi / lo <= 3.0;
  }
  return {pass, e.str() + "gap/ln n at n = 2^8, 2^10, 2^12; limit U/L <= 3"};
}

// 7
Verdict lower_bounds() {
  std::ostringstream e;
  auto exp_res = exponential_weight_lower_bound(ProcessSpec::two_choice(), 4096, 100, 707);
  bool pass = exp_res.pass_fraction >= 0.95;
  e << "(a) exp1 two-choice m=n n=2^12: " << fmt("%.2f", exp_res.pass_fraction) << " of 100 seeds with gap >= 0.5 ln n"
    << " (min gap " << fmt("%.2f", *std::min_element(exp_res.gaps.begin(), exp_res.gaps.end())) << "); (b) ";
  struct Case {
    ProcessSpec spec;
    const char* name;
  } cases[] = {{ProcessSpec::twinning(0.5), "twinning(1/2)"},
               {ProcessSpec::penalty(0.5), "penalty(1/2)"},
               {ProcessSpec::reset_memory(), "reset-memory"},
               {ProcessSpec::one_choice(), "one-choice"}};
  for (auto& c : cases) {
    double kappa = fit_lower_bound_kappa(c.spec, 256, 1.0, 100, 717);
    auto res = lower_bound_trials(c.spec, 4096, 1.0, kappa, 100, 727);
    pass = pass && res.pass_fraction >= 0.95 && kappa > 0.0;
    e << c.name << " kappa=" << fmt("%.3f", kappa) << " pass " << fmt("%.2f", res.pass_fraction) << "; ";
  }
  return {pass, e.str()};
}

// 8
Verdict batched() {
  ExperimentConfig cfg;
  cfg.process = "two-choice";
  cfg.n = {1024};
  cfg.b = {"n", "2n", "4n", "8n"};
  cfg.m = "50b";
  cfg.repetitions = 30;
  cfg.seed = 808;
  cfg.probes = "final";
  Table t = sweep(cfg);
  auto report = gap_scaling_report(t, ScalingAxis::kBOverN);
  std::ostringstream e;
  bool monotone = true;
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    e << "b/n=" << report.points[i].axis_value << " median " << report.points[i].median_gap << "; ";
    if (i > 0 && !(report.points[i].median_gap > report.points[i - 1].median_gap)) monotone = false;
  }
  double ratio = report.points.back().median_gap / report.points.front().median_gap;
  e << "gap(8n)/gap(n) = " << fmt("%.2f", ratio) << " (limit [3, 16]); slope " << fmt("%.3g", report.slope);
  return {monotone && ratio >= 3.0 && ratio <= 16.0, e.str()};
}

// 9
Verdict graphical_ordering() {
  const std::size_t n = 1024;
  const auto m = n_log_n(n, 10.0);
  auto gaps_on = [&](const std::string& graph) {
    auto spec = ProcessSpec::graphical(std::make_shared<RegularGraph>(build_from_spec(graph, n, 909)));
    spec.weights = WeightDistribution::exponential();
    return median(final_gaps(spec, n, m, 30, 919));
  };
  double expander = gaps_on("random-regular:d=4"), cycle = gaps_on("cycle");
  std::ostringstream e;
  e << "median gap random 4-regular " << fmt("%.2f", expander) << ", cycle " << fmt("%.2f", cycle) << ", ratio "
    << fmt("%.2f", cycle / expander) << " (needs > 3)";
  return {expander < cycle / 3.0, e.str()};
}

// 10
Verdict properties_and_determinism() {
  auto results = run_selftest({});
  std::size_t failed = 0;
  std::string first;
  for (const auto& r : results) {
    if (!r.pass) {
      ++failed;
      if (first.empty()) first = r.module + "." + r.name + ": " + r.detail;
    }
  }
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / ("balloc-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "sweep.cfg");
    cfg << "process = one-plus-beta\nn = 64, 128\nbeta = 0.5, 1\nm = 20n\nrepetitions = 5\nseed = 11\n"
           "probes = every:5n\ngamma = corollary\nthresholds = 1, 2\n";
    std::ofstream dcfg(dir / "drift.cfg");
    dcfg << "process = quantile\ndelta = 0.5\nn = 32, 64\ninstances = 20\ntrials = 500\nseed = 5\n";
  }
  auto bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  std::ostringstream sink;
  bool identical = true;
  for (const char* cmd : {"simulate", "drift-check"}) {
    std::string cfg = (dir / (std::string(cmd) == "simulate" ? "sweep.cfg" : "drift.cfg")).string();
    std::string a = (dir / (std::string(cmd) + "-a.csv")).string(), b = (dir / (std::string(cmd) + "-b.csv")).string();
    int ca = cli_main({cmd, cfg, "-o", a}, sink, sink), cb = cli_main({cmd, cfg, "-o", b}, sink, sink);
    identical = identical && ca == 0 && cb == 0 && !bytes(a).empty() && bytes(a) == bytes(b);
  }
  fs::remove_all(dir);
  std::ostringstream e;
  e << results.size() - failed << "/" << results.size() << " properties pass; reruns of simulate and drift-check "
    << (identical ? "byte-identical" : "DIFFER");
  if (!first.empty()) e << "; " << first;
  return {failed == 0 && identical, e.str()};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "Key Lemma certification", key_lemma},
      {2, "Exact allocation vectors", exact_vectors},
      {3, "Expansion lemma", expansion},
      {4, "Gamma-expectation bound", gamma_expectation},
      {5, "Gap scaling, (1+beta)", one_plus_beta_scaling},
      {6, "Gap Theta(log n) family", log_n_family},
      {7, "Lower bounds", lower_bounds},
      {8, "Batched scaling", batched},
      {9, "Graphical weighted gap ordering", graphical_ordering},
      {10, "Property suites and determinism", properties_and_determinism},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& ex) {
      v = {false, std::string("exception: ") + ex.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.title << ": " << v.evidence << " ("
              << fmt("%.1f", secs) << "s)" << std::endl;
    if (!v.pass) ++failures;
  }
  return failures ? 1 : 0;
}
