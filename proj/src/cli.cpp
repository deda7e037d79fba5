#include "balloc/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "balloc/config_file.hpp"
#include "balloc/error.hpp"
#include "balloc/experiments.hpp"
#include "balloc/graphs.hpp"
#include "balloc/potentials.hpp"
#include "balloc/process.hpp"
#include "balloc/selftest.hpp"
#include "balloc/svg.hpp"
#include "balloc/table.hpp"

namespace balloc {

namespace fs = std::filesystem;

std::string format_fraction(double x) {
  if (std::isfinite(x)) {
    for (long q = 1; q <= 1000; ++q) {
      double p = std::round(x * static_cast<double>(q));
      if (std::abs(p / static_cast<double>(q) - x) <= 1e-12 * std::max(1.0, std::abs(x))) {
        auto pi = static_cast<long>(p);
        return q == 1 ? std::to_string(pi) : std::to_string(pi) + "/" + std::to_string(q);
      }
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

namespace {

std::string resolve_output(const std::string& explicit_path, const std::string& configured, const std::string& fallback) {
  if (!explicit_path.empty()) return explicit_path;
  fs::path p = configured.empty() ? fs::path(fallback) : fs::path(configured);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) p = fs::path(dir) / p;
  }
  return p.string();
}

void ensure_parent(const std::string& path) {
  fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// ------------------------------------------------------------------ drift-check

struct DriftCheckConfig {
  std::string process = "two-choice";
  std::vector<std::size_t> n{64};
  std::optional<double> beta, delta, epsilon, c_cap, k_const, r_const;
  int d = 2;
  std::vector<double> gamma{1e-3, 1e-2, 1e-1, 1.0};
  std::size_t instances = 100;
  long trials = 2000;
  std::size_t states = 3;
  std::string weights = "unit";
  std::string graph;
  std::string b;
  std::uint64_t seed = 1;
  std::string output;
};

DriftCheckConfig parse_drift_config(const std::string& text) {
  DriftCheckConfig c;
  for (const auto& e : parse_key_values(text)) {
    const std::string where = "config line " + std::to_string(e.line) + " (" + e.key + ")";
    auto num = [&] { return parse_double(e.value, where); };
    if (e.key == "process") c.process = e.value;
    else if (e.key == "n") {
      c.n.clear();
      for (auto& s : split_list(e.value)) {
        long long v = parse_int(s, where);
        if (v < 2) throw ValidationError(where + ": n must be >= 2");
        c.n.push_back(static_cast<std::size_t>(v));
      }
    } else if (e.key == "beta") c.beta = num();
    else if (e.key == "delta") c.delta = num();
    else if (e.key == "epsilon") c.epsilon = num();
    else if (e.key == "C") c.c_cap = num();
    else if (e.key == "K") c.k_const = num();
    else if (e.key == "R") c.r_const = num();
    else if (e.key == "d") c.d = static_cast<int>(parse_int(e.value, where));
    else if (e.key == "gamma") {
      c.gamma.clear();
      for (auto& s : split_list(e.value)) c.gamma.push_back(parse_double(s, where));
    } else if (e.key == "instances") c.instances = static_cast<std::size_t>(parse_int(e.value, where));
    else if (e.key == "trials") c.trials = static_cast<long>(parse_int(e.value, where));
    else if (e.key == "states") c.states = static_cast<std::size_t>(parse_int(e.value, where));
    else if (e.key == "weights") c.weights = e.value;
    else if (e.key == "graph") c.graph = e.value;
    else if (e.key == "b") c.b = e.value;
    else if (e.key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(e.value, where));
    else if (e.key == "output") c.output = e.value;
    else throw ValidationError(where + ": unknown key '" + e.key + "'");
  }
  for (double g : c.gamma)
    if (!(g > 0.0 && g <= 1.0)) throw ValidationError("drift-check: gamma values must lie in (0,1]");
  if (c.trials != 0 && c.trials < 2) throw ValidationError("drift-check: trials must be 0 or >= 2");
  return c;
}

ProcessSpec drift_process(const DriftCheckConfig& c, std::size_t n) {
  ProcessSpec spec;
  if (c.process == "one-choice") spec = ProcessSpec::one_choice();
  else if (c.process == "two-choice") spec = ProcessSpec::two_choice();
  else if (c.process == "d-choice") spec = ProcessSpec::d_choice(c.d);
  else if (c.process == "one-plus-beta") {
    if (!c.beta) throw ValidationError("drift-check: one-plus-beta needs beta");
    spec = ProcessSpec::one_plus_beta(*c.beta);
  } else if (c.process == "quantile" || c.process == "twinning" || c.process == "penalty") {
    if (!c.delta) throw ValidationError("drift-check: " + c.process + " needs delta");
    double k = std::max(1.0, std::round(*c.delta * static_cast<double>(n)));
    double d = k / static_cast<double>(n);
    spec = c.process == "quantile" ? ProcessSpec::quantile(d) : c.process == "twinning" ? ProcessSpec::twinning(d)
                                                                                         : ProcessSpec::penalty(d);
  } else if (c.process == "reset-memory") spec = ProcessSpec::reset_memory();
  else if (c.process == "graphical") {
    if (c.graph.empty()) throw ValidationError("drift-check: graphical needs graph");
    spec = ProcessSpec::graphical(std::make_shared<RegularGraph>(build_from_spec(c.graph, n, derive_seed(c.seed, n))));
  } else {
    throw ValidationError("drift-check: unknown process '" + c.process + "'");
  }
  spec.weights = WeightDistribution::parse(c.weights);
  if (!c.b.empty()) spec.batch = static_cast<std::size_t>(resolve_count(c.b, n));
  spec.validate(n);
  return spec;
}

// Vector the drift inequality is stated for: the process's own vector, or its comparison vector.
ProbabilityVector comparison_vector(const ProcessSpec& spec, const LoadState& state) {
  switch (spec.kind) {
    case ProcessKind::kTwinning:
    case ProcessKind::kPenalty:
      return allocation_vector(ProcessSpec::quantile(spec.delta), state.n());
    case ProcessKind::kResetMemory:
      return allocation_vector(ProcessSpec::two_choice(), state.n());
    case ProcessKind::kGraphical:
      return graphical_allocation_vector(*spec.graph, state);
    default:
      return allocation_vector(spec, state.n());
  }
}

int drift_check(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& output,
                std::ostream& out) {
  DriftCheckConfig c = parse_drift_config(read_text_file(config_path));
  if (seed) c.seed = *seed;
  Table report;
  report.columns = {"check", "process", "n", "delta", "epsilon", "gamma", "case", "value",
                    "bound", "slack", "std_error", "log_scale", "pass"};
  std::size_t rows = 0, failures = 0;
  auto add = [&](std::vector<Cell> row, bool pass) {
    row.emplace_back(static_cast<std::int64_t>(pass ? 1 : 0));
    report.rows.push_back(std::move(row));
    ++rows;
    if (!pass) ++failures;
  };

  for (std::size_t n : c.n) {
    ProcessSpec spec = drift_process(c, n);
    auto base = process_condition_params(spec, n);
    if (spec.kind == ProcessKind::kResetMemory) base = ConditionParams(0.25, 0.5, 2.0);
    if (!base && !(c.delta && c.epsilon)) {
      throw ValidationError("drift-check: no condition parameters for " + spec.name() + " at n=" + std::to_string(n) +
                            "; set delta and epsilon");
    }
    ConditionParams cond = base.value_or(ConditionParams());
    if (c.delta) cond.delta = *c.delta;
    if (c.epsilon) cond.epsilon = *c.epsilon;
    if (spec.kind == ProcessKind::kTwinning || spec.kind == ProcessKind::kPenalty || spec.kind == ProcessKind::kQuantile) {
      if (!c.delta || spec.delta != cond.delta) cond.delta = spec.delta;
    }
    cond = ConditionParams(cond.delta, cond.epsilon, c.c_cap.value_or(base ? base->c_cap : 2.0));
    const std::string name = spec.name();
    CounterRng rng(c.seed, n);

    // Key Lemma at every γ over engineered and random load vectors.
    static const KeyLemmaCase kCases[] = {KeyLemmaCase::kA1,  KeyLemmaCase::kA21, KeyLemmaCase::kA22,
                                          KeyLemmaCase::kB1,  KeyLemmaCase::kB21, KeyLemmaCase::kB22,
                                          KeyLemmaCase::kNoBadBins};
    for (double gamma : c.gamma) {
      for (std::size_t i = 0; i < c.instances; ++i) {
        std::vector<double> y;
        try {
          y = make_case_vector(kCases[i % 7], n, cond.delta, gamma, rng.next(), i % 3 == 0);
        } catch (const UnsupportedError&) {
          continue;
        }
        const double low = y.back();
        for (double& v : y) v -= low;
        auto state = LoadState::from_loads(y);
        ProbabilityVector p = comparison_vector(spec, state);
        auto r = certify_key_lemma(state, p, cond, gamma);
        add({std::string("key_lemma"), name, static_cast<std::int64_t>(n), cond.delta, cond.epsilon, gamma,
             to_string(r.which), r.drift, r.bound, r.slack, Cell(), r.log_scale},
            r.pass);
      }
    }

    if (c.trials == 0) continue;
    const WeightDistribution& w = spec.weights;
    const double s_eff = drift_s_constant(w);
    double K, R = 1.0;
    if (spec.batch > 0) {
      K = 5.0 * cond.c_cap * cond.c_cap * static_cast<double>(spec.batch) / static_cast<double>(n);
      R = static_cast<double>(spec.batch);
    } else if (spec.kind == ProcessKind::kTwinning || spec.kind == ProcessKind::kPenalty) {
      K = 5.0;
    } else if (spec.kind == ProcessKind::kResetMemory) {
      K = 6.0 * s_eff;
    } else {
      K = 2.0 * cond.c_cap * s_eff;
    }
    if (c.k_const) K = *c.k_const;
    if (c.r_const) R = *c.r_const;
    const double gamma = std::min(1.0, cond.epsilon * cond.delta / (8.0 * K));

    for (std::size_t s = 0; s < c.states; ++s) {
      ProcessSpec warm = spec;
      std::uint64_t m = static_cast<std::uint64_t>(s) * 5 * n;
      LoadState state = run_to_state(warm, n, m, derive_seed(c.seed, 1000 + s));
      ProbabilityVector p = comparison_vector(spec, state);
      auto chk = drift_step_bound_check(state, p, spec, gamma, K, R, c.trials, derive_seed(c.seed, 2000 + s));
      for (const CheckResult* r : {&chk.phi, &chk.psi}) {
        add({std::string(r == &chk.phi ? "drift_step_phi" : "drift_step_psi"), name, static_cast<std::int64_t>(n), cond.delta, cond.epsilon, gamma,
             std::string("m=") + std::to_string(m), r->value, r->bound, r->slack, r->std_error, Cell()},
            r->pass);
      }
    }
    if (!w.is_unit()) {
      for (double ell : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        auto r = moment_inequality_check(w, gamma, ell, 0, rng);
        add({std::string("moment"), name, static_cast<std::int64_t>(n), cond.delta, cond.epsilon, gamma,
             std::string("ell=") + format_cell(Cell(ell)), r.value, r.bound, r.slack, Cell(), Cell()},
            r.pass);
      }
    }
  }

  std::string path = resolve_output(output, c.output, stem_of(config_path) + "-drift.csv");
  ensure_parent(path);
  write_csv(report, path);
  out << "drift-check: " << rows << " checks, " << failures << " failed; report " << path << "\n";
  return failures ? kExitCheckFailed : kExitOk;
}

// ------------------------------------------------------------------ other subcommands

int simulate(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& output,
             const std::string& aggregate_path, std::ostream& out) {
  ExperimentConfig cfg = ExperimentConfig::load(config_path);
  if (seed) cfg.seed = *seed;
  std::string path = resolve_output(output, cfg.output, stem_of(config_path) + ".csv");
  ensure_parent(path);
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ValidationError("cannot write " + path);
  Table header;
  header.columns = record_columns(cfg);
  write_csv(header, file);
  std::size_t rows = 0;
  Table t = sweep(cfg, [&](const std::vector<Cell>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) file << ',';
      file << csv_escape(format_cell(row[i]));
    }
    file << '\n';
    ++rows;
  });
  file.close();
  if (!file) throw ValidationError("write failed: " + path);
  out << "simulate: " << rows << " rows (" << cfg.repetitions << " repetitions per point) -> " << path << "\n";
  if (!aggregate_path.empty()) {
    std::string agg = resolve_output(aggregate_path, "", "");
    ensure_parent(agg);
    write_csv(aggregate(t), agg);
    out << "aggregate -> " << agg << "\n";
  }
  return kExitOk;
}

int conductance(const std::string& file, const std::string& build_spec, std::size_t n, std::uint64_t seed,
                std::ostream& out) {
  if (file.empty() == build_spec.empty()) throw ValidationError("conductance: give a graph file or --build with --n");
  RegularGraph g = file.empty() ? build_from_spec(build_spec, n, seed) : read_graph_file(file);
  char buf[160];
  if (g.n() <= kExactConductanceMaxN) {
    std::snprintf(buf, sizeof buf, "phi = %g (exact)", conductance_exact(g));
  } else {
    auto b = conductance_bounds(g);
    std::snprintf(buf, sizeof buf, "phi in [%g, %g] (spectral bounds, lambda2 = %g%s)", b.lower, b.upper, b.lambda2,
                  b.converged ? "" : ", not converged");
  }
  out << buf << "\n";
  return kExitOk;
}

int vector_cmd(const std::string& process, std::size_t n, const std::string& graph, std::optional<double> delta,
               std::optional<double> epsilon, std::optional<double> c_cap, std::uint64_t seed, std::ostream& out) {
  ProcessSpec spec = parse_process_spec(process);
  ProbabilityVector p;
  if (spec.kind == ProcessKind::kGraphical) {
    if (graph.empty()) throw ValidationError("vector: graphical needs --graph");
    spec.graph = std::make_shared<RegularGraph>(build_from_spec(graph, n, seed));
    std::vector<double> loads(n);
    for (std::size_t i = 0; i < n; ++i) loads[i] = static_cast<double>(n - i);
    p = graphical_allocation_vector(*spec.graph, LoadState::from_loads(loads));
  } else {
    spec.validate(n);
    p = allocation_vector(spec, n);
  }
  out << to_csv_row(p) << "\n";
  auto cond = process_condition_params(spec, n);
  if (delta || epsilon) {
    ConditionParams base = cond.value_or(ConditionParams());
    cond = ConditionParams(delta.value_or(base.delta), epsilon.value_or(base.epsilon), base.c_cap);
  }
  double C = c_cap.value_or(cond ? cond->c_cap : 2.0);
  std::string c2 = std::string("C2: ") + (check_C2(p, C) ? "pass" : "fail") + " (C=" + format_fraction(C) + ")";
  if (!cond) {
    out << "C1: n/a (no condition parameters for " << spec.name() << " at n=" << n << "), " << c2 << "\n";
  } else {
    out << "C1: " << (check_C1(p, *cond) ? "pass" : "fail") << " (δ=" << format_fraction(cond->delta)
        << ", ε=" << format_fraction(cond->epsilon) << "), " << c2 << "\n";
  }
  return kExitOk;
}

int plot(const std::string& table_path, const std::string& spec_text, const std::string& output, std::ostream& out) {
  Table t = read_csv_file(table_path);
  PlotSpec spec = PlotSpec::load(spec_text);
  std::string path = resolve_output(output, spec.out, stem_of(table_path) + ".svg");
  ensure_parent(path);
  render_svg(t, spec, path);
  out << "plot -> " << path << "\n";
  return kExitOk;
}

int selftest(std::optional<std::uint64_t> seed, const std::string& filter, std::ostream& out) {
  SelftestOptions opts;
  if (seed) opts.seed = *seed;
  opts.filter = filter;
  auto results = run_selftest(opts);
  if (results.empty()) throw ValidationError("selftest: no property matches '" + filter + "'");
  std::size_t failed = 0;
  for (const auto& r : results) {
    char t[32];
    std::snprintf(t, sizeof t, "%.2fs", r.seconds);
    out << (r.pass ? "PASS " : "FAIL ") << r.module << '.' << r.name << " [" << t << "]";
    if (!r.detail.empty()) out << " " << r.detail;
    out << "\n";
    if (!r.pass) ++failed;
  }
  out << "selftest: " << results.size() - failed << "/" << results.size() << " properties passed\n";
  return failed ? kExitCheckFailed : kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Balanced allocations simulator and checker", "balloc"};
  app.require_subcommand(1);

  std::string config, output, aggregate_path, graph_file, build_spec, graph, process, table_path, plot_spec, filter;
  std::optional<std::uint64_t> seed;
  std::size_t n = 0;
  std::uint64_t graph_seed = 1;
  std::optional<double> delta, epsilon, c_cap;

  auto* sim = app.add_subcommand("simulate", "Run a sweep and write its CSV");
  sim->add_option("config", config, "Experiment config file")->required()->check(CLI::ExistingFile);
  sim->add_option("--seed", seed, "Override the config seed");
  sim->add_option("-o,--output", output, "CSV path");
  sim->add_option("--aggregate", aggregate_path, "Also write per-step medians and quantiles");

  auto* drift = app.add_subcommand("drift-check", "Certify the drift inequality and its preconditions");
  drift->add_option("config", config, "Drift-check config file")->required()->check(CLI::ExistingFile);
  drift->add_option("--seed", seed, "Override the config seed");
  drift->add_option("-o,--output", output, "Report CSV path");

  auto* cond = app.add_subcommand("conductance", "Print a graph's conductance (exact for n <= 24)");
  cond->add_option("graph-file", graph_file, "Edge list: 'n d' header then 1-indexed 'u v' lines");
  cond->add_option("--build", build_spec, "Build instead: complete, cycle, hypercube, torus, random-regular:d=4");
  cond->add_option("--n", n, "Vertex count for --build");
  cond->add_option("--graph-seed", graph_seed, "Seed for random graphs");

  auto* vec = app.add_subcommand("vector", "Print a process's allocation vector and condition checks");
  vec->add_option("process", process, "e.g. two-choice, one-plus-beta:beta=0.5, quantile:delta=0.25")->required();
  vec->add_option("n", n, "Number of bins")->required()->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24));
  vec->add_option("--graph", graph, "Graph spec for graphical");
  vec->add_option("--graph-seed", graph_seed, "Seed for random graphs");
  vec->add_option("--delta", delta, "Check C1 at this delta");
  vec->add_option("--epsilon", epsilon, "Check C1 at this epsilon");
  vec->add_option("--C", c_cap, "Check C2 at this C");

  auto* plt = app.add_subcommand("plot", "Render an SVG line plot from a CSV table");
  plt->add_option("table", table_path, "CSV table")->required()->check(CLI::ExistingFile);
  plt->add_option("plotspec", plot_spec, "Plot spec file or inline 'x=..;y=..;group=..;scale=..;out=..'")->required();
  plt->add_option("-o,--output", output, "SVG path");

  auto* st = app.add_subcommand("selftest", "Run every invariant and property check");
  st->add_option("--seed", seed, "Master seed");
  st->add_option("--filter", filter, "Only properties whose module.name contains this");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*sim) return simulate(config, seed, output, aggregate_path, out);
    if (*drift) return drift_check(config, seed, output, out);
    if (*cond) return conductance(graph_file, build_spec, n, graph_seed, out);
    if (*vec) return vector_cmd(process, n, graph, delta, epsilon, c_cap, graph_seed, out);
    if (*plt) return plot(table_path, plot_spec, output, out);
    if (*st) return selftest(seed, filter, out);
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

int cli_main(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace balloc
