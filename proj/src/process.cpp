#include "balloc/process.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "balloc/error.hpp"
#include "balloc/experiments.hpp"
#include "balloc/potentials.hpp"

namespace balloc {

ProcessSpec ProcessSpec::one_choice() {
  ProcessSpec s;
  s.kind = ProcessKind::kOneChoice;
  s.d = 1;
  return s;
}

ProcessSpec ProcessSpec::two_choice() { return d_choice(2); }

ProcessSpec ProcessSpec::d_choice(int d) {
  ProcessSpec s;
  s.kind = ProcessKind::kDChoice;
  s.d = d;
  return s;
}

ProcessSpec ProcessSpec::one_plus_beta(double beta) {
  ProcessSpec s;
  s.kind = ProcessKind::kOnePlusBeta;
  s.beta = beta;
  return s;
}

ProcessSpec ProcessSpec::quantile(double delta) {
  ProcessSpec s;
  s.kind = ProcessKind::kQuantile;
  s.delta = delta;
  return s;
}

ProcessSpec ProcessSpec::twinning(double delta) {
  ProcessSpec s;
  s.kind = ProcessKind::kTwinning;
  s.delta = delta;
  return s;
}

ProcessSpec ProcessSpec::penalty(double delta) {
  ProcessSpec s;
  s.kind = ProcessKind::kPenalty;
  s.delta = delta;
  return s;
}

ProcessSpec ProcessSpec::reset_memory() {
  ProcessSpec s;
  s.kind = ProcessKind::kResetMemory;
  return s;
}

ProcessSpec ProcessSpec::graphical(std::shared_ptr<const RegularGraph> g) {
  ProcessSpec s;
  s.kind = ProcessKind::kGraphical;
  s.graph = std::move(g);
  return s;
}

bool ProcessSpec::has_time_homogeneous_vector() const {
  return kind == ProcessKind::kOneChoice || kind == ProcessKind::kDChoice || kind == ProcessKind::kOnePlusBeta ||
         kind == ProcessKind::kQuantile;
}

void ProcessSpec::validate(std::size_t n) const {
  if (n == 0) throw ValidationError("process needs n >= 1");
  switch (kind) {
    case ProcessKind::kDChoice:
      if (d < 1) throw ValidationError("d-choice needs d >= 1");
      break;
    case ProcessKind::kOnePlusBeta:
      if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("one-plus-beta needs beta in [0,1]");
      break;
    case ProcessKind::kQuantile:
    case ProcessKind::kTwinning:
    case ProcessKind::kPenalty:
      if (!(delta > 0.0 && delta <= 1.0)) throw ValidationError(name() + " needs delta in (0,1]");
      snap_quantile(delta, n);
      break;
    case ProcessKind::kGraphical:
      if (!graph) throw ValidationError("graphical process needs a graph");
      if (graph->n() != n) throw ValidationError("graphical process: graph has a different number of vertices");
      break;
    default:
      break;
  }
  if ((kind == ProcessKind::kTwinning || kind == ProcessKind::kPenalty) && !weights.is_unit()) {
    throw ValidationError(name() + " allocates fixed integer ball counts; only unit weights are supported");
  }
  if (batch > 0) {
    if (!weights.is_unit()) {
      throw ValidationError("the batched setting is only defined for unit-weight balls");
    }
    if (!has_time_homogeneous_vector()) {
      throw ValidationError("batched runs need a process with a time-homogeneous allocation vector");
    }
  }
}

std::string ProcessSpec::name() const {
  std::ostringstream os;
  switch (kind) {
    case ProcessKind::kOneChoice:
      return "one-choice";
    case ProcessKind::kDChoice:
      if (d == 2) return "two-choice";
      os << "d-choice:d=" << d;
      return os.str();
    case ProcessKind::kOnePlusBeta:
      os << "one-plus-beta:beta=" << beta;
      return os.str();
    case ProcessKind::kQuantile:
      os << "quantile:delta=" << delta;
      return os.str();
    case ProcessKind::kTwinning:
      os << "twinning:delta=" << delta;
      return os.str();
    case ProcessKind::kPenalty:
      os << "penalty:delta=" << delta;
      return os.str();
    case ProcessKind::kResetMemory:
      return "reset-memory";
    case ProcessKind::kGraphical:
      return "graphical";
  }
  return "?";
}

ProcessSpec parse_process_spec(const std::string& text) {
  std::string head = text.substr(0, text.find(':'));
  double value = 0.0;
  std::string key;
  if (head.size() < text.size()) {
    std::string rest = text.substr(head.size() + 1);
    auto eq = rest.find('=');
    if (eq == std::string::npos) throw ValidationError("bad process spec '" + text + "'");
    key = rest.substr(0, eq);
    try {
      std::size_t used = 0;
      value = std::stod(rest.substr(eq + 1), &used);
      if (used != rest.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError("bad number in process spec '" + text + "'");
    }
  }
  auto want = [&](const char* k) {
    if (key != k) throw ValidationError("process '" + head + "' expects parameter '" + k + "'");
  };
  if (head == "one-choice" && key.empty()) return ProcessSpec::one_choice();
  if (head == "two-choice" && key.empty()) return ProcessSpec::two_choice();
  if (head == "reset-memory" && key.empty()) return ProcessSpec::reset_memory();
  if (head == "graphical" && key.empty()) return ProcessSpec::graphical(nullptr);
  if (head == "d-choice") {
    want("d");
    return ProcessSpec::d_choice(static_cast<int>(value));
  }
  if (head == "one-plus-beta") {
    want("beta");
    return ProcessSpec::one_plus_beta(value);
  }
  if (head == "quantile") {
    want("delta");
    return ProcessSpec::quantile(value);
  }
  if (head == "twinning") {
    want("delta");
    return ProcessSpec::twinning(value);
  }
  if (head == "penalty") {
    want("delta");
    return ProcessSpec::penalty(value);
  }
  throw ValidationError("unknown process '" + text +
                        "' (expected one-choice, two-choice, d-choice:d=, one-plus-beta:beta=, quantile:delta=, "
                        "twinning:delta=, penalty:delta=, reset-memory, graphical)");
}

double RoundOutcome::total_weight() const {
  double s = 0.0;
  for (const auto& a : bins_hit) s += a.weight;
  return s;
}

ForcedSampler::ForcedSampler(std::vector<std::uint64_t> samples, std::vector<bool> coins, std::uint64_t seed)
    : samples_(samples.begin(), samples.end()), coins_(coins.begin(), coins.end()), fallback_(seed, 0xf0ULL) {}

BinId ForcedSampler::bin(std::size_t n) { return static_cast<BinId>(index(n)); }

std::uint64_t ForcedSampler::index(std::uint64_t m) {
  if (samples_.empty()) return fallback_.below(m);
  std::uint64_t v = samples_.front();
  samples_.pop_front();
  if (v >= m) throw ValidationError("forced sample out of range");
  return v;
}

bool ForcedSampler::coin(double p) {
  if (coins_.empty()) return fallback_.bernoulli(p);
  bool c = coins_.front();
  coins_.pop_front();
  return c;
}

double ForcedSampler::weight(const WeightDistribution& w) { return w.is_unit() ? 1.0 : sample(w, fallback_); }

namespace {

// Rank used for quantile thresholds; under the random tie rule it is drawn
// uniformly from the bin's block of equal loads.
template <class Sampler>
std::size_t effective_rank(const LoadState& s, BinId bin, TieRule rule, Sampler& sampler) {
  std::size_t r = s.rank(bin);
  if (rule == TieRule::kHigherIndex) return r;
  const double x = s.load(bin);
  auto order = s.sorted_index();
  auto lo = std::partition_point(order.begin(), order.end(), [&](BinId e) { return s.load(e) > x; });
  auto hi = std::partition_point(lo, order.end(), [&](BinId e) { return s.load(e) == x; });
  auto width = static_cast<std::uint64_t>(hi - lo);
  return static_cast<std::size_t>(lo - order.begin()) + (width > 1 ? sampler.index(width) : 0);
}

// Picks the lesser-loaded of a and b by the given loads; ties go to the higher
// bin id or to a fair coin.
template <class Sampler>
BinId lesser(BinId a, double la, BinId b, double lb, TieRule rule, Sampler& sampler) {
  if (la < lb) return a;
  if (lb < la) return b;
  if (rule == TieRule::kRandom) return sampler.coin(0.5) ? a : b;
  return std::max(a, b);
}

template <class Sampler, class Sink>
void do_step(const ProcessSpec& spec, LoadState& s, Sampler& sampler, RoundOutcome& out, Sink&& alloc) {
  const std::size_t n = s.n();
  auto give = [&](BinId bin, double w) {
    s.apply_allocation(bin, w);
    alloc(bin, w);
  };
  auto best_of = [&](int d) {
    BinId best = sampler.bin(n);
    std::uint64_t ties = 1;
    for (int k = 1; k < d; ++k) {
      BinId c = sampler.bin(n);
      double lc = s.load(c), lb = s.load(best);
      if (lc < lb) {
        best = c;
        ties = 1;
      } else if (lc == lb) {
        if (spec.tie_rule == TieRule::kRandom) {
          ++ties;
          if (sampler.index(ties) == 0) best = c;
        } else {
          best = std::max(best, c);
        }
      }
    }
    out.samples_used += static_cast<std::uint64_t>(d);
    return best;
  };
  switch (spec.kind) {
    case ProcessKind::kOneChoice: {
      BinId i = sampler.bin(n);
      out.samples_used += 1;
      give(i, sampler.weight(spec.weights));
      out.steps_consumed = 1;
      return;
    }
    case ProcessKind::kDChoice: {
      BinId i = best_of(spec.d);
      give(i, sampler.weight(spec.weights));
      out.steps_consumed = 1;
      return;
    }
    case ProcessKind::kOnePlusBeta: {
      BinId i = sampler.coin(spec.beta) ? best_of(2) : best_of(1);
      give(i, sampler.weight(spec.weights));
      out.steps_consumed = 1;
      return;
    }
    case ProcessKind::kQuantile: {
      const std::size_t k0 = snap_quantile(spec.delta, n);
      BinId i1 = sampler.bin(n);
      out.samples_used += 1;
      BinId target = i1;
      if (effective_rank(s, i1, spec.tie_rule, sampler) + 1 <= k0) {
        target = sampler.bin(n);
        out.samples_used += 1;
      }
      give(target, sampler.weight(spec.weights));
      out.steps_consumed = 1;
      return;
    }
    case ProcessKind::kTwinning: {
      const std::size_t k0 = snap_quantile(spec.delta, n);
      BinId i = sampler.bin(n);
      out.samples_used += 1;
      std::uint64_t balls = effective_rank(s, i, spec.tie_rule, sampler) + 1 <= k0 ? 1 : 2;
      give(i, static_cast<double>(balls));
      out.steps_consumed = balls;
      return;
    }
    case ProcessKind::kPenalty: {
      const std::size_t k0 = snap_quantile(spec.delta, n);
      BinId i1 = sampler.bin(n);
      out.samples_used += 1;
      if (effective_rank(s, i1, spec.tie_rule, sampler) + 1 > k0) {
        give(i1, 1.0);
        out.steps_consumed = 1;
      } else {
        BinId i2 = sampler.bin(n);
        out.samples_used += 1;
        give(i2, 2.0);
        out.steps_consumed = 2;
      }
      return;
    }
    case ProcessKind::kResetMemory: {
      BinId i1 = sampler.bin(n);
      const double start1 = s.load(i1);
      give(i1, sampler.weight(spec.weights));
      BinId i2 = sampler.bin(n);
      const double start2 = i2 == i1 ? start1 : s.load(i2);
      out.samples_used += 2;
      give(lesser(i1, start1, i2, start2, spec.tie_rule, sampler), sampler.weight(spec.weights));
      out.steps_consumed = 2;
      return;
    }
    case ProcessKind::kGraphical: {
      const auto& edges = spec.graph->edges();
      auto [u, v] = edges[sampler.index(edges.size())];
      out.samples_used += 2;
      give(lesser(u, s.load(u), v, s.load(v), spec.tie_rule, sampler), sampler.weight(spec.weights));
      out.steps_consumed = 1;
      return;
    }
  }
}

template <class Sampler>
RoundOutcome step_impl(const ProcessSpec& spec, LoadState& state, Sampler& sampler) {
  RoundOutcome out;
  do_step(spec, state, sampler, out, [&](BinId b, double w) { out.bins_hit.push_back({b, w}); });
  state.set_step(state.step() + out.steps_consumed);
  return out;
}

}  // namespace

RoundOutcome step(const ProcessSpec& spec, LoadState& state, CounterRng& rng) {
  if (spec.batch > 0) return batched_round(allocation_vector(spec, state.n()), state, spec.batch, rng, spec.tie_rule);
  RngSampler sampler(rng);
  return step_impl(spec, state, sampler);
}

RoundOutcome step(const ProcessSpec& spec, LoadState& state, ForcedSampler& sampler) {
  return step_impl(spec, state, sampler);
}

ProbabilityVector allocation_vector(const ProcessSpec& spec, std::size_t n) {
  if (n == 0) throw ValidationError("allocation_vector: n must be positive");
  const double nn = static_cast<double>(n);
  std::vector<double> p(n);
  switch (spec.kind) {
    case ProcessKind::kOneChoice:
      std::fill(p.begin(), p.end(), 1.0 / nn);
      break;
    case ProcessKind::kDChoice: {
      if (spec.d < 1) throw ValidationError("d-choice needs d >= 1");
      for (std::size_t i = 1; i <= n; ++i) {
        double a = std::pow(static_cast<double>(i) / nn, spec.d);
        double b = std::pow(static_cast<double>(i - 1) / nn, spec.d);
        p[i - 1] = a - b;
      }
      break;
    }
    case ProcessKind::kOnePlusBeta: {
      if (!(spec.beta >= 0.0 && spec.beta <= 1.0)) throw ValidationError("one-plus-beta needs beta in [0,1]");
      for (std::size_t i = 1; i <= n; ++i) {
        p[i - 1] = (1.0 - spec.beta) / nn + spec.beta * (2.0 * static_cast<double>(i) - 1.0) / (nn * nn);
      }
      break;
    }
    case ProcessKind::kQuantile: {
      std::size_t k0 = snap_quantile(spec.delta, n);
      for (std::size_t i = 1; i <= n; ++i) p[i - 1] = i <= k0 ? spec.delta / nn : (1.0 + spec.delta) / nn;
      break;
    }
    default:
      throw UnsupportedError("allocation_vector: " + spec.name() +
                             " has no time-homogeneous probability allocation vector");
  }
  return ProbabilityVector(std::move(p));
}

AliasTable::AliasTable(std::span<const double> probs) : prob_(probs.size()), alias_(probs.size()) {
  const std::size_t n = probs.size();
  if (n == 0) throw ValidationError("AliasTable: empty");
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = probs[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    std::uint32_t s = small.back(), l = large.back();
    small.pop_back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (auto i : large) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
  for (auto i : small) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
}

std::size_t AliasTable::sample(CounterRng& rng) const {
  std::size_t i = rng.below(prob_.size());
  return rng.uniform() < prob_[i] ? i : alias_[i];
}

RoundOutcome batched_round(const AliasTable& table, LoadState& state, std::size_t b, CounterRng& rng, TieRule tie) {
  if (table.size() != state.n()) throw ValidationError("batched_round: size mismatch");
  if (b == 0) throw ValidationError("batched_round: b must be positive");
  if (state.mode() == LoadMode::kFloat) {
    for (double x : state.loads())
      if (x != std::floor(x)) throw ValidationError("the batched setting is only defined for unit-weight balls");
  }
  const std::size_t n = state.n();
  std::vector<double> add(n, 0.0);
  if (tie == TieRule::kRandom) {
    // A sampled rank lands on a uniform member of its block of equal loads.
    std::vector<std::uint32_t> start(n), width(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i + 1;
      while (j < n && state.load(state.bin_at_rank(j)) == state.load(state.bin_at_rank(i))) ++j;
      for (std::size_t k = i; k < j; ++k) {
        start[k] = static_cast<std::uint32_t>(i);
        width[k] = static_cast<std::uint32_t>(j - i);
      }
      i = j;
    }
    for (std::size_t j = 0; j < b; ++j) {
      std::size_t r = table.sample(rng);
      add[state.bin_at_rank(start[r] + (width[r] > 1 ? rng.below(width[r]) : 0))] += 1.0;
    }
  } else {
    for (std::size_t j = 0; j < b; ++j) add[state.bin_at_rank(table.sample(rng))] += 1.0;
  }
  RoundOutcome out;
  for (std::size_t i = 0; i < add.size(); ++i)
    if (add[i] > 0.0) out.bins_hit.push_back({static_cast<BinId>(i), add[i]});
  state.apply_round(add);
  out.steps_consumed = b;
  out.samples_used = b;
  state.set_step(state.step() + b);
  return out;
}

RoundOutcome batched_round(const ProbabilityVector& p, LoadState& state, std::size_t b, CounterRng& rng, TieRule tie) {
  AliasTable table(p.probs());
  return batched_round(table, state, b, rng, tie);
}

RunRecord make_record(const LoadState& state, const ProbeConfig& probes, std::uint64_t seed) {
  RunRecord r;
  r.step = state.step();
  r.gap = gap(state);
  r.max_abs_y = max_abs_normalized(state);
  r.seed = seed;
  if (probes.gamma > 0.0) {
    r.has_gamma = true;
    r.gamma_value = probes.gamma;
    r.gamma_total = potential(state, probes.gamma, PotentialMode::kAuto, false).gamma_total;
  }
  for (double z : probes.thresholds) {
    auto c = count_bins_outside(state, z);
    r.bins_ge.push_back(c.above);
    r.bins_le.push_back(c.below);
  }
  return r;
}

void run(const ProcessSpec& spec, std::size_t n, std::uint64_t m, std::uint64_t seed, const ProbeConfig& probes,
         const RecordSink& sink) {
  spec.validate(n);
  std::vector<std::uint64_t> at = probes.at;
  std::sort(at.begin(), at.end());
  std::size_t at_pos = 0;
  std::uint64_t next_every = probes.every;
  auto next_probe = [&]() -> std::uint64_t {
    std::uint64_t best = UINT64_MAX;
    if (at_pos < at.size()) best = at[at_pos];
    if (probes.every > 0) best = std::min(best, next_every);
    return best;
  };
  LoadState state(n);
  CounterRng rng(seed, 0);
  RngSampler sampler(rng);
  std::uint64_t last_emitted = UINT64_MAX;
  auto emit = [&] {
    if (last_emitted == state.step()) return;
    last_emitted = state.step();
    sink(make_record(state, probes, seed), state);
  };
  auto advance_probes = [&] {
    bool due = false;
    while (next_probe() <= state.step()) {
      due = true;
      if (at_pos < at.size() && at[at_pos] <= state.step()) {
        ++at_pos;
      } else {
        next_every += probes.every;
      }
    }
    if (due) emit();
  };
  advance_probes();

  std::unique_ptr<AliasTable> table;
  if (spec.batch > 0) table = std::make_unique<AliasTable>(allocation_vector(spec, n).probs());
  RoundOutcome scratch;
  while (state.step() < m) {
    if (table) {
      batched_round(*table, state, spec.batch, rng, spec.tie_rule);
    } else {
      scratch.steps_consumed = 0;
      do_step(spec, state, sampler, scratch, [](BinId, double) {});
      state.set_step(state.step() + scratch.steps_consumed);
    }
    if (next_probe() <= state.step()) advance_probes();
  }
  if (probes.final) emit();
}

std::vector<RunRecord> run(const ProcessSpec& spec, std::size_t n, std::uint64_t m, std::uint64_t seed,
                           const ProbeConfig& probes) {
  std::vector<RunRecord> out;
  run(spec, n, m, seed, probes, [&](const RunRecord& r, const LoadState&) { out.push_back(r); });
  return out;
}

LoadState run_to_state(const ProcessSpec& spec, std::size_t n, std::uint64_t m, std::uint64_t seed) {
  spec.validate(n);
  LoadState state(n);
  CounterRng rng(seed, 0);
  if (spec.batch > 0) {
    AliasTable table(allocation_vector(spec, n).probs());
    while (state.step() < m) batched_round(table, state, spec.batch, rng, spec.tie_rule);
    return state;
  }
  RngSampler sampler(rng);
  RoundOutcome scratch;
  while (state.step() < m) {
    scratch.steps_consumed = 0;
    do_step(spec, state, sampler, scratch, [](BinId, double) {});
    state.set_step(state.step() + scratch.steps_consumed);
  }
  return state;
}

}  // namespace balloc
