#pragma once

#include <boost/rational.hpp>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "balloc/graphs.hpp"
#include "balloc/load_state.hpp"
#include "balloc/probability_vector.hpp"
#include "balloc/rng.hpp"
#include "balloc/weights.hpp"

namespace balloc {

using Rational = boost::rational<std::int64_t>;

enum class ProcessKind { kOneChoice, kDChoice, kOnePlusBeta, kQuantile, kTwinning, kPenalty, kResetMemory, kGraphical };

enum class TieRule { kHigherIndex, kRandom };

struct ProcessSpec {
  ProcessKind kind = ProcessKind::kDChoice;
  int d = 2;
  double beta = 1.0;
  double delta = 0.5;
  WeightDistribution weights = WeightDistribution::unit();
  TieRule tie_rule = TieRule::kHigherIndex;
  std::shared_ptr<const RegularGraph> graph;
  std::size_t batch = 0;  // 0: sequential; otherwise b balls per round from the round-start vector

  static ProcessSpec one_choice();
  static ProcessSpec two_choice();
  static ProcessSpec d_choice(int d);
  static ProcessSpec one_plus_beta(double beta);
  static ProcessSpec quantile(double delta);
  static ProcessSpec twinning(double delta);
  static ProcessSpec penalty(double delta);
  static ProcessSpec reset_memory();
  static ProcessSpec graphical(std::shared_ptr<const RegularGraph> g);

  // Throws ValidationError when the spec cannot run on n bins.
  void validate(std::size_t n) const;
  bool has_time_homogeneous_vector() const;
  std::string name() const;
};

// "two-choice", "one-choice", "d-choice:d=3", "one-plus-beta:beta=0.5",
// "quantile:delta=0.5", "twinning:delta=0.5", "penalty:delta=0.5",
// "reset-memory", "graphical".
ProcessSpec parse_process_spec(const std::string& text);

struct Allocation {
  BinId bin;
  double weight;
};

struct RoundOutcome {
  std::vector<Allocation> bins_hit;
  std::uint64_t steps_consumed = 0;  // balls allocated
  std::uint64_t samples_used = 0;
  double total_weight() const;
};

// Draws bins from a counter-based generator.
class RngSampler {
 public:
  explicit RngSampler(CounterRng& rng) : rng_(&rng) {}
  BinId bin(std::size_t n) { return static_cast<BinId>(rng_->below(n)); }
  std::uint64_t index(std::uint64_t m) { return rng_->below(m); }
  bool coin(double p) { return rng_->bernoulli(p); }
  double weight(const WeightDistribution& w) { return w.is_unit() ? 1.0 : sample(w, *rng_); }
  CounterRng& rng() { return *rng_; }

 private:
  CounterRng* rng_;
};

// Replays injected bin (or edge index) samples and coin flips, then falls back to a generator.
class ForcedSampler {
 public:
  ForcedSampler(std::vector<std::uint64_t> samples, std::vector<bool> coins = {}, std::uint64_t seed = 0);
  BinId bin(std::size_t n);
  std::uint64_t index(std::uint64_t m);
  bool coin(double p);
  double weight(const WeightDistribution& w);
  CounterRng& rng() { return fallback_; }
  std::size_t remaining() const { return samples_.size(); }

 private:
  std::deque<std::uint64_t> samples_;
  std::deque<bool> coins_;
  CounterRng fallback_;
};

RoundOutcome step(const ProcessSpec& spec, LoadState& state, CounterRng& rng);
RoundOutcome step(const ProcessSpec& spec, LoadState& state, ForcedSampler& sampler);

ProbabilityVector allocation_vector(const ProcessSpec& spec, std::size_t n);

// Exact per-rank allocation probabilities by enumerating every equally likely
// sample tuple. Twinning/Penalty give expected ball counts over expected total.
ProbabilityVector empirical_allocation_vector(const ProcessSpec& spec, const LoadState& state);
std::vector<Rational> empirical_allocation_vector_exact(const ProcessSpec& spec, const LoadState& state,
                                                        Rational beta = Rational(1));
// Expected balls per rank in one step (ResetMemory: per round).
std::vector<Rational> expected_ball_counts_exact(const ProcessSpec& spec, const LoadState& state);
// E[balls to rank i] − E[total balls]/n.
std::vector<Rational> expected_normalized_change_exact(const ProcessSpec& spec, const LoadState& state);
Rational expected_balls_per_sample_exact(const ProcessSpec& spec, std::size_t n);
// Distribution of the second ball of a ResetMemory round over round-start ranks.
std::vector<Rational> reset_memory_second_ball_exact(const LoadState& state);

class AliasTable {
 public:
  explicit AliasTable(std::span<const double> probs);
  std::size_t sample(CounterRng& rng) const;
  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

// Under TieRule::kRandom a sampled rank is spread uniformly over its block of equal loads.
RoundOutcome batched_round(const ProbabilityVector& p, LoadState& state, std::size_t b, CounterRng& rng,
                           TieRule tie = TieRule::kHigherIndex);
RoundOutcome batched_round(const AliasTable& table, LoadState& state, std::size_t b, CounterRng& rng,
                           TieRule tie = TieRule::kHigherIndex);

struct ProbeConfig {
  std::vector<std::uint64_t> at;  // explicit ball counts
  std::uint64_t every = 0;        // 0: none
  bool final = true;
  double gamma = 0.0;  // 0: Γ not recorded
  std::vector<double> thresholds;
};

struct RunRecord {
  std::uint64_t step = 0;
  double gap = 0.0;
  double max_abs_y = 0.0;
  double gamma_value = 0.0;
  double gamma_total = 0.0;
  bool has_gamma = false;
  std::vector<std::int64_t> bins_ge;
  std::vector<std::int64_t> bins_le;
  std::uint64_t seed = 0;
  std::uint64_t samples = 0;
};

using RecordSink = std::function<void(const RunRecord&, const LoadState&)>;

// Runs until at least m balls are allocated, emitting probe rows.
void run(const ProcessSpec& spec, std::size_t n, std::uint64_t m, std::uint64_t seed, const ProbeConfig& probes,
         const RecordSink& sink);
std::vector<RunRecord> run(const ProcessSpec& spec, std::size_t n, std::uint64_t m, std::uint64_t seed,
                           const ProbeConfig& probes = {});
// Final state only.
LoadState run_to_state(const ProcessSpec& spec, std::size_t n, std::uint64_t m, std::uint64_t seed);

RunRecord make_record(const LoadState& state, const ProbeConfig& probes, std::uint64_t seed);

}  // namespace balloc
