#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "balloc/graphs.hpp"
#include "balloc/potentials.hpp"
#include "balloc/probability_vector.hpp"
#include "balloc/rng.hpp"

namespace balloc {

struct PropertyResult {
  std::string module;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct SelftestOptions {
  std::uint64_t seed = 20240601;
  std::string filter;  // substring of "module.name"; empty runs everything
};

std::vector<std::string> selftest_names();
std::vector<PropertyResult> run_selftest(const SelftestOptions& options = {});

// A vector majorized by the worst-case vector at cond, hence satisfying C₁.
// Built from r (optionally mixed with uniform) by random mass transfers toward lighter ranks.
ProbabilityVector random_c1_vector(const ConditionParams& cond, std::size_t n, CounterRng& rng);

// Non-decreasing vector with p at rank δn capped at (1−ε)/n (D₀ and D₁ by construction).
ProbabilityVector random_d0_d1_vector(const ConditionParams& cond, std::size_t n, CounterRng& rng);

struct KeyLemmaInstance {
  std::size_t n = 0;
  ConditionParams cond;
  double gamma = 0.0;
  KeyLemmaCase target = KeyLemmaCase::kNoBadBins;
  bool near_boundary = false;
  std::vector<double> y;  // sorted, zero-sum
  ProbabilityVector p;
};

// Instance `index` of the certification campaign: n ∈ [4,256], δ ∈ {1/4,1/3,1/2,3/4},
// ε ∈ [0.05,0.9], γ log-uniform in [1e-3,1], cycling through every proof case.
KeyLemmaInstance key_lemma_instance(std::uint64_t seed, std::uint64_t index);

struct KeyLemmaCampaign {
  std::size_t instances = 0;
  std::size_t failures = 0;
  std::size_t failures_theorem = 0;
  std::size_t misclassified = 0;
  std::map<KeyLemmaCase, std::size_t> per_case;
  double min_relative_slack = 0.0;
  std::string first_failure;
};

KeyLemmaCampaign key_lemma_campaign(std::size_t instances, std::uint64_t seed);

// Violations of prefix ≤ (1−φ)k/n for k ≤ n/2, suffix over t = n−k+1 bins ≥ (t + φ·min(t, n−t))/n for
// k > n/2 (this is (1+φ)t/n when n is even), and max ≤ 2/n.
std::size_t expansion_violations(const ProbabilityVector& p, double phi);

// Every graph the builders produce with n ≤ max_n (complete, cycle, hypercube, torus, random 3/4-regular).
std::vector<RegularGraph> small_graph_catalogue(std::size_t max_n, std::uint64_t seed);

}  // namespace balloc
