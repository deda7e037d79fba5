#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "balloc/load_state.hpp"
#include "balloc/probability_vector.hpp"
#include "balloc/weights.hpp"

namespace balloc {

struct ProcessSpec;

enum class PotentialMode { kAuto, kDirect, kLogSpace };

// Φ_i = e^{γỹ_i}, Ψ_i = e^{−γỹ_i} in bin order; Γ = Φ + Ψ. In log-space mode the
// aggregates are also carried as logs since the plain values may overflow.
struct PotentialReport {
  double gamma = 0.0;
  std::vector<double> phi_per_bin;
  std::vector<double> psi_per_bin;
  double phi = 0.0;
  double psi = 0.0;
  double gamma_total = 0.0;
  double log_phi = 0.0;
  double log_psi = 0.0;
  double log_gamma_total = 0.0;
  bool log_space = false;
};

inline constexpr double kLogSpaceThreshold = 500.0;

PotentialReport potential(const LoadState& state, double gamma, PotentialMode mode = PotentialMode::kAuto,
                          bool per_bin = true);
PotentialReport potential_of(std::span<const double> normalized, double gamma,
                             PotentialMode mode = PotentialMode::kAuto, bool per_bin = true);

struct DriftTerms {
  double dphi = 0.0;
  double dpsi = 0.0;
  double dgamma = 0.0;
};

// ΔΦ̄ = Σ Φ_i (p_i − 1/n) γ and ΔΨ̄ = Σ Ψ_i (1/n − p_i) γ over ranks.
DriftTerms expected_drift(const LoadState& state, const ProbabilityVector& p, double gamma);
DriftTerms expected_drift_sorted(std::span<const double> sorted_y, std::span<const double> p, double gamma);

double key_lemma_constant(double delta);
double key_lemma_constant(const ConditionParams& cond);

enum class KeyLemmaCase { kNoBadBins, kA1, kA21, kA22, kB1, kB21, kB22 };
std::string to_string(KeyLemmaCase c);

struct CertResult {
  KeyLemmaCase which = KeyLemmaCase::kNoBadBins;
  double drift = 0.0;        // ΔΓ̄, multiplied by e^{-log_scale}
  double gamma_total = 0.0;  // Γ, multiplied by e^{-log_scale}
  double bound = 0.0;        // −Γγεδ/(4n) + cγε
  double bound_theorem = 0.0;  // −Γγεδ/(8n) + cγε
  double slack = 0.0;
  double slack_theorem = 0.0;
  double log_scale = 0.0;
  double c = 0.0;
  bool pass = false;
  bool pass_theorem = false;
};

// Throws PreconditionError when p does not satisfy C₁ at cond.
CertResult certify_key_lemma(const LoadState& state, const ProbabilityVector& p, const ConditionParams& cond,
                             double gamma);
// sorted_y must be non-increasing with zero sum (a normalized load vector by rank).
CertResult certify_key_lemma_sorted(std::span<const double> sorted_y, const ProbabilityVector& p,
                                    const ConditionParams& cond, double gamma);

KeyLemmaCase classify_key_lemma_case(std::span<const double> sorted_y, double delta, double gamma);
// Threshold separating A.2.1 from A.2.2: (1/γ)·((1−δ)/(2δ))·log(8/3).
double case_a2_threshold(double delta, double gamma);

// Random zero-sum sorted vector engineered to land in `target`. With
// near_boundary set, z₂ is placed within ±1% of the A.2/B.2 threshold.
std::vector<double> make_case_vector(KeyLemmaCase target, std::size_t n, double delta, double gamma,
                                     std::uint64_t seed, bool near_boundary = false);

// εδ/(16CS)
double gamma_for_weighted(const ConditionParams& cond, double C, double S);

struct DriftStepCheck {
  CheckResult phi;
  CheckResult psi;
  bool pass = false;
};

// Monte-Carlo estimate of E[ΔΦ], E[ΔΨ] over one round from state_before, against
// Σ Φ_i((p_i − 1/n)Rγ + KRγ²/n) and the matching Ψ bound, 3 standard-error margin.
DriftStepCheck drift_step_bound_check(const LoadState& state_before, const ProbabilityVector& p,
                                      const ProcessSpec& process, double gamma, double K, double R, long trials,
                                      std::uint64_t rng_seed);

inline constexpr std::size_t kMinExpectationRuns = 30;

// mean Γ over runs ≤ (8c(δ)/δ)·n
CheckResult gamma_expectation_bound(std::span<const double> gamma_totals, std::size_t n, const ConditionParams& cond);
CheckResult gamma_expectation_bound(std::span<const PotentialReport> trace, const ConditionParams& cond);

}  // namespace balloc
