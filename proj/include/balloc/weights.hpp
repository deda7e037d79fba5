#pragma once

#include <string>

#include "balloc/rng.hpp"

namespace balloc {

enum class WeightKind { kUnit, kExponential, kScaledGeometric, kScaledPoisson };

// Mean-one ball weight distribution with a finite MGF at zeta.
// ScaledGeometric: W = p·G with G ~ Geometric(p) on {1,2,...}.
// ScaledPoisson:   W = P/λ with P ~ Poisson(λ).
class WeightDistribution {
 public:
  WeightDistribution() = default;

  static WeightDistribution unit();
  static WeightDistribution exponential();
  static WeightDistribution scaled_geometric(double p);
  static WeightDistribution scaled_poisson(double lambda);
  static WeightDistribution parse(const std::string& spec);

  WeightKind kind() const { return kind_; }
  double param() const { return param_; }
  double zeta() const { return zeta_; }
  bool is_unit() const { return kind_ == WeightKind::kUnit; }
  double mean() const;
  // Supremum of the MGF's convergence region (infinity when entire).
  double mgf_radius() const;
  std::string to_string() const;

  bool operator==(const WeightDistribution&) const = default;

 private:
  WeightDistribution(WeightKind kind, double param);
  WeightKind kind_ = WeightKind::kUnit;
  double param_ = 0.0;
  double zeta_ = 1.0;
};

double sample(const WeightDistribution& dist, CounterRng& rng);

// Closed-form E[e^{zW}]; throws DivergenceError outside the convergence region.
double mgf(const WeightDistribution& dist, double z);
// Quadrature over the density (exponential) or truncated series (discrete kinds).
double mgf_numeric(const WeightDistribution& dist, double z);

// max{((8/ζ)log(8/ζ))⁴, M(ζ) + M(2ζ)}
double s_constant(const WeightDistribution& dist);
// S used in drift constants: 1 for unit balls (e^x ≤ 1 + x + x² on |x| ≤ 1), s_constant otherwise.
double drift_s_constant(const WeightDistribution& dist);

struct CheckResult {
  std::string kind;
  double value = 0.0;
  double bound = 0.0;
  double slack = 0.0;  // bound - value (minus margin when estimated)
  double std_error = 0.0;
  bool pass = false;
  bool estimated = false;
};

// E[e^{γℓW}] ≤ 1 + ℓγ + Sℓ²γ² with the closed-form left side when trials == 0,
// otherwise a Monte-Carlo estimate with a 3 standard-error margin.
CheckResult moment_inequality_check(const WeightDistribution& dist, double gamma, double ell, long trials,
                                    CounterRng& rng);

}  // namespace balloc
