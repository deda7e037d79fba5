#include "balloc/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "balloc/error.hpp"
#include "balloc/process.hpp"

namespace balloc {

namespace {

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in (0,1]");
}

double log_sum_exp(std::span<const double> logs) {
  double mx = -INFINITY;
  for (double v : logs) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : logs) s += std::exp(v - mx);
  return mx + std::log(s);
}

}  // namespace

PotentialReport potential_of(std::span<const double> y, double gamma, PotentialMode mode, bool per_bin) {
  check_gamma(gamma);
  PotentialReport r;
  r.gamma = gamma;
  double amax = 0.0;
  for (double v : y) amax = std::max(amax, gamma * std::abs(v));
  r.log_space = mode == PotentialMode::kLogSpace || (mode == PotentialMode::kAuto && amax > kLogSpaceThreshold);
  if (per_bin) {
    r.phi_per_bin.resize(y.size());
    r.psi_per_bin.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      r.phi_per_bin[i] = std::exp(gamma * y[i]);
      r.psi_per_bin[i] = std::exp(-gamma * y[i]);
    }
  }
  if (!r.log_space) {
    for (double v : y) {
      r.phi += std::exp(gamma * v);
      r.psi += std::exp(-gamma * v);
    }
    r.gamma_total = r.phi + r.psi;
    r.log_phi = std::log(r.phi);
    r.log_psi = std::log(r.psi);
    r.log_gamma_total = std::log(r.gamma_total);
    return r;
  }
  std::vector<double> logs(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) logs[i] = gamma * y[i];
  r.log_phi = log_sum_exp(logs);
  for (double& v : logs) v = -v;
  r.log_psi = log_sum_exp(logs);
  double hi = std::max(r.log_phi, r.log_psi), lo = std::min(r.log_phi, r.log_psi);
  r.log_gamma_total = hi + std::log1p(std::exp(lo - hi));
  r.phi = std::exp(r.log_phi);
  r.psi = std::exp(r.log_psi);
  r.gamma_total = std::exp(r.log_gamma_total);
  return r;
}

PotentialReport potential(const LoadState& state, double gamma, PotentialMode mode, bool per_bin) {
  return potential_of(state.normalized_loads(), gamma, mode, per_bin);
}

DriftTerms expected_drift_sorted(std::span<const double> y, std::span<const double> p, double gamma) {
  if (y.size() != p.size()) throw ValidationError("expected_drift: size mismatch");
  check_gamma(gamma);
  const double inv_n = 1.0 / static_cast<double>(y.size());
  DriftTerms d;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double diff = p[i] - inv_n;
    d.dphi += std::exp(gamma * y[i]) * diff * gamma;
    d.dpsi -= std::exp(-gamma * y[i]) * diff * gamma;
  }
  d.dgamma = d.dphi + d.dpsi;
  return d;
}

DriftTerms expected_drift(const LoadState& state, const ProbabilityVector& p, double gamma) {
  if (p.n() != state.n()) throw ValidationError("expected_drift: size mismatch");
  auto y = state.sorted_normalized();
  return expected_drift_sorted(y, p.probs(), gamma);
}

double key_lemma_constant(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("key_lemma_constant: delta must be in (0,1)");
  const double l = std::log(8.0 / 3.0);
  const double ratio = delta / (1.0 - delta);
  double t3 = std::exp((1.0 - delta) / (2.0 * delta) * l) * ratio;
  double t4 = delta * std::exp(delta / (2.0 * (1.0 - delta)) * l);
  return 4.0 * std::max({1.0, ratio, t3, t4});
}

double key_lemma_constant(const ConditionParams& cond) { return key_lemma_constant(cond.delta); }

std::string to_string(KeyLemmaCase c) {
  switch (c) {
    case KeyLemmaCase::kNoBadBins:
      return "no-bad-bins";
    case KeyLemmaCase::kA1:
      return "A.1";
    case KeyLemmaCase::kA21:
      return "A.2.1";
    case KeyLemmaCase::kA22:
      return "A.2.2";
    case KeyLemmaCase::kB1:
      return "B.1";
    case KeyLemmaCase::kB21:
      return "B.2.1";
    case KeyLemmaCase::kB22:
      return "B.2.2";
  }
  return "?";
}

CertResult certify_key_lemma_sorted(std::span<const double> y, const ProbabilityVector& p,
                                    const ConditionParams& cond, double gamma) {
  check_gamma(gamma);
  const std::size_t n = y.size();
  if (p.n() != n) throw ValidationError("certify_key_lemma: size mismatch");
  if (!check_C1(p, cond)) {
    throw PreconditionError("certify_key_lemma: p does not satisfy C1 at delta=" + std::to_string(cond.delta) +
                            ", epsilon=" + std::to_string(cond.epsilon));
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (y[i] < y[i + 1]) throw ValidationError("certify_key_lemma: load vector is not sorted non-increasingly");
  }
  CertResult r;
  r.c = key_lemma_constant(cond);
  r.which = classify_key_lemma_case(y, cond.delta, gamma);
  double amax = 0.0;
  for (double v : y) amax = std::max(amax, gamma * std::abs(v));
  r.log_scale = amax > kLogSpaceThreshold ? amax : 0.0;

  // Everything below is multiplied by e^{-log_scale}.
  const double inv_n = 1.0 / static_cast<double>(n);
  double drift = 0.0, total = 0.0, magnitude = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double phi = std::exp(gamma * y[i] - r.log_scale);
    double psi = std::exp(-gamma * y[i] - r.log_scale);
    double diff = p[i] - inv_n;
    drift += (phi - psi) * diff * gamma;
    total += phi + psi;
    magnitude += (phi + psi) * std::abs(diff) * gamma;
  }
  const double eps = cond.epsilon, delta = cond.delta;
  const double additive = r.c * gamma * eps * std::exp(-r.log_scale);
  r.drift = drift;
  r.gamma_total = total;
  r.bound = -total * gamma * eps * delta / (4.0 * static_cast<double>(n)) + additive;
  r.bound_theorem = -total * gamma * eps * delta / (8.0 * static_cast<double>(n)) + additive;
  r.slack = r.bound - r.drift;
  r.slack_theorem = r.bound_theorem - r.drift;
  // Rounding allowance proportional to the summed term magnitudes.
  const double tol = 1e-12 * (magnitude + total * gamma + additive);
  r.pass = r.slack >= -tol;
  r.pass_theorem = r.slack_theorem >= -tol;
  return r;
}

CertResult certify_key_lemma(const LoadState& state, const ProbabilityVector& p, const ConditionParams& cond,
                             double gamma) {
  if (p.n() != state.n()) throw ValidationError("certify_key_lemma: size mismatch");
  auto y = state.sorted_normalized();
  return certify_key_lemma_sorted(y, p, cond, gamma);
}

double gamma_for_weighted(const ConditionParams& cond, double C, double S) {
  if (!(C >= 1.0)) throw ValidationError("gamma_for_weighted: C must be >= 1");
  if (!(S >= 1.0)) throw ValidationError("gamma_for_weighted: S must be >= 1");
  return cond.epsilon * cond.delta / (16.0 * C * S);
}

DriftStepCheck drift_step_bound_check(const LoadState& before, const ProbabilityVector& p, const ProcessSpec& process,
                                      double gamma, double K, double R, long trials, std::uint64_t rng_seed) {
  check_gamma(gamma);
  if (p.n() != before.n()) throw ValidationError("drift_step_bound_check: size mismatch");
  if (trials < 2) throw ValidationError("drift_step_bound_check: need at least 2 trials");
  const std::size_t n = before.n();
  const double nn = static_cast<double>(n);
  process.validate(n);

  auto y = before.normalized_loads();
  std::vector<double> phi(n), psi(n);
  double phi_total = 0.0, psi_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    phi[i] = std::exp(gamma * y[i]);
    psi[i] = std::exp(-gamma * y[i]);
    phi_total += phi[i];
    psi_total += psi[i];
  }
  double phi_bound = 0.0, psi_bound = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    BinId b = before.bin_at_rank(r);
    double diff = p[r] - 1.0 / nn;
    phi_bound += phi[b] * (diff * R * gamma + K * R * gamma * gamma / nn);
    psi_bound += psi[b] * (-diff * R * gamma + K * R * gamma * gamma / nn);
  }

  // ΔΦ = e^{−γΔW/n}(Φ + Σ_hit Φ_i(e^{γΔx_i} − 1)) − Φ, likewise for Ψ.
  double mean_phi = 0.0, m2_phi = 0.0, mean_psi = 0.0, m2_psi = 0.0;
  std::vector<double> added(n, 0.0);
  std::vector<BinId> touched;
  for (long t = 0; t < trials; ++t) {
    LoadState s = before;
    CounterRng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(t)));
    RoundOutcome out;
    if (process.batch > 0) {
      out = batched_round(allocation_vector(process, n), s, process.batch, rng);
    } else {
      out = step(process, s, rng);
    }
    touched.clear();
    double dw = 0.0;
    for (const auto& a : out.bins_hit) {
      if (added[a.bin] == 0.0) touched.push_back(a.bin);
      added[a.bin] += a.weight;
      dw += a.weight;
    }
    double sphi = phi_total, spsi = psi_total;
    for (BinId b : touched) {
      sphi += phi[b] * std::expm1(gamma * added[b]);
      spsi += psi[b] * std::expm1(-gamma * added[b]);
      added[b] = 0.0;
    }
    double dphi = std::exp(-gamma * dw / nn) * sphi - phi_total;
    double dpsi = std::exp(gamma * dw / nn) * spsi - psi_total;
    double k = static_cast<double>(t + 1);
    double e1 = dphi - mean_phi;
    mean_phi += e1 / k;
    m2_phi += e1 * (dphi - mean_phi);
    double e2 = dpsi - mean_psi;
    mean_psi += e2 / k;
    m2_psi += e2 * (dpsi - mean_psi);
  }
  auto finish = [&](const char* kind, double mean, double m2, double bound) {
    CheckResult c;
    c.kind = kind;
    c.estimated = true;
    c.value = mean;
    c.bound = bound;
    c.std_error = std::sqrt(m2 / static_cast<double>(trials - 1) / static_cast<double>(trials));
    c.slack = bound + 3.0 * c.std_error - mean;
    c.pass = c.slack >= 0.0;
    return c;
  };
  DriftStepCheck out;
  out.phi = finish("drift_phi", mean_phi, m2_phi, phi_bound);
  out.psi = finish("drift_psi", mean_psi, m2_psi, psi_bound);
  out.pass = out.phi.pass && out.psi.pass;
  return out;
}

CheckResult gamma_expectation_bound(std::span<const double> totals, std::size_t n, const ConditionParams& cond) {
  if (totals.size() < kMinExpectationRuns) {
    throw ValidationError("gamma_expectation_bound: need at least 30 runs, got " + std::to_string(totals.size()));
  }
  CheckResult c;
  c.kind = "gamma_expectation";
  c.estimated = true;
  double mean = std::accumulate(totals.begin(), totals.end(), 0.0) / static_cast<double>(totals.size());
  double var = 0.0;
  for (double g : totals) var += (g - mean) * (g - mean);
  var /= static_cast<double>(totals.size() - 1);
  c.value = mean;
  c.std_error = std::sqrt(var / static_cast<double>(totals.size()));
  c.bound = 8.0 * key_lemma_constant(cond) / cond.delta * static_cast<double>(n);
  c.slack = c.bound - c.value;
  c.pass = c.value <= c.bound;
  return c;
}

CheckResult gamma_expectation_bound(std::span<const PotentialReport> trace, const ConditionParams& cond) {
  if (trace.empty()) throw ValidationError("gamma_expectation_bound: empty trace");
  std::vector<double> totals;
  std::size_t n = trace.front().phi_per_bin.size();
  for (const auto& r : trace) {
    if (r.phi_per_bin.size() != n) throw ValidationError("gamma_expectation_bound: reports need per-bin values of one n");
    totals.push_back(r.gamma_total);
  }
  if (n == 0) throw ValidationError("gamma_expectation_bound: reports need per-bin values");
  return gamma_expectation_bound(totals, n, cond);
}

}  // namespace balloc
