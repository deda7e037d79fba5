#include <algorithm>
#include <cmath>

#include "balloc/error.hpp"
#include "balloc/potentials.hpp"
#include "balloc/rng.hpp"

namespace balloc {

namespace {

std::size_t half_index(std::size_t n, double delta) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 + delta) / 2.0 + 1e-9));
}

KeyLemmaCase classify_overloaded(std::span<const double> y, double delta, double gamma) {
  const std::size_t n = y.size();
  std::size_t half = half_index(n, delta);
  if (half >= n || y[half] < 0.0) return KeyLemmaCase::kA1;
  return y[half] <= case_a2_threshold(delta, gamma) ? KeyLemmaCase::kA21 : KeyLemmaCase::kA22;
}

std::vector<double> mirror(std::span<const double> y) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = -y[y.size() - 1 - i];
  return out;
}

double log_uniform(CounterRng& rng, double lo, double hi) {
  return std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
}

// Case A (and the no-bad-bins case) with `overloaded` leading positive entries.
// Entries at 0-based ranks >= half form B₂ and lie in (0, z2], rank `half` equal to z2.
std::vector<double> build_overloaded(std::size_t n, std::size_t overloaded, std::size_t half, double z2,
                                     double level, CounterRng& rng) {
  std::vector<double> y(n);
  for (std::size_t i = 0; i < overloaded; ++i) {
    double u = rng.uniform();
    if (i >= half) {
      y[i] = z2 * (0.01 + 0.99 * u);
    } else {
      y[i] = z2 + level * (u * u * u + 1e-9);
    }
  }
  if (overloaded > half) y[half] = z2;
  std::sort(y.begin(), y.begin() + static_cast<long>(overloaded), std::greater<>());
  double mass = 0.0;
  for (std::size_t i = 0; i < overloaded; ++i) mass += y[i];
  std::vector<double> w(n - overloaded);
  double wsum = 0.0;
  for (double& x : w) wsum += (x = 0.1 + rng.uniform());
  std::sort(w.begin(), w.end());
  for (std::size_t j = 0; j < w.size(); ++j) y[overloaded + j] = -mass * w[j] / wsum;
  return y;
}

}  // namespace

double case_a2_threshold(double delta, double gamma) {
  return (1.0 / gamma) * ((1.0 - delta) / (2.0 * delta)) * std::log(8.0 / 3.0);
}

KeyLemmaCase classify_key_lemma_case(std::span<const double> y, double delta, double gamma) {
  const std::size_t n = y.size();
  const std::size_t k0 = snap_quantile(delta, n);
  if (k0 >= 1 && y[k0 - 1] < 0.0) {
    auto m = mirror(y);
    switch (classify_overloaded(m, 1.0 - delta, gamma)) {
      case KeyLemmaCase::kA1:
        return KeyLemmaCase::kB1;
      case KeyLemmaCase::kA21:
        return KeyLemmaCase::kB21;
      default:
        return KeyLemmaCase::kB22;
    }
  }
  if (k0 < n && y[k0] >= 0.0) return classify_overloaded(y, delta, gamma);
  return KeyLemmaCase::kNoBadBins;
}

std::vector<double> make_case_vector(KeyLemmaCase target, std::size_t n, double delta, double gamma,
                                     std::uint64_t seed, bool near_boundary) {
  if (target == KeyLemmaCase::kB1 || target == KeyLemmaCase::kB21 || target == KeyLemmaCase::kB22) {
    KeyLemmaCase a = target == KeyLemmaCase::kB1    ? KeyLemmaCase::kA1
                     : target == KeyLemmaCase::kB21 ? KeyLemmaCase::kA21
                                                    : KeyLemmaCase::kA22;
    return mirror(make_case_vector(a, n, 1.0 - delta, gamma, seed, near_boundary));
  }
  CounterRng rng(seed, 0x6b6579ULL);
  const std::size_t k0 = snap_quantile(delta, n);
  const std::size_t half = half_index(n, delta);
  const double T = case_a2_threshold(delta, gamma);
  // Overall height in units of 1/γ; capped so γ·y stays well inside double range.
  const double level = log_uniform(rng, 1e-3, 40.0) / gamma;
  auto pick = [&](std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng.below(hi - lo + 1)); };

  switch (target) {
    case KeyLemmaCase::kNoBadBins: {
      if (k0 == 0 || k0 >= n) throw UnsupportedError("no-bad-bins case needs 1 <= delta*n < n");
      return build_overloaded(n, k0, n, 0.0, level, rng);
    }
    case KeyLemmaCase::kA1: {
      std::size_t lo = k0 + 1, hi = std::min(half, n - 1);
      if (lo > hi) throw UnsupportedError("case A.1 infeasible for this (n, delta)");
      return build_overloaded(n, pick(lo, hi), n, 0.0, level, rng);
    }
    case KeyLemmaCase::kA21:
    case KeyLemmaCase::kA22: {
      std::size_t lo = std::max(half + 1, k0 + 1), hi = n - 1;
      if (lo > hi) throw UnsupportedError("case A.2 infeasible for this (n, delta)");
      std::size_t overloaded = pick(lo, hi);
      double z2;
      if (target == KeyLemmaCase::kA21) {
        z2 = near_boundary ? T * (1.0 - 0.01 * rng.uniform()) : T * (0.01 + 0.99 * rng.uniform());
      } else {
        z2 = near_boundary ? T * (1.0 + 0.01 * (rng.uniform() + 1e-6)) : T * (1.0 + 3.0 * rng.uniform() + 1e-6);
      }
      return build_overloaded(n, overloaded, half, z2, level, rng);
    }
    default:
      break;
  }
  throw UnsupportedError("unknown case");
}

}  // namespace balloc
