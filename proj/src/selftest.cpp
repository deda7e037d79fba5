#include "balloc/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "balloc/error.hpp"
#include "balloc/experiments.hpp"
#include "balloc/load_state.hpp"
#include "balloc/process.hpp"
#include "balloc/svg.hpp"
#include "balloc/table.hpp"
#include "balloc/weights.hpp"

namespace balloc {

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Property = std::function<Outcome(std::uint64_t seed)>;

struct Entry {
  const char* module;
  const char* name;
  Property run;
};

std::string str(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

Outcome fail(std::string detail) { return {false, std::move(detail)}; }
Outcome ok(std::string detail = {}) { return {true, std::move(detail)}; }

double log_uniform(CounterRng& rng, double lo, double hi) {
  return std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
}

std::vector<double> distinct_loads(std::size_t n, CounterRng& rng) {
  std::vector<double> loads(n);
  std::iota(loads.begin(), loads.end(), 0.0);
  std::shuffle(loads.begin(), loads.end(), rng);
  return loads;
}

std::vector<double> random_sorted_simplex(std::size_t n, CounterRng& rng) {
  std::vector<double> x(n);
  double s = 0.0;
  for (double& v : x) s += (v = -std::log(rng.uniform_open0()));
  for (double& v : x) v /= s;
  std::sort(x.begin(), x.end(), std::greater<>());
  double tail = 1.0 - std::accumulate(x.begin() + 1, x.end(), 0.0);
  x[0] = tail;
  return x;
}

ProbabilityVector mix_uniform(std::span<const double> x, double lambda) {
  const double u = 1.0 / static_cast<double>(x.size());
  std::vector<double> p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p[i] = lambda * x[i] + (1.0 - lambda) * u;
  return ProbabilityVector(std::move(p));
}

// ---------------------------------------------------------------- core

Outcome core_load_conservation(std::uint64_t seed) {
  CounterRng rng(seed, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 1 + rng.below(64);
    LoadState exact(n, LoadMode::kExactInteger);
    std::int64_t expected = 0;
    for (int k = 0; k < 2000; ++k) {
      auto w = static_cast<std::int64_t>(1 + rng.below(5));
      exact.apply_allocation(static_cast<BinId>(rng.below(n)), static_cast<double>(w));
      expected += w;
    }
    if (exact.exact_total() != expected || exact.total_weight() != static_cast<double>(expected)) {
      return fail("exact mode total " + std::to_string(exact.exact_total()) + " != " + std::to_string(expected));
    }
    LoadState flt(n);
    auto w = WeightDistribution::exponential();
    std::vector<double> added;
    for (int k = 0; k < 2000; ++k) {
      double x = sample(w, rng);
      added.push_back(x);
      flt.apply_allocation(static_cast<BinId>(rng.below(n)), x);
    }
    std::sort(added.begin(), added.end());
    double sum = std::accumulate(added.begin(), added.end(), 0.0);
    if (std::abs(flt.total_weight() - sum) > 1e-9 * sum) {
      return fail("float mode total " + str(flt.total_weight()) + " vs " + str(sum));
    }
  }
  return ok();
}

Outcome core_gap_bounds(std::uint64_t seed) {
  CounterRng rng(seed, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 1 + rng.below(100);
    LoadState s(n);
    auto w = WeightDistribution::exponential();
    std::size_t m = rng.below(5 * n + 1);
    for (std::size_t k = 0; k < m; ++k) s.apply_allocation(static_cast<BinId>(rng.below(n)), sample(w, rng));
    double g = gap(s), a = max_abs_normalized(s);
    if (!(g >= 0.0) || g > a + 1e-12 * (1.0 + a)) return fail("gap " + str(g) + " max_abs " + str(a));
  }
  return ok();
}

Outcome core_sorted_order(std::uint64_t seed) {
  CounterRng rng(seed, 3);
  for (int trial = 0; trial < 4; ++trial) {
    std::size_t n = 1 + rng.below(64);
    LoadState s(n);
    for (int k = 0; k < 10000; ++k) {
      double w = (k % 3 == 0) ? 0.5 + rng.uniform() : 1.0;
      s.apply_allocation(static_cast<BinId>(rng.below(n)), w);
      auto sorted = s.sorted_index();
      auto oracle = full_sort_order(s.loads());
      if (!std::equal(sorted.begin(), sorted.end(), oracle.begin(), oracle.end())) {
        return fail("incremental order differs from full sort at n=" + std::to_string(n) + " step " + std::to_string(k));
      }
      for (std::size_t r = 0; r < n; ++r) {
        if (s.rank(sorted[r]) != r) return fail("rank_of is not the inverse permutation");
        if (r + 1 < n && s.load(sorted[r]) < s.load(sorted[r + 1])) return fail("sorted loads increase");
      }
    }
  }
  return ok("4 runs x 10^4 allocations");
}

// ---------------------------------------------------------------- vectors

Outcome vectors_average_ties(std::uint64_t seed) {
  CounterRng rng(seed, 4);
  for (int trial = 0; trial < 2000; ++trial) {
    std::size_t n = 2 + rng.below(40);
    std::vector<double> loads(n);
    for (double& x : loads) x = static_cast<double>(rng.below(4));
    LoadState s = LoadState::from_loads(loads);
    std::vector<double> p(n);
    double sum = 0.0;
    for (double& x : p) sum += (x = rng.uniform());
    for (double& x : p) x /= sum;
    p[0] = 1.0 - std::accumulate(p.begin() + 1, p.end(), 0.0);
    if (p[0] < 0) continue;
    ProbabilityVector pv(p);
    if (average_ties(pv, s).max_entry() > pv.max_entry() + 1e-15) return fail("average_ties raised the maximum");
  }
  return ok();
}

Outcome vectors_majorization_order(std::uint64_t seed) {
  CounterRng rng(seed, 5);
  std::size_t chains = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    std::size_t n = 2 + rng.below(30);
    auto x = random_sorted_simplex(n, rng);
    double l[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
    std::sort(l, l + 3, std::greater<>());
    // Independent draws alongside a chain p ⪰ q ⪰ r on the same ray.
    ProbabilityVector p = mix_uniform(x, l[0]), q = mix_uniform(x, l[1]), r = mix_uniform(x, l[2]);
    ProbabilityVector a(random_sorted_simplex(n, rng)), b(random_sorted_simplex(n, rng));
    if (!majorizes(p, p) || !majorizes(a, a)) return fail("not reflexive");
    if (!(majorizes(p, q) && majorizes(q, r) && majorizes(p, r))) return fail("chain on a ray not ordered");
    ++chains;
    const ProbabilityVector* v[] = {&p, &q, &r, &a, &b};
    for (auto* s : v)
      for (auto* t : v)
        for (auto* u : v) {
          if (majorizes(*s, *t) && majorizes(*t, *u) && !majorizes(*s, *u)) return fail("not transitive");
        }
    for (auto* s : v)
      for (auto* t : v)
        if (majorizes(*s, *t) && majorizes(*t, *s)) {
          for (std::size_t i = 0; i < n; ++i)
            if (std::abs((*s)[i] - (*t)[i]) > 1e-10) return fail("not antisymmetric");
        }
  }
  return ok(std::to_string(chains) + " triples");
}

Outcome vectors_worst_case_majorizes(std::uint64_t seed) {
  CounterRng rng(seed, 6);
  std::size_t tested = 0;
  const double deltas[] = {0.25, 1.0 / 3.0, 0.5, 0.75};
  for (int trial = 0; trial < 20000; ++trial) {
    double delta = deltas[rng.below(4)];
    std::size_t unit = delta == 1.0 / 3.0 ? 3 : 4;
    std::size_t n = unit * (1 + rng.below(16));
    ConditionParams cond(delta, 0.05 + 0.85 * rng.uniform());
    ProbabilityVector p;
    switch (trial % 3) {
      case 0:
        p = random_c1_vector(cond, n, rng);
        break;
      case 1:
        p = random_d0_d1_vector(cond, n, rng);
        break;
      default: {
        auto x = random_sorted_simplex(n, rng);
        std::reverse(x.begin(), x.end());
        p = mix_uniform(x, 0.3 * rng.uniform());
      }
    }
    if (!check_C1(p, cond)) continue;
    ++tested;
    if (!majorizes(worst_case_vector(cond, n), p)) return fail("r does not majorize a C1 vector at n=" + std::to_string(n));
  }
  return ok(std::to_string(tested) + " C1 vectors");
}

Outcome vectors_worst_case_equality(std::uint64_t seed) {
  CounterRng rng(seed, 7);
  for (int trial = 0; trial < 2000; ++trial) {
    std::size_t n = 4 * (1 + rng.below(64));
    double delta = (1.0 + static_cast<double>(rng.below(3))) / 4.0;
    ConditionParams cond(delta, 0.05 + 0.85 * rng.uniform());
    auto r = worst_case_vector(cond, n);
    if (!check_C1(r, cond)) return fail("r fails C1");
    auto pre = r.prefix_sums();
    for (std::size_t k = 1; k <= cond.quantile_index(n); ++k) {
      double bound = (1.0 - cond.epsilon) * static_cast<double>(k) / static_cast<double>(n);
      if (std::abs(pre[k - 1] - bound) > 1e-12) return fail("prefix " + std::to_string(k) + " not tight");
    }
  }
  return ok();
}

Outcome vectors_d0_d1_implies_c1(std::uint64_t seed) {
  CounterRng rng(seed, 8);
  for (int trial = 0; trial < 100000; ++trial) {
    std::size_t n = 4 * (1 + rng.below(16));
    double delta = (1.0 + static_cast<double>(rng.below(3))) / 4.0;
    ConditionParams cond(delta, 0.05 + 0.9 * rng.uniform());
    auto p = random_d0_d1_vector(cond, n, rng);
    if (!check_D0(p) || !check_D1(p, cond)) return fail("generator produced a vector outside D0/D1");
    if (!d0_d1_implies_c1_witness(p, cond)) return fail("counterexample at n=" + std::to_string(n));
  }
  return ok("10^5 trials");
}

// ---------------------------------------------------------------- potentials

Outcome potentials_key_lemma(std::uint64_t seed) {
  auto c = key_lemma_campaign(10000, seed);
  std::ostringstream d;
  d << c.instances << " instances";
  for (auto& [k, v] : c.per_case) d << ", " << to_string(k) << '=' << v;
  if (c.failures || c.misclassified) {
    d << "; failures=" << c.failures << " misclassified=" << c.misclassified << "; " << c.first_failure;
    return fail(d.str());
  }
  return ok(d.str());
}

Outcome potentials_majorization_monotone(std::uint64_t seed) {
  CounterRng rng(seed, 9);
  for (int trial = 0; trial < 5000; ++trial) {
    std::size_t n = 2 + rng.below(40);
    auto x = random_sorted_simplex(n, rng);
    double a = rng.uniform(), b = rng.uniform();
    auto p = mix_uniform(x, std::max(a, b)), q = mix_uniform(x, std::min(a, b));
    std::vector<double> c(n);
    for (double& v : c) v = 10.0 * rng.uniform();
    std::sort(c.begin(), c.end(), std::greater<>());
    double sp = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) sp += p[i] * c[i], sq += q[i] * c[i];
    if (sp < sq - 1e-12 * (1 + std::abs(sq))) return fail("sum p c < sum q c");
  }
  for (int trial = 0; trial < 5000; ++trial) {
    std::size_t n = 4 * (1 + rng.below(32));
    ConditionParams cond(0.25 * static_cast<double>(1 + rng.below(3)), 0.05 + 0.85 * rng.uniform());
    auto p = random_c1_vector(cond, n, rng);
    auto r = worst_case_vector(cond, n);
    double gamma = log_uniform(rng, 1e-3, 1.0);
    std::vector<double> y(n);
    for (double& v : y) v = (rng.uniform() - 0.5) * 20.0 / gamma;
    double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    for (double& v : y) v -= mean;
    std::sort(y.begin(), y.end(), std::greater<>());
    double dr = expected_drift_sorted(y, r.probs(), gamma).dphi;
    double dp = expected_drift_sorted(y, p.probs(), gamma).dphi;
    if (dr < dp - 1e-9 * (std::abs(dr) + std::abs(dp) + 1e-300)) return fail("drift(r) < drift(p) for Phi");
  }
  return ok();
}

Outcome potentials_decreasing_function(std::uint64_t) {
  for (double k : {0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
    double prev = INFINITY;
    for (int i = 1; i <= 2000; ++i) {
      double z = k * (0.02 + 0.98 * i / 2000.0);
      double f = z * std::exp(k / z);
      if (!(f < prev)) return fail("f not decreasing at k=" + str(k) + ", z=" + str(z));
      prev = f;
    }
  }
  return ok();
}

Outcome potentials_drift_linear(std::uint64_t seed) {
  CounterRng rng(seed, 10);
  for (int trial = 0; trial < 3000; ++trial) {
    std::size_t n = 2 + rng.below(60);
    double u = 1.0 / static_cast<double>(n);
    auto x = random_sorted_simplex(n, rng);
    std::vector<double> p(n), p2(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = u + 0.25 * (x[i] - u);
      p2[i] = u + 0.5 * (x[i] - u);
    }
    double gamma = log_uniform(rng, 1e-3, 1.0);
    std::vector<double> y(n);
    for (double& v : y) v = (rng.uniform() - 0.5) * 10.0 / gamma;
    double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    for (double& v : y) v -= mean;
    std::sort(y.begin(), y.end(), std::greater<>());
    auto d1 = expected_drift_sorted(y, p, gamma), d2 = expected_drift_sorted(y, p2, gamma);
    double scale = 0.0, direct = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double t = (std::exp(gamma * y[i]) - std::exp(-gamma * y[i])) * (p[i] - u) * gamma;
      direct += t;
      scale += std::abs(t) + (std::exp(gamma * y[i]) + std::exp(-gamma * y[i])) * 1e-16 * gamma;
    }
    if (std::abs(d2.dgamma - 2.0 * d1.dgamma) > 1e-9 * scale * 2.0) return fail("doubling p - u did not double the drift");
    if (std::abs(d1.dgamma - direct) > 1e-9 * scale) return fail("drift differs from the direct sum");
    auto d3 = expected_drift_sorted(y, p, gamma);
    if (d3.dgamma != d1.dgamma) return fail("drift not deterministic");
  }
  return ok();
}

Outcome potentials_log_space(std::uint64_t seed) {
  CounterRng rng(seed, 11);
  for (int trial = 0; trial < 2000; ++trial) {
    std::size_t n = 2 + rng.below(100);
    double gamma = log_uniform(rng, 1e-3, 1.0);
    double height = log_uniform(rng, 1e-2, 600.0) / gamma;
    std::vector<double> y(n);
    for (double& v : y) v = (rng.uniform() - 0.5) * height;
    double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    for (double& v : y) v -= mean;
    auto direct = potential_of(y, gamma, PotentialMode::kDirect, false);
    if (!std::isfinite(direct.gamma_total)) continue;
    auto logs = potential_of(y, gamma, PotentialMode::kLogSpace, false);
    double back = std::exp(logs.log_gamma_total);
    if (std::abs(back - direct.gamma_total) > 1e-9 * direct.gamma_total) {
      return fail("log-space " + str(back) + " vs direct " + str(direct.gamma_total));
    }
  }
  return ok();
}

// ---------------------------------------------------------------- processes

Outcome processes_two_choice_exact(std::uint64_t seed) {
  CounterRng rng(seed, 12);
  for (std::size_t n = 2; n <= 64; ++n) {
    auto state = LoadState::from_loads(distinct_loads(n, rng));
    auto p = empirical_allocation_vector_exact(ProcessSpec::two_choice(), state);
    const auto nn = static_cast<std::int64_t>(n);
    for (std::size_t i = 1; i <= n; ++i) {
      if (p[i - 1] != Rational(2 * static_cast<std::int64_t>(i) - 1, nn * nn)) {
        return fail("n=" + std::to_string(n) + " rank " + std::to_string(i));
      }
    }
  }
  return ok("n = 2..64");
}

Outcome processes_one_plus_beta_exact(std::uint64_t seed) {
  CounterRng rng(seed, 13);
  const Rational betas[] = {Rational(1, 10), Rational(1, 3), Rational(1, 2), Rational(3, 4), Rational(1)};
  for (const auto& beta : betas) {
    double b = boost::rational_cast<double>(beta);
    for (std::size_t n = 2; n <= 32; ++n) {
      auto state = LoadState::from_loads(distinct_loads(n, rng));
      auto p = empirical_allocation_vector_exact(ProcessSpec::one_plus_beta(b), state, beta);
      const auto nn = static_cast<std::int64_t>(n);
      for (std::size_t i = 1; i <= n; ++i) {
        Rational want = (Rational(1) - beta) / nn + beta * Rational(2 * static_cast<std::int64_t>(i) - 1, nn * nn);
        if (p[i - 1] != want) return fail("beta=" + str(b) + " n=" + std::to_string(n));
      }
    }
  }
  return ok();
}

Outcome processes_quantile_exact(std::uint64_t seed) {
  CounterRng rng(seed, 14);
  for (std::size_t n = 2; n <= 32; ++n) {
    for (std::size_t k0 = 1; k0 < n; ++k0) {
      auto state = LoadState::from_loads(distinct_loads(n, rng));
      double delta = static_cast<double>(k0) / static_cast<double>(n);
      auto p = empirical_allocation_vector_exact(ProcessSpec::quantile(delta), state);
      const auto nn = static_cast<std::int64_t>(n);
      Rational d(static_cast<std::int64_t>(k0), nn);
      for (std::size_t i = 1; i <= n; ++i) {
        Rational want = i <= k0 ? d / nn : (Rational(1) + d) / nn;
        if (p[i - 1] != want) return fail("n=" + std::to_string(n) + " k0=" + std::to_string(k0));
      }
    }
  }
  return ok();
}

Outcome quantile_identity(ProcessSpec (*make)(double), std::uint64_t seed, std::uint64_t stream) {
  CounterRng rng(seed, stream);
  for (std::size_t n = 2; n <= 32; ++n) {
    for (std::size_t k0 = 1; k0 < n; ++k0) {
      auto state = LoadState::from_loads(distinct_loads(n, rng));
      auto spec = make(static_cast<double>(k0) / static_cast<double>(n));
      auto change = expected_normalized_change_exact(spec, state);
      const auto nn = static_cast<std::int64_t>(n);
      Rational d(static_cast<std::int64_t>(k0), nn);
      for (std::size_t i = 1; i <= n; ++i) {
        Rational want = i <= k0 ? d / nn - Rational(1, nn) : d / nn;
        if (change[i - 1] != want) {
          return fail(spec.name() + " n=" + std::to_string(n) + " rank " + std::to_string(i));
        }
      }
    }
  }
  return ok("n = 2..32, every delta = k/n");
}

Outcome processes_twinning_identity(std::uint64_t seed) { return quantile_identity(&ProcessSpec::twinning, seed, 15); }
Outcome processes_penalty_identity(std::uint64_t seed) { return quantile_identity(&ProcessSpec::penalty, seed, 16); }

Outcome processes_sample_efficiency(std::uint64_t) {
  for (std::size_t n = 2; n <= 32; ++n)
    for (std::size_t k0 = 1; k0 < n; ++k0) {
      double delta = static_cast<double>(k0) / static_cast<double>(n);
      Rational d(static_cast<std::int64_t>(k0), static_cast<std::int64_t>(n));
      if (expected_balls_per_sample_exact(ProcessSpec::twinning(delta), n) != Rational(2) - d) {
        return fail("twinning balls per sample != 2 - delta at n=" + std::to_string(n));
      }
    }
  return ok("2 - delta balls per sample (enumerated)");
}

Outcome processes_majorization_sanity(std::uint64_t seed) {
  const std::size_t n = 64, m = 20 * n, seeds = 200;
  std::vector<double> two, one;
  for (std::size_t s = 0; s < seeds; ++s) {
    std::uint64_t sd = derive_seed(seed, s);
    two.push_back(gap(run_to_state(ProcessSpec::two_choice(), n, m, sd)));
    one.push_back(gap(run_to_state(ProcessSpec::one_choice(), n, m, sd)));
  }
  for (double q = 0.05; q < 1.0; q += 0.05) {
    if (quantile(two, q) > quantile(one, q)) return fail("two-choice gap quantile exceeds one-choice at q=" + str(q));
  }
  return ok("median two-choice " + str(median(two)) + " vs one-choice " + str(median(one)));
}

// ---------------------------------------------------------------- graphs

Outcome graphs_expansion(std::uint64_t seed) {
  CounterRng rng(seed, 17);
  std::size_t checked = 0;
  for (const auto& g : small_graph_catalogue(24, seed)) {
    double phi = conductance_exact(g);
    bool even = g.n() % 2 == 0;
    ConditionParams cond(0.5, std::min(phi, 1.0 - 1e-12));
    for (int t = 0; t < 100; ++t) {
      auto state = LoadState::from_loads(distinct_loads(g.n(), rng));
      auto p = graphical_allocation_vector(g, state);
      if (expansion_violations(p, phi) != 0) return fail(g.label() + ": expansion bound violated");
      if (!check_C2(p, 2.0)) return fail(g.label() + ": C2 violated");
      if (even && phi < 1.0 && !check_C1(p, cond)) return fail(g.label() + ": C1 violated");
      ++checked;
    }
  }
  return ok(std::to_string(checked) + " load orders");
}

Outcome graphs_complete_formula(std::uint64_t) {
  for (std::size_t n = 2; n <= 18; ++n) {
    double best = INFINITY;
    for (std::size_t s = 1; s <= n / 2; ++s) {
      best = std::min(best, static_cast<double>(s * (n - s)) / static_cast<double>(s * (n - 1)));
    }
    double phi = conductance_exact(build(GraphKind::kComplete, n));
    if (std::abs(phi - best) > 1e-15) return fail("K_" + std::to_string(n) + ": " + str(phi) + " vs " + str(best));
  }
  return ok("n = 2..18");
}

Outcome graphs_bounds_sandwich(std::uint64_t seed) {
  std::size_t count = 0;
  for (const auto& g : small_graph_catalogue(24, seed)) {
    double phi = conductance_exact(g);
    auto b = conductance_bounds(g);
    if (b.lower > phi + 1e-9 || b.upper < phi - 1e-9) {
      return fail(g.label() + ": [" + str(b.lower) + ", " + str(b.upper) + "] misses " + str(phi));
    }
    ++count;
  }
  return ok(std::to_string(count) + " graphs");
}

// ---------------------------------------------------------------- weights

std::vector<WeightDistribution> builtin_weights() {
  return {WeightDistribution::unit(), WeightDistribution::exponential(), WeightDistribution::scaled_geometric(0.5),
          WeightDistribution::scaled_poisson(2.0)};
}

Outcome weights_moment_grid(std::uint64_t seed) {
  CounterRng rng(seed, 18);
  int checks = 0;
  for (const auto& w : builtin_weights())
    for (double f : {0.5, 0.25, 0.125})
      for (double ell : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        for (long trials : {0L, 20000L}) {
          auto r = moment_inequality_check(w, w.zeta() * f, ell, trials, rng);
          if (!r.pass) return fail(w.to_string() + " gamma=zeta*" + str(f) + " ell=" + str(ell));
          ++checks;
        }
      }
  return ok(std::to_string(checks) + " grid checks");
}

Outcome weights_s_constant(std::uint64_t) {
  for (const auto& w : builtin_weights()) {
    double s = s_constant(w);
    if (!(s >= 1.0 && s >= 1.0 / w.zeta())) return fail(w.to_string() + ": S=" + str(s));
  }
  return ok();
}

Outcome weights_mean_one(std::uint64_t seed) {
  CounterRng rng(seed, 19);
  for (const auto& w : builtin_weights()) {
    if (std::abs(w.mean() - 1.0) > 1e-15) return fail(w.to_string() + " closed-form mean " + str(w.mean()));
    const int k = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < k; ++i) {
      double x = sample(w, rng);
      s += x;
      s2 += x * x;
    }
    double mean = s / k, se = std::sqrt(std::max(0.0, s2 / k - mean * mean) / k);
    if (std::abs(mean - 1.0) > 5.0 * se + 1e-12) return fail(w.to_string() + " sample mean " + str(mean));
  }
  return ok();
}

// ---------------------------------------------------------------- experiments

ExperimentConfig small_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.process = "one-plus-beta";
  c.n = {32, 64};
  c.beta = {0.5, 1.0};
  c.m = "20n";
  c.repetitions = 4;
  c.seed = seed;
  c.probes = "every:5n";
  c.gamma = "corollary";
  c.thresholds = {1, 2};
  return c;
}

Outcome experiments_aggregation(std::uint64_t seed) {
  Table t = sweep(small_config(seed));
  std::ostringstream a, b;
  write_csv(aggregate(t), a);
  write_csv(aggregate(t), b);
  if (a.str() != b.str()) return fail("aggregate not repeatable");
  std::ostringstream raw;
  write_csv(t, raw);
  std::istringstream in(raw.str());
  Table back = read_csv(in);
  if (!tables_equal(aggregate(back), aggregate(t), 1e-8)) return fail("aggregate of the re-read table differs");
  return ok(std::to_string(t.rows.size()) + " raw rows");
}

Outcome experiments_corollary_gamma(std::uint64_t seed) {
  auto cfg = small_config(seed);
  cfg.process = "quantile";
  cfg.beta.clear();
  cfg.delta = {0.25, 0.5};
  cfg.weights = "exp1";
  for (const auto& p : expand(cfg)) {
    double want = p.cond->epsilon * p.cond->delta / (16.0 * p.c_cap * p.s_const);
    if (p.gamma != want) return fail("gamma " + str(p.gamma) + " vs " + str(want));
  }
  return ok();
}

Outcome experiments_count_monotone(std::uint64_t seed) {
  CounterRng rng(seed, 20);
  for (int t = 0; t < 200; ++t) {
    std::size_t n = 2 + rng.below(200);
    auto s = run_to_state(ProcessSpec::one_choice(), n, n * (1 + rng.below(20)), rng.next());
    OutsideCounts prev{INT64_MAX, INT64_MAX};
    for (double z = 0.25; z < 30; z += 0.25) {
      auto c = count_bins_outside(s, z);
      if (c.above > prev.above || c.below > prev.below) return fail("count increased with z");
      prev = c;
    }
  }
  return ok();
}

// ---------------------------------------------------------------- io

Outcome io_csv_round_trip(std::uint64_t seed) {
  CounterRng rng(seed, 21);
  for (int t = 0; t < 200; ++t) {
    Table tab;
    std::size_t cols = 1 + rng.below(6);
    for (std::size_t c = 0; c < cols; ++c) tab.columns.push_back("c" + std::to_string(c));
    std::size_t rows = rng.below(20);
    const char* words[] = {"plain", "with,comma", "with \"quote\"", "line\nbreak", "x"};
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<Cell> row;
      for (std::size_t c = 0; c < cols; ++c) {
        switch (rng.below(4)) {
          case 0: row.emplace_back(); break;
          case 1: row.emplace_back(static_cast<std::int64_t>(rng.below(1000000)) - 500000); break;
          case 2: row.emplace_back((rng.uniform() - 0.5) * std::pow(10.0, static_cast<double>(rng.below(20)) - 10)); break;
          default: row.emplace_back(std::string(words[rng.below(5)]));
        }
      }
      tab.rows.push_back(std::move(row));
    }
    std::ostringstream out;
    write_csv(tab, out);
    std::istringstream in(out.str());
    Table back = read_csv(in);
    if (!tables_equal(tab, back, 1e-8)) return fail("round trip changed the table");
    std::ostringstream again;
    write_csv(back, again);
    if (again.str() != out.str()) return fail("second write differs");
  }
  Table empty;
  empty.columns = {"a", "b"};
  std::ostringstream e;
  write_csv(empty, e);
  if (e.str() != "a,b\n") return fail("empty table is not header-only");
  return ok();
}

Outcome io_determinism(std::uint64_t seed) {
  auto cfg = small_config(seed);
  std::ostringstream a, b;
  write_csv(sweep(cfg), a);
  write_csv(sweep(cfg), b);
  if (a.str() != b.str()) return fail("identical configs produced different CSV bytes");
  std::istringstream in(a.str());
  Table t = read_csv(in);
  PlotSpec spec = PlotSpec::parse("x=step;y=gap;group=beta;scale=log-log;out=x.svg");
  if (render_svg(t, spec) != render_svg(t, spec)) return fail("SVG output differs between renders");
  return ok();
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      {"core", "load_conservation", core_load_conservation},
      {"core", "gap_bounds", core_gap_bounds},
      {"core", "sorted_order_matches_full_sort", core_sorted_order},
      {"vectors", "average_ties_keeps_max", vectors_average_ties},
      {"vectors", "majorization_partial_order", vectors_majorization_order},
      {"vectors", "worst_case_majorizes_c1", vectors_worst_case_majorizes},
      {"vectors", "worst_case_prefix_tight", vectors_worst_case_equality},
      {"vectors", "d0_d1_implies_c1", vectors_d0_d1_implies_c1},
      {"potentials", "key_lemma_certification", potentials_key_lemma},
      {"potentials", "majorization_monotonicity", potentials_majorization_monotone},
      {"potentials", "decreasing_function", potentials_decreasing_function},
      {"potentials", "drift_linear_in_p", potentials_drift_linear},
      {"potentials", "log_space_agrees", potentials_log_space},
      {"processes", "two_choice_exact", processes_two_choice_exact},
      {"processes", "one_plus_beta_exact", processes_one_plus_beta_exact},
      {"processes", "quantile_exact", processes_quantile_exact},
      {"processes", "twinning_identity", processes_twinning_identity},
      {"processes", "penalty_identity", processes_penalty_identity},
      {"processes", "twinning_sample_efficiency", processes_sample_efficiency},
      {"processes", "two_choice_dominates_one_choice", processes_majorization_sanity},
      {"graphs", "expansion_c1_c2", graphs_expansion},
      {"graphs", "complete_graph_formula", graphs_complete_formula},
      {"graphs", "bounds_contain_exact", graphs_bounds_sandwich},
      {"weights", "moment_inequality_grid", weights_moment_grid},
      {"weights", "s_constant_bounds", weights_s_constant},
      {"weights", "mean_one", weights_mean_one},
      {"experiments", "aggregation_idempotent", experiments_aggregation},
      {"experiments", "corollary_gamma_exact", experiments_corollary_gamma},
      {"experiments", "count_monotone_in_z", experiments_count_monotone},
      {"io", "csv_round_trip", io_csv_round_trip},
      {"io", "deterministic_outputs", io_determinism},
  };
  return entries;
}

}  // namespace

std::vector<std::string> selftest_names() {
  std::vector<std::string> out;
  for (const auto& e : registry()) out.push_back(std::string(e.module) + "." + e.name);
  return out;
}

std::vector<PropertyResult> run_selftest(const SelftestOptions& options) {
  std::vector<PropertyResult> results;
  for (const auto& e : registry()) {
    std::string full = std::string(e.module) + "." + e.name;
    if (!options.filter.empty() && full.find(options.filter) == std::string::npos) continue;
    PropertyResult r;
    r.module = e.module;
    r.name = e.name;
    auto t0 = std::chrono::steady_clock::now();
    try {
      Outcome o = e.run(options.seed);
      r.pass = o.pass;
      r.detail = o.detail;
    } catch (const std::exception& ex) {
      r.pass = false;
      r.detail = std::string("exception: ") + ex.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    results.push_back(std::move(r));
  }
  return results;
}

ProbabilityVector random_c1_vector(const ConditionParams& cond, std::size_t n, CounterRng& rng) {
  auto r = worst_case_vector(cond, n);
  std::vector<double> p(r.probs().begin(), r.probs().end());
  if (rng.below(2) == 0) {
    double lambda = rng.uniform();
    for (double& x : p) x = lambda * x + (1.0 - lambda) / static_cast<double>(n);
  }
  std::size_t moves = rng.below(3 * n + 1);
  for (std::size_t k = 0; k < moves; ++k) {
    std::size_t i = rng.below(n), j = rng.below(n);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    double t = p[i] * rng.uniform();
    p[i] -= t;
    p[j] += t;
  }
  ProbabilityVector out(std::move(p));
  return check_C1(out, cond) ? out : r;
}

ProbabilityVector random_d0_d1_vector(const ConditionParams& cond, std::size_t n, CounterRng& rng) {
  const std::size_t k0 = cond.quantile_index(n);
  const double nn = static_cast<double>(n);
  const double cap = (1.0 - cond.epsilon) / nn * rng.uniform();
  std::vector<double> p(n);
  for (std::size_t i = 0; i < k0; ++i) p[i] = cap * rng.uniform();
  std::sort(p.begin(), p.begin() + static_cast<long>(k0));
  if (k0 > 0) p[k0 - 1] = cap;
  double head = std::accumulate(p.begin(), p.begin() + static_cast<long>(k0), 0.0);
  double spare = 1.0 - head - static_cast<double>(n - k0) * cap;
  std::vector<double> w(n - k0);
  double ws = 0.0;
  for (double& x : w) ws += (x = -std::log(rng.uniform_open0()) * (rng.below(4) == 0 ? 0.0 : 1.0));
  if (ws == 0.0) {
    std::fill(w.begin(), w.end(), 1.0);
    ws = static_cast<double>(w.size());
  }
  std::sort(w.begin(), w.end());
  for (std::size_t j = 0; j < w.size(); ++j) p[k0 + j] = cap + spare * w[j] / ws;
  return ProbabilityVector(std::move(p));
}

KeyLemmaInstance key_lemma_instance(std::uint64_t seed, std::uint64_t index) {
  static const KeyLemmaCase kTargets[] = {KeyLemmaCase::kA1,  KeyLemmaCase::kA21, KeyLemmaCase::kA22,
                                          KeyLemmaCase::kB1,  KeyLemmaCase::kB21, KeyLemmaCase::kB22,
                                          KeyLemmaCase::kNoBadBins};
  static const double kDeltas[] = {0.25, 1.0 / 3.0, 0.5, 0.75};
  CounterRng rng(seed, index);
  KeyLemmaInstance inst;
  const std::uint64_t slot = index % 8;
  inst.near_boundary = (index / 8) % 3 == 0;
  for (int attempt = 0;; ++attempt) {
    double delta = kDeltas[rng.below(4)];
    std::size_t unit = delta == 1.0 / 3.0 ? 3 : 4;
    std::size_t lo = attempt < 20 ? 4 : 16;
    std::size_t n = unit * ((lo + rng.below(257 - lo)) / unit);
    if (n < 4) n = unit * 2;
    inst.n = n;
    inst.cond = ConditionParams(delta, 0.05 + 0.85 * rng.uniform());
    inst.gamma = log_uniform(rng, 1e-3, 1.0);
    if (slot == 7) {
      double height = log_uniform(rng, 1e-2, 50.0) / inst.gamma;
      std::vector<double> y(n);
      for (double& v : y) v = (rng.uniform() - 0.5) * height * (rng.below(8) == 0 ? 10.0 : 1.0);
      double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
      for (double& v : y) v -= mean;
      std::sort(y.begin(), y.end(), std::greater<>());
      inst.y = std::move(y);
      inst.target = classify_key_lemma_case(inst.y, delta, inst.gamma);
    } else {
      inst.target = kTargets[slot];
      try {
        inst.y = make_case_vector(inst.target, n, delta, inst.gamma, rng.next(), inst.near_boundary);
      } catch (const UnsupportedError&) {
        if (attempt > 200) throw;
        continue;
      }
    }
    inst.p = random_c1_vector(inst.cond, n, rng);
    return inst;
  }
}

KeyLemmaCampaign key_lemma_campaign(std::size_t instances, std::uint64_t seed) {
  KeyLemmaCampaign c;
  c.min_relative_slack = INFINITY;
  for (std::size_t i = 0; i < instances; ++i) {
    auto inst = key_lemma_instance(seed, i);
    auto r = certify_key_lemma_sorted(inst.y, inst.p, inst.cond, inst.gamma);
    ++c.instances;
    ++c.per_case[r.which];
    if (r.which != inst.target) ++c.misclassified;
    double scale = std::abs(r.bound) + std::abs(r.drift) + 1e-300;
    c.min_relative_slack = std::min(c.min_relative_slack, r.slack / scale);
    if (!r.pass_theorem) ++c.failures_theorem;
    if (!r.pass || r.which != inst.target) {
      if (!r.pass) ++c.failures;
      if (c.first_failure.empty()) {
        std::ostringstream d;
        d << "instance " << i << ": n=" << inst.n << " delta=" << inst.cond.delta << " eps=" << inst.cond.epsilon
          << " gamma=" << inst.gamma << " target=" << to_string(inst.target) << " got=" << to_string(r.which)
          << " slack=" << r.slack;
        c.first_failure = d.str();
      }
    }
  }
  return c;
}

std::size_t expansion_violations(const ProbabilityVector& p, double phi) {
  const std::size_t n = p.n();
  const double nn = static_cast<double>(n);
  std::size_t bad = 0;
  double prefix = 0.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    prefix += p[k - 1];
    if (prefix > (1.0 - phi) * static_cast<double>(k) / nn + 1e-12) ++bad;
  }
  // A suffix of t bins receives (dt + cut)/(dn) with cut ≥ φ·d·min(t, n−t); for even n and
  // k > n/2 this is (1+φ)t/n.
  double suffix = 0.0;
  for (std::size_t k = n; k > n / 2; --k) {
    suffix += p[k - 1];
    const double t = static_cast<double>(n - k + 1);
    if (suffix < (t + phi * std::min(t, nn - t)) / nn - 1e-12) ++bad;
  }
  if (p.max_entry() > 2.0 / nn + 1e-12) ++bad;
  return bad;
}

std::vector<RegularGraph> small_graph_catalogue(std::size_t max_n, std::uint64_t seed) {
  std::vector<RegularGraph> out;
  for (std::size_t n = 2; n <= std::min<std::size_t>(max_n, 16); ++n) out.push_back(build(GraphKind::kComplete, n));
  for (std::size_t n = 3; n <= max_n; ++n) out.push_back(build(GraphKind::kCycle, n));
  for (std::size_t n = 2; n <= max_n; n *= 2) out.push_back(build(GraphKind::kHypercube, n));
  for (std::size_t k = 3; k * k <= max_n; ++k) out.push_back(build(GraphKind::kTorus, k * k));
  for (int d : {3, 4})
    for (std::size_t n = static_cast<std::size_t>(d) + 2; n <= max_n; ++n) {
      if ((n * static_cast<std::size_t>(d)) % 2) continue;
      GraphParams gp;
      gp.degree = d;
      gp.seed = derive_seed(seed, n * 10 + static_cast<std::size_t>(d));
      out.push_back(build(GraphKind::kRandomRegular, n, gp));
    }
  return out;
}

}  // namespace balloc
