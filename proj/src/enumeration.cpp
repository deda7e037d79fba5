#include <cmath>

#include "balloc/error.hpp"
#include "balloc/process.hpp"

namespace balloc {

namespace {

template <class T>
T from_int(std::int64_t v) {
  return T(v);
}

template <class T>
T ratio(std::int64_t a, std::int64_t b) {
  if constexpr (std::is_same_v<T, Rational>) {
    return Rational(a, b);
  } else {
    return static_cast<T>(a) / static_cast<T>(b);
  }
}

// Enumerates all n^d sample tuples of bins and applies the decision rule on
// loads: least load wins, ties go to the higher bin id.
template <class T>
std::vector<T> d_choice_vector(const LoadState& state, int d) {
  const std::size_t n = state.n();
  std::vector<T> p(n, T(0));
  double outcomes = std::pow(static_cast<double>(n), d);
  if (outcomes > 2e7) throw UnsupportedError("enumeration: n^d too large");
  auto total = static_cast<std::int64_t>(outcomes);
  std::vector<BinId> tuple(static_cast<std::size_t>(d), 0);
  std::vector<std::int64_t> counts(n, 0);
  for (std::int64_t k = 0; k < total; ++k) {
    BinId best = tuple[0];
    for (BinId c : tuple) {
      if (state.load(c) < state.load(best) || (state.load(c) == state.load(best) && c > best)) best = c;
    }
    ++counts[state.rank(best)];
    for (std::size_t j = 0; j < tuple.size(); ++j) {
      if (++tuple[j] < n) break;
      tuple[j] = 0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) p[i] = ratio<T>(counts[i], total);
  return p;
}

void require_enumerable(const ProcessSpec& spec, const LoadState& state) {
  if (spec.tie_rule != TieRule::kHigherIndex) {
    throw UnsupportedError("enumeration supports the higher-index tie rule only");
  }
  if (spec.batch > 0) throw UnsupportedError("enumeration of batched rounds is not supported");
  spec.validate(state.n());
}

template <class T>
std::vector<T> ball_counts(const ProcessSpec& spec, const LoadState& state, const T& beta) {
  require_enumerable(spec, state);
  const std::size_t n = state.n();
  const auto nn = static_cast<std::int64_t>(n);
  std::vector<T> p(n, T(0));
  switch (spec.kind) {
    case ProcessKind::kOneChoice:
      for (auto& x : p) x = ratio<T>(1, nn);
      return p;
    case ProcessKind::kDChoice:
      return d_choice_vector<T>(state, spec.d);
    case ProcessKind::kOnePlusBeta: {
      auto two = d_choice_vector<T>(state, 2);
      for (std::size_t i = 0; i < n; ++i) p[i] = (T(1) - beta) * ratio<T>(1, nn) + beta * two[i];
      return p;
    }
    case ProcessKind::kQuantile: {
      std::size_t k0 = snap_quantile(spec.delta, n);
      for (std::size_t r1 = 0; r1 < n; ++r1) {
        if (r1 + 1 > k0) {
          p[r1] += ratio<T>(1, nn);
        } else {
          for (std::size_t r2 = 0; r2 < n; ++r2) p[r2] += ratio<T>(1, nn * nn);
        }
      }
      return p;
    }
    case ProcessKind::kTwinning: {
      std::size_t k0 = snap_quantile(spec.delta, n);
      for (std::size_t r = 0; r < n; ++r) p[r] = ratio<T>(r + 1 <= k0 ? 1 : 2, nn);
      return p;
    }
    case ProcessKind::kPenalty: {
      std::size_t k0 = snap_quantile(spec.delta, n);
      for (std::size_t r1 = 0; r1 < n; ++r1) {
        if (r1 + 1 > k0) {
          p[r1] += ratio<T>(1, nn);
        } else {
          for (std::size_t r2 = 0; r2 < n; ++r2) p[r2] += ratio<T>(2, nn * nn);
        }
      }
      return p;
    }
    case ProcessKind::kResetMemory: {
      auto two = d_choice_vector<T>(state, 2);
      for (std::size_t i = 0; i < n; ++i) p[i] = ratio<T>(1, nn) + two[i];
      return p;
    }
    case ProcessKind::kGraphical: {
      const auto& edges = spec.graph->edges();
      auto m = static_cast<std::int64_t>(edges.size());
      for (auto [u, v] : edges) {
        BinId to = state.load(u) < state.load(v) ? u : state.load(v) < state.load(u) ? v : std::max(u, v);
        p[state.rank(to)] += ratio<T>(1, m);
      }
      return p;
    }
  }
  return p;
}

template <class T>
std::vector<T> normalized(std::vector<T> counts) {
  T total = T(0);
  for (const auto& c : counts) total += c;
  for (auto& c : counts) c /= total;
  return counts;
}

}  // namespace

ProbabilityVector empirical_allocation_vector(const ProcessSpec& spec, const LoadState& state) {
  return ProbabilityVector(normalized(ball_counts<double>(spec, state, spec.beta)));
}

std::vector<Rational> empirical_allocation_vector_exact(const ProcessSpec& spec, const LoadState& state,
                                                        Rational beta) {
  return normalized(ball_counts<Rational>(spec, state, beta));
}

std::vector<Rational> expected_ball_counts_exact(const ProcessSpec& spec, const LoadState& state) {
  if (spec.kind == ProcessKind::kOnePlusBeta) throw UnsupportedError("use empirical_allocation_vector_exact with a rational beta");
  return ball_counts<Rational>(spec, state, Rational(1));
}

std::vector<Rational> expected_normalized_change_exact(const ProcessSpec& spec, const LoadState& state) {
  auto counts = expected_ball_counts_exact(spec, state);
  Rational total(0);
  for (const auto& c : counts) total += c;
  Rational share = total / Rational(static_cast<std::int64_t>(state.n()));
  for (auto& c : counts) c -= share;
  return counts;
}

Rational expected_balls_per_sample_exact(const ProcessSpec& spec, std::size_t n) {
  LoadState state(n);
  auto counts = expected_ball_counts_exact(spec, state);
  Rational balls(0);
  for (const auto& c : counts) balls += c;
  const auto nn = static_cast<std::int64_t>(n);
  Rational samples(1);
  switch (spec.kind) {
    case ProcessKind::kDChoice:
      samples = Rational(spec.d);
      break;
    case ProcessKind::kQuantile:
    case ProcessKind::kPenalty: {
      // A second sample is drawn exactly when the first lands in the top δn ranks.
      auto k0 = static_cast<std::int64_t>(snap_quantile(spec.delta, n));
      samples = Rational(1) + Rational(k0, nn);
      break;
    }
    case ProcessKind::kResetMemory:
    case ProcessKind::kGraphical:
      samples = Rational(2);
      break;
    default:
      break;
  }
  return balls / samples;
}

std::vector<Rational> reset_memory_second_ball_exact(const LoadState& state) {
  return d_choice_vector<Rational>(state, 2);
}

}  // namespace balloc
