#include "balloc/load_state.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>

#include "balloc/error.hpp"

namespace balloc {

LoadState::LoadState(std::size_t n, LoadMode mode) : loads_(n, 0.0), sorted_(n), rank_(n), mode_(mode) {
  if (n == 0) throw ValidationError("LoadState: n must be at least 1");
  if (n > std::numeric_limits<std::uint32_t>::max()) throw ValidationError("LoadState: n too large");
  std::iota(sorted_.begin(), sorted_.end(), 0u);
  std::iota(rank_.begin(), rank_.end(), 0u);
  if (mode == LoadMode::kExactInteger) exact_.assign(n, 0);
}

LoadState LoadState::from_loads(std::span<const double> loads) {
  LoadState s(loads.size());
  for (double x : loads) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("LoadState: loads must be finite and nonnegative");
  }
  s.loads_.assign(loads.begin(), loads.end());
  s.total_ = std::accumulate(loads.begin(), loads.end(), 0.0);
  s.sorted_ = full_sort_order(loads);
  for (std::size_t r = 0; r < s.sorted_.size(); ++r) s.rank_[s.sorted_[r]] = static_cast<std::uint32_t>(r);
  return s;
}

double LoadState::total_weight() const {
  return mode_ == LoadMode::kExactInteger ? static_cast<double>(exact_total_) : total_;
}

std::vector<double> LoadState::normalized_loads() const {
  double avg = average();
  std::vector<double> y(loads_.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = loads_[i] - avg;
  return y;
}

std::vector<double> LoadState::sorted_normalized() const {
  double avg = average();
  std::vector<double> y(loads_.size());
  for (std::size_t r = 0; r < y.size(); ++r) y[r] = loads_[sorted_[r]] - avg;
  return y;
}

void LoadState::apply_allocation(BinId bin, double weight) {
  if (bin >= loads_.size()) {
    throw ValidationError("apply_allocation: bin " + std::to_string(bin) + " out of range for n=" +
                          std::to_string(loads_.size()));
  }
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw ValidationError("apply_allocation: weight must be finite and >= 0");
  if (mode_ == LoadMode::kExactInteger) {
    if (weight != std::floor(weight)) throw ValidationError("apply_allocation: exact mode requires integer weights");
    auto w = static_cast<std::int64_t>(weight);
    exact_[bin] += w;
    exact_total_ += w;
    loads_[bin] = static_cast<double>(exact_[bin]);
  } else {
    loads_[bin] += weight;
    total_ += weight;
  }
  if (weight == 0.0) return;

  // Loads only grow, so the bin moves towards rank 0. Find the first position in
  // [0, pos) whose occupant the bin now precedes.
  std::uint32_t pos = rank_[bin];
  const double x = loads_[bin];
  auto first = sorted_.begin();
  auto it = std::partition_point(first, first + pos, [&](BinId e) {
    return loads_[e] > x || (loads_[e] == x && e < bin);
  });
  auto target = static_cast<std::uint32_t>(it - first);
  if (target == pos) return;
  std::memmove(&sorted_[target + 1], &sorted_[target], (pos - target) * sizeof(BinId));
  sorted_[target] = bin;
  for (std::uint32_t r = target; r <= pos; ++r) rank_[sorted_[r]] = r;
}

void LoadState::apply_round(std::span<const double> add) {
  if (add.size() != loads_.size()) throw ValidationError("apply_round: size mismatch");
  for (std::size_t i = 0; i < add.size(); ++i) {
    double w = add[i];
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("apply_round: weights must be finite and >= 0");
    if (mode_ == LoadMode::kExactInteger) {
      if (w != std::floor(w)) throw ValidationError("apply_round: exact mode requires integer weights");
      exact_[i] += static_cast<std::int64_t>(w);
      exact_total_ += static_cast<std::int64_t>(w);
      loads_[i] = static_cast<double>(exact_[i]);
    } else {
      loads_[i] += w;
      total_ += w;
    }
  }
  sorted_ = full_sort_order(loads_);
  for (std::size_t r = 0; r < sorted_.size(); ++r) rank_[sorted_[r]] = static_cast<std::uint32_t>(r);
}

LoadState new_state(std::size_t n, LoadMode mode) { return LoadState(n, mode); }

double gap(const LoadState& state) {
  double g = state.load(state.bin_at_rank(0)) - state.average();
  return g > 0.0 ? g : 0.0;
}

double max_abs_normalized(const LoadState& state) {
  double avg = state.average();
  double hi = state.load(state.bin_at_rank(0)) - avg;
  double lo = avg - state.load(state.bin_at_rank(state.n() - 1));
  return std::max({hi, lo, 0.0});
}

std::vector<BinId> full_sort_order(std::span<const double> loads) {
  std::vector<BinId> order(loads.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](BinId a, BinId b) {
    return loads[a] > loads[b] || (loads[a] == loads[b] && a < b);
  });
  return order;
}

}  // namespace balloc
