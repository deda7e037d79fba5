#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace balloc {

using BinId = std::uint32_t;

enum class LoadMode { kFloat, kExactInteger };

// Bin loads plus the rank permutation. Bins and ranks are 0-based here;
// rank 0 is the heaviest bin, equal loads are ordered by ascending bin id.
class LoadState {
 public:
  explicit LoadState(std::size_t n, LoadMode mode = LoadMode::kFloat);

  static LoadState from_loads(std::span<const double> loads);

  std::size_t n() const { return loads_.size(); }
  std::span<const double> loads() const { return loads_; }
  double load(BinId bin) const { return loads_[bin]; }
  double total_weight() const;
  double average() const { return total_weight() / static_cast<double>(n()); }
  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t step) { step_ = step; }
  LoadMode mode() const { return mode_; }

  std::span<const BinId> sorted_index() const { return sorted_; }
  std::span<const std::uint32_t> rank_of() const { return rank_; }
  BinId bin_at_rank(std::size_t rank) const { return sorted_[rank]; }
  std::uint32_t rank(BinId bin) const { return rank_[bin]; }

  // x_i - W/n per bin, in bin order.
  std::vector<double> normalized_loads() const;
  // Normalized loads in rank order (non-increasing).
  std::vector<double> sorted_normalized() const;
  std::span<const std::int64_t> exact_loads() const { return exact_; }
  std::int64_t exact_total() const { return exact_total_; }

  // Adds weight to bin and moves it to its new rank position.
  void apply_allocation(BinId bin, double weight);
  // Adds add[i] to every bin i, then re-derives ranks in one pass.
  void apply_round(std::span<const double> add);

  // True iff bin a sits at a heavier rank than bin b under the tie rule.
  bool heavier(BinId a, BinId b) const {
    return loads_[a] > loads_[b] || (loads_[a] == loads_[b] && a < b);
  }

 private:
  std::vector<double> loads_;
  std::vector<BinId> sorted_;
  std::vector<std::uint32_t> rank_;
  double total_ = 0.0;
  std::uint64_t step_ = 0;
  LoadMode mode_;
  std::vector<std::int64_t> exact_;
  std::int64_t exact_total_ = 0;
};

LoadState new_state(std::size_t n, LoadMode mode = LoadMode::kFloat);

double gap(const LoadState& state);
double max_abs_normalized(const LoadState& state);

// Recomputes the rank permutation from scratch; oracle for the incremental path.
std::vector<BinId> full_sort_order(std::span<const double> loads);

}  // namespace balloc
