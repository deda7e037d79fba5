#include <gtest/gtest.h>

#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "balloc/error.hpp"
#include "balloc/load_state.hpp"
#include "balloc/rng.hpp"

using namespace balloc;

TEST(Rng, SameSeedSameStream) {
  CounterRng a(42, 3), b(42, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, StreamsDiffer) {
  CounterRng a(42, 0), b(42, 1);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a.next() == b.next();
  EXPECT_EQ(equal, 0);
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  CounterRng rng(7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    auto v = rng.below(5);
    ASSERT_LT(v, 5u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(Rng, UniformOpenZeroIsPositive) {
  CounterRng rng(9);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform_open0();
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
  }
}

TEST(Rng, DerivedSeedsFitSignedCells) {
  for (std::uint64_t i = 0; i < 1000; ++i) EXPECT_LT(derive_seed(~0ull, i), 1ull << 63);
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_EQ(derive_seed(5, 9), derive_seed(5, 9));
}

TEST(LoadState, EmptyStateHasZeroGap) {
  auto s = new_state(8);
  EXPECT_EQ(s.n(), 8u);
  EXPECT_DOUBLE_EQ(gap(s), 0.0);
  EXPECT_DOUBLE_EQ(max_abs_normalized(s), 0.0);
}

TEST(LoadState, TiesRankByAscendingId) {
  auto s = new_state(4);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(s.bin_at_rank(r), r);
  s.apply_allocation(2, 1.0);
  EXPECT_EQ(s.bin_at_rank(0), 2u);
  EXPECT_EQ(s.bin_at_rank(1), 0u);
  EXPECT_EQ(s.bin_at_rank(3), 3u);
}

TEST(LoadState, GapAndNormalizedLoads) {
  std::vector<double> loads{3, 0, 1, 0};
  auto s = LoadState::from_loads(loads);
  EXPECT_DOUBLE_EQ(s.average(), 1.0);
  EXPECT_DOUBLE_EQ(gap(s), 2.0);
  auto y = s.sorted_normalized();
  EXPECT_EQ(y, (std::vector<double>{2, 0, -1, -1}));
  EXPECT_NEAR(std::accumulate(y.begin(), y.end(), 0.0), 0.0, 1e-12);
}

TEST(LoadState, IncrementalRanksMatchFullSort) {
  auto s = new_state(32);
  CounterRng rng(11);
  for (int i = 0; i < 2000; ++i) {
    s.apply_allocation(static_cast<BinId>(rng.below(32)), 1.0 + rng.uniform());
    if (i % 97 == 0) {
      auto order = full_sort_order(s.loads());
      ASSERT_TRUE(std::equal(order.begin(), order.end(), s.sorted_index().begin()));
    }
  }
}

TEST(LoadState, ApplyRoundReRanks) {
  auto s = new_state(3);
  std::vector<double> add{0, 2, 1};
  s.apply_round(add);
  EXPECT_EQ(s.bin_at_rank(0), 1u);
  EXPECT_EQ(s.bin_at_rank(1), 2u);
  EXPECT_EQ(s.bin_at_rank(2), 0u);
}

TEST(LoadState, RejectsNegativeLoads) {
  std::vector<double> loads{1, -1};
  EXPECT_THROW(LoadState::from_loads(loads), ValidationError);
}
