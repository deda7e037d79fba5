#include <gtest/gtest.h>

#include <vector>

#include "balloc/error.hpp"
#include "balloc/process.hpp"

using namespace balloc;

TEST(Processes, ParseSpecs) {
  EXPECT_EQ(parse_process_spec("two-choice").kind, ProcessKind::kDChoice);
  EXPECT_EQ(parse_process_spec("d-choice:d=3").d, 3);
  EXPECT_DOUBLE_EQ(parse_process_spec("one-plus-beta:beta=0.5").beta, 0.5);
  EXPECT_DOUBLE_EQ(parse_process_spec("quantile:delta=0.25").delta, 0.25);
  EXPECT_EQ(parse_process_spec("reset-memory").kind, ProcessKind::kResetMemory);
  EXPECT_THROW(parse_process_spec("three-choice"), ValidationError);
}

TEST(Processes, TwoChoiceForcedSamplesPickLighter) {
  auto s = new_state(4);
  s.apply_allocation(1, 1.0);
  ForcedSampler f({1, 3});
  auto out = step(ProcessSpec::two_choice(), s, f);
  ASSERT_EQ(out.bins_hit.size(), 1u);
  EXPECT_EQ(out.bins_hit[0].bin, 3u);
}

TEST(Processes, TieGoesToHigherIndex) {
  auto s = new_state(4);
  ForcedSampler f({0, 2});
  auto out = step(ProcessSpec::two_choice(), s, f);
  EXPECT_EQ(out.bins_hit[0].bin, 2u);
}

TEST(Processes, RunConservesBalls) {
  auto s = run_to_state(ProcessSpec::two_choice(), 64, 640, 5);
  EXPECT_DOUBLE_EQ(s.total_weight(), 640.0);
}

TEST(Processes, RunsAreDeterministic) {
  auto a = run_to_state(ProcessSpec::one_plus_beta(0.5), 32, 1000, 9);
  auto b = run_to_state(ProcessSpec::one_plus_beta(0.5), 32, 1000, 9);
  EXPECT_TRUE(std::equal(a.loads().begin(), a.loads().end(), b.loads().begin()));
}

TEST(Processes, EnumerationMatchesVector) {
  auto spec = ProcessSpec::two_choice();
  auto s = new_state(5);
  s.apply_allocation(3, 2.0);
  s.apply_allocation(0, 1.0);
  auto exact = empirical_allocation_vector_exact(spec, s);
  auto p = allocation_vector(spec, 5);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(boost::rational_cast<double>(exact[i]), p[i], 1e-15);
}

TEST(Processes, TwinningDriftAndEfficiency) {
  auto spec = ProcessSpec::twinning(0.5);
  auto z = expected_normalized_change_exact(spec, new_state(4));
  ASSERT_EQ(z.size(), 4u);
  EXPECT_EQ(z[0], Rational(-1, 8));
  EXPECT_EQ(z[1], Rational(-1, 8));
  EXPECT_EQ(z[2], Rational(1, 8));
  EXPECT_EQ(z[3], Rational(1, 8));
  EXPECT_EQ(expected_balls_per_sample_exact(spec, 4), Rational(3, 2));
}

TEST(Processes, ResetMemorySecondBallFollowsTwoChoice) {
  auto s = new_state(4);
  s.apply_allocation(2, 1.0);
  auto q = reset_memory_second_ball_exact(s);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(q[i], Rational(2 * static_cast<long>(i) + 1, 16));
}

TEST(Processes, BatchedRoundAllocatesB) {
  auto s = new_state(16);
  CounterRng rng(4);
  auto p = allocation_vector(ProcessSpec::two_choice(), 16);
  auto out = batched_round(p, s, 48, rng);
  EXPECT_EQ(out.steps_consumed, 48u);
  EXPECT_DOUBLE_EQ(s.total_weight(), 48.0);
}

TEST(Processes, GraphicalNeedsGraph) {
  ProcessSpec spec;
  spec.kind = ProcessKind::kGraphical;
  EXPECT_THROW(spec.validate(8), ValidationError);
}

TEST(Processes, ProbesRecordCounts) {
  ProbeConfig probes;
  probes.every = 32;
  probes.thresholds = {1.0};
  auto recs = run(ProcessSpec::two_choice(), 32, 128, 3, probes);
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_EQ(recs.back().step, 128u);
  EXPECT_EQ(recs.back().bins_ge.size(), 1u);
}

TEST(Processes, AliasTableRespectsZeros) {
  std::vector<double> probs{0.0, 1.0, 0.0};
  AliasTable t(probs);
  CounterRng rng(2);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(t.sample(rng), 1u);
}
