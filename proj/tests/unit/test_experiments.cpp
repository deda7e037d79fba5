#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "balloc/error.hpp"
#include "balloc/experiments.hpp"

using namespace balloc;

TEST(Experiments, ResolveCount) {
  EXPECT_EQ(resolve_count("1000", 64), 1000u);
  EXPECT_EQ(resolve_count("10n", 64), 640u);
  EXPECT_EQ(resolve_count("n", 64), 64u);
  EXPECT_EQ(resolve_count("50b", 64, 128), 6400u);
  EXPECT_EQ(resolve_count("nlogn", 64), static_cast<std::uint64_t>(std::ceil(64 * std::log(64.0))));
  EXPECT_THROW(resolve_count("b", 64, 0), ValidationError);
}

TEST(Experiments, ParseRejectsUnknownKeys) {
  EXPECT_THROW(ExperimentConfig::parse("process = two-choice\ncolour = red\n"), ValidationError);
  EXPECT_THROW(ExperimentConfig::parse("n = 8\n"), ValidationError);
}

TEST(Experiments, BatchedWithWeightsRejected) {
  try {
    ExperimentConfig::parse("process = two-choice\nb = n\nweights = exp1\n");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("only defined for unit-weight balls"), std::string::npos);
  }
}

TEST(Experiments, ExpandIsFactorial) {
  auto cfg = ExperimentConfig::parse("process = one-plus-beta\nn = 16, 32\nbeta = 0.25, 0.5, 1\nm = 4n\n");
  auto pts = expand(cfg);
  ASSERT_EQ(pts.size(), 6u);
  EXPECT_EQ(pts[0].m, 64u);
}

TEST(Experiments, CorollaryGammaForTwoChoice) {
  auto cfg = ExperimentConfig::parse("process = two-choice\nn = 16\ngamma = corollary\n");
  auto pts = expand(cfg);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_DOUBLE_EQ(pts[0].gamma, 0.00390625);
}

TEST(Experiments, SweepEmitsOrderedRows) {
  auto cfg = ExperimentConfig::parse(
      "process = two-choice\nn = 8\nm = 4n\nrepetitions = 3\nprobes = final\nthresholds = 1\n");
  auto t = sweep(cfg);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.columns, record_columns(cfg));
  auto again = sweep(cfg);
  EXPECT_TRUE(tables_equal(t, again, 0.0));
}

TEST(Experiments, AggregateHasQuantiles) {
  auto cfg = ExperimentConfig::parse("process = one-choice\nn = 8\nm = 8n\nrepetitions = 5\nprobes = final\n");
  auto agg = aggregate(sweep(cfg));
  ASSERT_EQ(agg.rows.size(), 1u);
  EXPECT_TRUE(agg.has_column("gap_median"));
  EXPECT_LE(agg.number(0, agg.column("gap_q05")), agg.number(0, agg.column("gap_q95")));
}

TEST(Experiments, CountBinsOutside) {
  std::vector<double> loads{4, 0, 0, 0};
  auto s = LoadState::from_loads(loads);
  auto c = count_bins_outside(s, 2.0);
  EXPECT_EQ(c.above, 1);
  EXPECT_EQ(c.below, 0);
}

TEST(Experiments, QuantileInterpolates) {
  std::vector<double> xs{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(median(xs), 2.5);
  EXPECT_DOUBLE_EQ(quantile(xs, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(xs, 1.0), 4.0);
}

TEST(Experiments, UniformComponent) {
  EXPECT_DOUBLE_EQ(uniform_component(ProcessSpec::one_plus_beta(0.5)), 0.5);
  EXPECT_THROW(uniform_component(ProcessSpec::two_choice()), ValidationError);
}

TEST(Experiments, ConditionParamsForProcesses) {
  auto c = process_condition_params(ProcessSpec::two_choice(), 16);
  ASSERT_TRUE(c.has_value());
  EXPECT_DOUBLE_EQ(c->delta, 0.25);
  EXPECT_DOUBLE_EQ(c->epsilon, 0.5);
  EXPECT_FALSE(process_condition_params(ProcessSpec::one_choice(), 16).has_value());
}
