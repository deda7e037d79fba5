#include <gtest/gtest.h>

#include "balloc/error.hpp"
#include "balloc/probability_vector.hpp"
#include "balloc/process.hpp"

using namespace balloc;

TEST(Vectors, TwoChoiceIsOddOverNSquared) {
  auto p = allocation_vector(ProcessSpec::two_choice(), 4);
  EXPECT_DOUBLE_EQ(p[0], 1.0 / 16);
  EXPECT_DOUBLE_EQ(p[1], 3.0 / 16);
  EXPECT_DOUBLE_EQ(p[2], 5.0 / 16);
  EXPECT_DOUBLE_EQ(p[3], 7.0 / 16);
  EXPECT_EQ(to_csv_row(p), "0.0625,0.1875,0.3125,0.4375");
}

TEST(Vectors, TwoChoiceMeetsConditions) {
  auto p = allocation_vector(ProcessSpec::two_choice(), 4);
  ConditionParams cond(0.25, 0.5);
  EXPECT_TRUE(check_C1(p, cond));
  EXPECT_TRUE(check_C2(p, 2.0));
  EXPECT_TRUE(check_D0(p));
}

TEST(Vectors, OnePlusBetaMixesUniform) {
  auto p = allocation_vector(ProcessSpec::one_plus_beta(0.5), 4);
  auto q = allocation_vector(ProcessSpec::two_choice(), 4);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p[i], 0.5 * 0.25 + 0.5 * q[i], 1e-15);
}

TEST(Vectors, QuantileVector) {
  auto p = allocation_vector(ProcessSpec::quantile(0.5), 4);
  EXPECT_DOUBLE_EQ(p[0], 0.5 / 4);
  EXPECT_DOUBLE_EQ(p[1], 0.5 / 4);
  EXPECT_DOUBLE_EQ(p[2], 1.5 / 4);
  EXPECT_DOUBLE_EQ(p[3], 1.5 / 4);
}

TEST(Vectors, WorstCaseVectorIsTight) {
  ConditionParams cond(0.25, 0.5);
  auto r = worst_case_vector(cond, 8);
  EXPECT_TRUE(check_C1(r, cond));
  double sum = 0;
  for (std::size_t i = 0; i < 8; ++i) sum += r[i];
  EXPECT_NEAR(sum, 1.0, 1e-12);
  auto two = allocation_vector(ProcessSpec::two_choice(), 8);
  EXPECT_TRUE(majorizes(r, two));
}

TEST(Vectors, OneChoiceViolatesC1) {
  EXPECT_FALSE(check_C1(ProbabilityVector::uniform(8), ConditionParams(0.5, 0.1)));
}

TEST(Vectors, RejectsNonDistribution) {
  EXPECT_THROW(ProbabilityVector({0.5, 0.6}), ValidationError);
  EXPECT_THROW(ProbabilityVector({-0.1, 1.1}), ValidationError);
}

TEST(Vectors, QuantileIndexMustBeIntegral) {
  EXPECT_EQ(ConditionParams(0.25, 0.5).quantile_index(8), 2u);
  EXPECT_THROW(ConditionParams(0.3, 0.5).quantile_index(8), ValidationError);
}

TEST(Vectors, CsvRoundTrip) {
  auto p = allocation_vector(ProcessSpec::two_choice(), 6);
  auto q = from_csv_row(to_csv_row(p));
  ASSERT_EQ(q.n(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(p[i], q[i], 1e-15);
}

TEST(Vectors, AverageTiesFlattensEqualBlocks) {
  auto p = allocation_vector(ProcessSpec::two_choice(), 4);
  auto s = new_state(4);
  auto q = average_ties(p, s);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(q[i], 0.25, 1e-15);
}
