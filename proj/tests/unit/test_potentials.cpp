#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "balloc/error.hpp"
#include "balloc/potentials.hpp"
#include "balloc/process.hpp"
#include "balloc/weights.hpp"

using namespace balloc;

// Frozen from an mpmath evaluation of the closed form.
TEST(Potentials, KeyLemmaConstantOracle) {
  EXPECT_NEAR(key_lemma_constant(0.5), 6.5319726474218083, 1e-12);
  EXPECT_NEAR(key_lemma_constant(0.25), 5.8061979088193851, 1e-12);
  EXPECT_NEAR(key_lemma_constant(1.0 / 3), 5.3333333333333333, 1e-12);
  EXPECT_NEAR(key_lemma_constant(0.75), 14.131102116005772, 1e-11);
}

TEST(Potentials, PairPotential) {
  std::vector<double> y{1, -1};
  auto rep = potential_of(y, 1.0);
  EXPECT_NEAR(rep.gamma_total, 6.1723225392609751, 1e-12);
  EXPECT_NEAR(rep.phi, rep.psi, 1e-15);
}

TEST(Potentials, LogSpaceAgreesWithDirect) {
  std::vector<double> y{3, 1, -2, -2};
  auto d = potential_of(y, 0.7, PotentialMode::kDirect);
  auto l = potential_of(y, 0.7, PotentialMode::kLogSpace);
  EXPECT_NEAR(std::log(d.gamma_total), l.log_gamma_total, 1e-12);
}

TEST(Potentials, HugeLoadsSwitchToLogSpace) {
  std::vector<double> y{2000, -2000};
  auto rep = potential_of(y, 1.0);
  EXPECT_TRUE(rep.log_space);
  EXPECT_NEAR(rep.log_gamma_total, 2000.0 + std::log(2.0), 1e-9);
}

TEST(Potentials, DriftOracle) {
  std::vector<double> y{1, -1}, p{0.25, 0.75};
  auto d = expected_drift_sorted(y, p, 0.1);
  EXPECT_NEAR(d.dphi, -0.0050083375009922013, 1e-15);
  EXPECT_NEAR(d.dpsi, -0.0050083375009922013, 1e-15);
  EXPECT_NEAR(d.dgamma, -0.010016675001984403, 1e-15);
}

TEST(Potentials, CertifyPassesTwoChoice) {
  std::vector<double> y{3, 1, 0, 0, -1, -1, -1, -1};
  auto p = allocation_vector(ProcessSpec::two_choice(), 8);
  auto r = certify_key_lemma_sorted(y, p, ConditionParams(0.25, 0.5), 0.05);
  EXPECT_TRUE(r.pass);
  EXPECT_GE(r.slack, 0.0);
}

TEST(Potentials, CertifyRejectsNonC1) {
  std::vector<double> y{1, -1, 0, 0};
  EXPECT_THROW(certify_key_lemma_sorted(y, ProbabilityVector::uniform(4), ConditionParams(0.5, 0.5), 0.1),
               PreconditionError);
}

TEST(Potentials, CaseVectorsLandInTheirCase) {
  const KeyLemmaCase cases[] = {KeyLemmaCase::kA1, KeyLemmaCase::kA21, KeyLemmaCase::kA22,
                                KeyLemmaCase::kB1, KeyLemmaCase::kB21, KeyLemmaCase::kB22};
  for (auto c : cases) {
    auto y = make_case_vector(c, 64, 0.25, 0.1, 17);
    EXPECT_EQ(classify_key_lemma_case(y, 0.25, 0.1), c) << to_string(c);
  }
}

TEST(Potentials, A2Threshold) {
  EXPECT_NEAR(case_a2_threshold(0.5, 1.0), 0.5 * std::log(8.0 / 3.0), 1e-15);
}

TEST(Potentials, CorollaryGamma) {
  EXPECT_DOUBLE_EQ(gamma_for_weighted(ConditionParams(0.25, 0.5), 2.0, 1.0), 0.00390625);
}

TEST(Potentials, ExpectationBoundNeedsEnoughRuns) {
  std::vector<double> few(5, 1.0);
  EXPECT_THROW(gamma_expectation_bound(few, 8, ConditionParams(0.25, 0.5)), ValidationError);
  std::vector<double> ok(kMinExpectationRuns, 8.0);
  EXPECT_TRUE(gamma_expectation_bound(ok, 8, ConditionParams(0.25, 0.5)).pass);
}

TEST(Potentials, DriftStepBoundHoldsForTwoChoice) {
  auto spec = ProcessSpec::two_choice();
  std::vector<double> loads{4, 2, 1, 1, 0, 0, 0, 0};
  auto s = LoadState::from_loads(loads);
  auto p = allocation_vector(spec, 8);
  auto chk = drift_step_bound_check(s, p, spec, 0.05, 4.0, 1.0, 20000, 3);
  EXPECT_TRUE(chk.pass);
}
