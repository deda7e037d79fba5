#include <gtest/gtest.h>

#include <cmath>

#include "balloc/error.hpp"
#include "balloc/weights.hpp"

using namespace balloc;

TEST(Weights, SConstantOracle) {
  EXPECT_NEAR(s_constant(WeightDistribution::unit()), 76585.545667501095, 1e-6);
  EXPECT_NEAR(s_constant(WeightDistribution::exponential()), 151280090.20740957, 1e-3);
  EXPECT_NEAR(s_constant(WeightDistribution::scaled_geometric(0.5)), 3872770.309309685, 1e-5);
  EXPECT_NEAR(s_constant(WeightDistribution::scaled_poisson(2.0)), 76585.545667501095, 1e-6);
}

TEST(Weights, DriftSIsOneForUnitBalls) {
  EXPECT_DOUBLE_EQ(drift_s_constant(WeightDistribution::unit()), 1.0);
  EXPECT_DOUBLE_EQ(drift_s_constant(WeightDistribution::exponential()),
                   s_constant(WeightDistribution::exponential()));
}

TEST(Weights, ClosedFormMgfMatchesNumeric) {
  const WeightDistribution dists[] = {WeightDistribution::exponential(), WeightDistribution::scaled_geometric(0.5),
                                      WeightDistribution::scaled_poisson(2.0)};
  for (const auto& d : dists) EXPECT_NEAR(mgf(d, 0.3), mgf_numeric(d, 0.3), 1e-8) << d.to_string();
}

TEST(Weights, MgfDivergesOutsideRadius) {
  EXPECT_THROW(mgf(WeightDistribution::exponential(), 1.0), DivergenceError);
  EXPECT_TRUE(std::isinf(WeightDistribution::scaled_poisson(2.0).mgf_radius()));
}

TEST(Weights, SampleMeanIsOne) {
  CounterRng rng(12);
  const WeightDistribution dists[] = {WeightDistribution::exponential(), WeightDistribution::scaled_geometric(0.25),
                                      WeightDistribution::scaled_poisson(3.0)};
  for (const auto& d : dists) {
    double sum = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) sum += sample(d, rng);
    EXPECT_NEAR(sum / n, 1.0, 0.02) << d.to_string();
  }
}

TEST(Weights, ParseRoundTrip) {
  for (const char* s : {"unit", "exp1", "geom:p=0.5", "poisson:lambda=2"}) {
    auto d = WeightDistribution::parse(s);
    EXPECT_EQ(WeightDistribution::parse(d.to_string()), d) << s;
  }
  EXPECT_THROW(WeightDistribution::parse("geom:p=1.5"), ValidationError);
}

TEST(Weights, MomentInequalityClosedForm) {
  CounterRng rng(1);
  auto d = WeightDistribution::exponential();
  auto r = moment_inequality_check(d, 0.01, 1.0, 0, rng);
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(r.estimated);
}
