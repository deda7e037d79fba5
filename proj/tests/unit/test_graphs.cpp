#include <gtest/gtest.h>

#include <sstream>

#include "balloc/error.hpp"
#include "balloc/graphs.hpp"

using namespace balloc;

TEST(Graphs, CompleteConductance) {
  const double expected[] = {2.0 / 3, 3.0 / 4, 3.0 / 5, 2.0 / 3, 4.0 / 7, 5.0 / 8, 5.0 / 9};
  for (std::size_t n = 4; n <= 10; ++n)
    EXPECT_NEAR(conductance_exact(build(GraphKind::kComplete, n)), expected[n - 4], 1e-12) << n;
}

TEST(Graphs, CycleConductance) {
  EXPECT_NEAR(conductance_exact(build(GraphKind::kCycle, 4)), 0.5, 1e-12);
}

TEST(Graphs, BoundsBracketExact) {
  auto g = build(GraphKind::kHypercube, 16);
  double exact = conductance_exact(g);
  auto b = conductance_bounds(g);
  EXPECT_LE(b.lower, exact + 1e-9);
  EXPECT_GE(b.upper, exact - 1e-9);
}

TEST(Graphs, RandomRegularIsRegularAndConnected) {
  GraphParams params;
  params.degree = 4;
  params.seed = 3;
  auto g = build(GraphKind::kRandomRegular, 64, params);
  for (const auto& nb : g.adjacency()) EXPECT_EQ(nb.size(), 4u);
  EXPECT_TRUE(is_connected(g.n(), g.adjacency()));
}

TEST(Graphs, ExactRefusesLargeGraphs) {
  EXPECT_THROW(conductance_exact(build(GraphKind::kCycle, 64)), ValidationError);
}

TEST(Graphs, RoundTripThroughText) {
  auto g = build(GraphKind::kTorus, 16);
  std::stringstream ss;
  write_graph(g, ss);
  auto h = read_graph(ss);
  EXPECT_EQ(h.n(), g.n());
  EXPECT_EQ(h.d(), g.d());
  EXPECT_EQ(h.edges().size(), g.edges().size());
}

TEST(Graphs, GraphicalVectorOnCompleteGraph) {
  auto g = build(GraphKind::kComplete, 4);
  auto p = graphical_allocation_vector(g, new_state(4));
  double sum = 0;
  for (std::size_t i = 0; i < 4; ++i) sum += p[i];
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_LE(p[0], p[3]);
}

TEST(Graphs, SpecParsing) {
  auto g = build_from_spec("random-regular:d=3,seed=7", 16, 1);
  EXPECT_EQ(g.d(), 3);
  EXPECT_THROW(build_from_spec("petersen", 10, 1), ValidationError);
}
