#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "balloc/load_state.hpp"
#include "balloc/probability_vector.hpp"

namespace balloc {

enum class GraphKind { kComplete, kCycle, kHypercube, kRandomRegular, kTorus };

struct GraphParams {
  int degree = 4;         // random-regular only
  std::uint64_t seed = 1;  // random-regular only
  int retries = 1000;
};

class RegularGraph {
 public:
  RegularGraph(std::size_t n, int d, std::vector<std::pair<BinId, BinId>> edges);

  std::size_t n() const { return n_; }
  int d() const { return d_; }
  const std::vector<std::pair<BinId, BinId>>& edges() const { return edges_; }
  const std::vector<std::vector<BinId>>& adjacency() const { return adj_; }
  std::string label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

 private:
  std::size_t n_;
  int d_;
  std::vector<std::pair<BinId, BinId>> edges_;
  std::vector<std::vector<BinId>> adj_;
  std::string label_;
};

RegularGraph build(GraphKind kind, std::size_t n, const GraphParams& params = {});
// "complete", "cycle", "hypercube", "torus", "random-regular:d=4[,seed=7]"
RegularGraph build_from_spec(const std::string& spec, std::size_t n, std::uint64_t seed);

bool is_connected(std::size_t n, const std::vector<std::vector<BinId>>& adj);

inline constexpr std::size_t kExactConductanceMaxN = 24;

double conductance_exact(const RegularGraph& g);

struct ConductanceBounds {
  double lower = 0.0;
  double upper = 1.0;
  double lambda2 = 0.0;
  bool converged = false;
  long iterations = 0;
};

ConductanceBounds conductance_bounds(const RegularGraph& g);

ProbabilityVector graphical_allocation_vector(const RegularGraph& g, const LoadState& state);

RegularGraph read_graph(std::istream& in);
RegularGraph read_graph_file(const std::string& path);
void write_graph(const RegularGraph& g, std::ostream& out);

}  // namespace balloc
