#include "balloc/graphs.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "balloc/error.hpp"
#include "balloc/rng.hpp"

namespace balloc {

RegularGraph::RegularGraph(std::size_t n, int d, std::vector<std::pair<BinId, BinId>> edges)
    : n_(n), d_(d), edges_(std::move(edges)), adj_(n) {
  if (n < 2) throw ValidationError("graph needs at least 2 vertices");
  if (d < 1) throw ValidationError("graph degree must be >= 1");
  std::set<std::pair<BinId, BinId>> seen;
  for (auto& [u, v] : edges_) {
    if (u >= n || v >= n) throw ValidationError("graph edge endpoint out of range");
    if (u == v) throw ValidationError("graph has a self-loop at vertex " + std::to_string(u + 1));
    auto key = std::minmax(u, v);
    if (!seen.insert({key.first, key.second}).second) {
      throw ValidationError("graph has a duplicate edge " + std::to_string(key.first + 1) + " " +
                            std::to_string(key.second + 1));
    }
    adj_[u].push_back(v);
    adj_[v].push_back(u);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (adj_[i].size() != static_cast<std::size_t>(d)) {
      throw ValidationError("graph is not " + std::to_string(d) + "-regular: vertex " + std::to_string(i + 1) +
                            " has degree " + std::to_string(adj_[i].size()));
    }
    std::sort(adj_[i].begin(), adj_[i].end());
  }
  if (!is_connected(n, adj_)) throw ValidationError("graph is not connected");
}

bool is_connected(std::size_t n, const std::vector<std::vector<BinId>>& adj) {
  std::vector<char> seen(n, 0);
  std::vector<BinId> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    BinId u = stack.back();
    stack.pop_back();
    for (BinId v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

namespace {

using EdgeList = std::vector<std::pair<BinId, BinId>>;

RegularGraph random_regular(std::size_t n, const GraphParams& params) {
  const int d = params.degree;
  if (d < 1 || static_cast<std::size_t>(d) >= n) throw ValidationError("random-regular needs 1 <= d < n");
  if ((n * static_cast<std::size_t>(d)) % 2 != 0) throw ValidationError("random-regular needs n*d even");
  CounterRng rng(params.seed, 0x67726170ULL);
  std::vector<BinId> stubs;
  for (int attempt = 0; attempt < params.retries; ++attempt) {
    stubs.clear();
    for (std::size_t v = 0; v < n; ++v)
      for (int k = 0; k < d; ++k) stubs.push_back(static_cast<BinId>(v));
    std::shuffle(stubs.begin(), stubs.end(), rng);
    EdgeList edges;
    std::set<std::pair<BinId, BinId>> seen;
    bool ok = true;
    for (std::size_t i = 0; i < stubs.size(); i += 2) {
      auto [u, v] = std::minmax(stubs[i], stubs[i + 1]);
      if (u == v || !seen.insert({u, v}).second) {
        ok = false;
        break;
      }
      edges.emplace_back(u, v);
    }
    if (!ok) continue;
    std::vector<std::vector<BinId>> adj(n);
    for (auto [u, v] : edges) {
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    if (!is_connected(n, adj)) continue;
    return RegularGraph(n, d, std::move(edges));
  }
  throw ValidationError("random-regular: no simple connected graph within the retry budget");
}

}  // namespace

RegularGraph build(GraphKind kind, std::size_t n, const GraphParams& params) {
  EdgeList edges;
  std::string label;
  switch (kind) {
    case GraphKind::kComplete: {
      if (n < 2) throw ValidationError("complete graph needs n >= 2");
      for (BinId u = 0; u < n; ++u)
        for (BinId v = u + 1; v < n; ++v) edges.emplace_back(u, v);
      RegularGraph g(n, static_cast<int>(n - 1), std::move(edges));
      g.set_label("complete");
      return g;
    }
    case GraphKind::kCycle: {
      if (n < 3) throw ValidationError("cycle needs n >= 3");
      for (BinId u = 0; u < n; ++u) edges.emplace_back(u, static_cast<BinId>((u + 1) % n));
      RegularGraph g(n, 2, std::move(edges));
      g.set_label("cycle");
      return g;
    }
    case GraphKind::kHypercube: {
      if (n < 2 || !std::has_single_bit(n)) throw ValidationError("hypercube needs n = 2^k with k >= 1");
      int k = std::countr_zero(n);
      for (BinId u = 0; u < n; ++u)
        for (int b = 0; b < k; ++b) {
          BinId v = u ^ (BinId{1} << b);
          if (u < v) edges.emplace_back(u, v);
        }
      RegularGraph g(n, k, std::move(edges));
      g.set_label("hypercube");
      return g;
    }
    case GraphKind::kTorus: {
      auto k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
      if (k * k != n || k < 3) throw ValidationError("torus needs n = k^2 with k >= 3");
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < k; ++c) {
          auto id = [k](std::size_t rr, std::size_t cc) { return static_cast<BinId>((rr % k) * k + (cc % k)); };
          edges.emplace_back(id(r, c), id(r, c + 1));
          edges.emplace_back(id(r, c), id(r + 1, c));
        }
      RegularGraph g(n, 4, std::move(edges));
      g.set_label("torus");
      return g;
    }
    case GraphKind::kRandomRegular: {
      RegularGraph g = random_regular(n, params);
      g.set_label("random-regular:d=" + std::to_string(params.degree));
      return g;
    }
  }
  throw ValidationError("unknown graph kind");
}

RegularGraph build_from_spec(const std::string& spec, std::size_t n, std::uint64_t seed) {
  std::string head = spec.substr(0, spec.find(':'));
  if (head == "complete") return build(GraphKind::kComplete, n);
  if (head == "cycle") return build(GraphKind::kCycle, n);
  if (head == "hypercube") return build(GraphKind::kHypercube, n);
  if (head == "torus") return build(GraphKind::kTorus, n);
  if (head == "random-regular") {
    GraphParams params;
    params.seed = seed;
    if (spec.size() > head.size()) {
      std::stringstream rest(spec.substr(head.size() + 1));
      std::string item;
      while (std::getline(rest, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw ValidationError("bad graph spec '" + spec + "'");
        std::string key = item.substr(0, eq), val = item.substr(eq + 1);
        if (key == "d") {
          params.degree = std::stoi(val);
        } else if (key == "seed") {
          params.seed = std::stoull(val);
        } else {
          throw ValidationError("bad graph spec key '" + key + "'");
        }
      }
    }
    return build(GraphKind::kRandomRegular, n, params);
  }
  throw ValidationError("unknown graph spec '" + spec + "'");
}

double conductance_exact(const RegularGraph& g) {
  const std::size_t n = g.n();
  if (n > kExactConductanceMaxN) {
    throw ValidationError("conductance_exact supports n <= 24 (got n=" + std::to_string(n) +
                          "); use conductance_bounds for larger graphs");
  }
  std::vector<std::uint32_t> nbr(n, 0);
  for (std::size_t v = 0; v < n; ++v)
    for (BinId u : g.adjacency()[v]) nbr[v] |= 1u << u;
  const long d = g.d();

  // Blocks fix the top bits; each block walks a Gray code over the low bits.
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  int top = 0;
  while ((1u << top) < 4 * hw && static_cast<std::size_t>(top) + 4 < n) ++top;
  const int low = static_cast<int>(n) - top;
  const std::uint32_t blocks = 1u << top;

  struct Best {
    long cut = 1;
    long size = 0;
  };
  auto better = [](long cut, long size, const Best& b) { return b.size == 0 || cut * b.size < b.cut * size; };

  auto run_block = [&](std::uint32_t block) {
    Best best;
    std::uint32_t S = block << low;
    long size = std::popcount(S);
    long cut = 0;
    for (std::size_t v = 0; v < n; ++v)
      if (S >> v & 1u) cut += d - std::popcount(nbr[v] & S);
    auto consider = [&] {
      if (size >= 1 && 2 * size <= static_cast<long>(n) && better(cut, size, best)) best = {cut, size};
    };
    consider();
    const std::uint64_t steps = std::uint64_t{1} << low;
    for (std::uint64_t i = 1; i < steps; ++i) {
      int v = std::countr_zero(i);
      std::uint32_t bit = 1u << v;
      if (S & bit) {
        S &= ~bit;
        cut -= d - 2 * std::popcount(nbr[v] & S);
        --size;
      } else {
        cut += d - 2 * std::popcount(nbr[v] & S);
        S |= bit;
        ++size;
      }
      consider();
    }
    return best;
  };

  std::vector<Best> results(blocks);
  unsigned workers = std::min<unsigned>(hw, blocks);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::uint32_t b = w; b < blocks; b += workers) results[b] = run_block(b);
    });
  }
  for (auto& t : pool) t.join();
  Best best;
  for (const Best& b : results)
    if (b.size > 0 && better(b.cut, b.size, best)) best = b;
  return static_cast<double>(best.cut) / static_cast<double>(best.size * d);
}

ConductanceBounds conductance_bounds(const RegularGraph& g) {
  const std::size_t n = g.n();
  const double d = g.d();
  const auto& adj = g.adjacency();
  ConductanceBounds out;

  std::vector<double> v(n), w(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::sin(1.0 + 1.618 * static_cast<double>(i)) + 0.001 * i;
  auto deflate_normalize = [&](std::vector<double>& x) {
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double norm = 0.0;
    for (double& xi : x) {
      xi -= mean;
      norm += xi * xi;
    }
    norm = std::sqrt(norm);
    for (double& xi : x) xi /= norm;
  };
  // M = (I + A/d)/2 has spectrum in [0,1]; its second eigenvalue is 1 − λ₂/2.
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (BinId j : adj[i]) s += x[j];
      y[i] = 0.5 * (x[i] + s / d);
    }
  };
  deflate_normalize(v);
  double theta = 0.0, residual = 1.0;
  const long cap = 100000;
  for (long it = 1; it <= cap; ++it) {
    apply(v, w);
    theta = std::inner_product(v.begin(), v.end(), w.begin(), 0.0);
    double r2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) r2 += (w[i] - theta * v[i]) * (w[i] - theta * v[i]);
    residual = std::sqrt(r2);
    out.iterations = it;
    if (residual <= 1e-10) {
      out.converged = true;
      break;
    }
    v.swap(w);
    deflate_normalize(v);
  }
  out.lambda2 = 2.0 * (1.0 - theta);
  out.lower = out.converged ? std::max(0.0, 1.0 - theta - residual - 1e-9) : 0.0;

  std::vector<BinId> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](BinId a, BinId b) { return v[a] < v[b]; });
  std::vector<char> in(n, 0);
  long cut = 0;
  double best = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    BinId u = order[k - 1];
    long inside = 0;
    for (BinId x : adj[u]) inside += in[x];
    cut += static_cast<long>(adj[u].size()) - 2 * inside;
    in[u] = 1;
    double denom = static_cast<double>(std::min(k, n - k)) * d;
    best = std::min(best, static_cast<double>(cut) / denom);
  }
  out.upper = best;
  return out;
}

ProbabilityVector graphical_allocation_vector(const RegularGraph& g, const LoadState& state) {
  if (state.n() != g.n()) throw ValidationError("graphical_allocation_vector: size mismatch");
  std::vector<double> counts(g.n(), 0.0);
  for (auto [u, v] : g.edges()) counts[std::max(state.rank(u), state.rank(v))] += 1.0;
  const double m = static_cast<double>(g.edges().size());
  for (double& c : counts) c /= m;
  return ProbabilityVector(std::move(counts));
}

RegularGraph read_graph(std::istream& in) {
  std::string line;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      auto pos = out.find_first_not_of(" \t\r");
      if (pos == std::string::npos || out[pos] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_line(line)) throw ValidationError("graph file: missing header line 'n d'");
  std::istringstream header(line);
  long n = 0, d = 0;
  if (!(header >> n >> d) || n < 2 || d < 1) throw ValidationError("graph file: bad header '" + line + "'");
  EdgeList edges;
  while (next_line(line)) {
    std::istringstream row(line);
    long u = 0, v = 0;
    if (!(row >> u >> v)) throw ValidationError("graph file: bad edge line '" + line + "'");
    if (u < 1 || v < 1 || u > n || v > n) throw ValidationError("graph file: vertex out of range in '" + line + "'");
    edges.emplace_back(static_cast<BinId>(u - 1), static_cast<BinId>(v - 1));
  }
  if (static_cast<long>(edges.size()) * 2 != n * d) {
    throw ValidationError("graph file: expected " + std::to_string(n * d / 2) + " edges, found " +
                          std::to_string(edges.size()));
  }
  return RegularGraph(static_cast<std::size_t>(n), static_cast<int>(d), std::move(edges));
}

RegularGraph read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open graph file '" + path + "'");
  return read_graph(in);
}

void write_graph(const RegularGraph& g, std::ostream& out) {
  out << g.n() << ' ' << g.d() << '\n';
  for (auto [u, v] : g.edges()) out << (u + 1) << ' ' << (v + 1) << '\n';
}

}  // namespace balloc
