#pragma once

#include <cstdint>
#include <limits>

namespace balloc {

std::uint64_t mix64(std::uint64_t x);

// Counter-based generator: output k is a pure function of (seed, stream, k),
// so runs are reproducible and trials can be split across threads freely.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }
  std::uint64_t next();

  // Uniform in [0, bound) by multiply-shift with rejection (no modulo bias).
  std::uint64_t below(std::uint64_t bound);
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform in (0, 1].
  double uniform_open0();
  bool bernoulli(double p);

  std::uint64_t counter() const { return counter_; }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Deterministic child seed for trial `index` under a master seed; 63 bits so it fits a signed CSV cell.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace balloc
