#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "balloc/error.hpp"
#include "balloc/load_state.hpp"

namespace balloc {

inline constexpr double kConditionTolerance = 1e-12;

// Distribution over rank positions; index 0 is the heaviest bin.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;
  explicit ProbabilityVector(std::vector<double> probs);

  std::size_t n() const { return probs_.size(); }
  std::span<const double> probs() const { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::vector<double> prefix_sums() const;
  double max_entry() const;

  static ProbabilityVector uniform(std::size_t n);

 private:
  std::vector<double> probs_;
};

struct ConditionParams {
  double delta = 0.5;
  double epsilon = 0.5;
  double c_cap = 2.0;

  ConditionParams() = default;
  ConditionParams(double delta, double epsilon, double c_cap = 2.0);

  // ε̃ = εδ/(1−δ)
  double epsilon_tilde() const { return epsilon * delta / (1.0 - delta); }
  // round(δn), required to be integral within 1e-9.
  std::size_t quantile_index(std::size_t n) const;
};

std::size_t snap_quantile(double delta, std::size_t n);

bool check_D0(const ProbabilityVector& p);
bool check_D1(const ProbabilityVector& p, const ConditionParams& params);
bool check_C1(const ProbabilityVector& p, const ConditionParams& params);
bool check_C2(const ProbabilityVector& p, double c_cap);
bool d0_d1_implies_c1_witness(const ProbabilityVector& p, const ConditionParams& params);
bool majorizes(const ProbabilityVector& p, const ProbabilityVector& q);
ProbabilityVector worst_case_vector(const ConditionParams& params, std::size_t n);
ProbabilityVector average_ties(const ProbabilityVector& p, const LoadState& state);

std::string to_csv_row(const ProbabilityVector& p);
ProbabilityVector from_csv_row(const std::string& row);

// Generic forms shared by the double checks (tolerance 1e-12) and the strict
// rational mode (tolerance 0). `k0` is δn; `eps_tilde` is εδ/(1−δ).
template <class T>
bool c1_holds(std::span<const T> p, std::size_t k0, const T& eps, const T& eps_tilde, const T& tol) {
  const std::size_t n = p.size();
  const T nn = T(static_cast<long>(n));
  T prefix = T(0);
  for (std::size_t k = 1; k <= k0; ++k) {
    prefix += p[k - 1];
    if (prefix > (T(1) - eps) * T(static_cast<long>(k)) / nn + tol) return false;
  }
  T suffix = T(0);
  for (std::size_t k = n; k > k0; --k) {
    suffix += p[k - 1];
    if (suffix < (T(1) + eps_tilde) * T(static_cast<long>(n - k + 1)) / nn - tol) return false;
  }
  return true;
}

template <class T>
bool prefix_dominates(std::span<const T> p, std::span<const T> q, const T& tol) {
  if (p.size() != q.size()) throw ValidationError("majorizes: length mismatch");
  T sp = T(0), sq = T(0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    sp += p[i];
    sq += q[i];
    if (sp < sq - tol) return false;
  }
  return true;
}

}  // namespace balloc
