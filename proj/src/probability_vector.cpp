#include "balloc/probability_vector.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace balloc {

namespace {

double neumaier_sum(std::span<const double> xs) {
  double sum = 0.0, c = 0.0;
  for (double x : xs) {
    double t = sum + x;
    c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + c;
}

}  // namespace

ProbabilityVector::ProbabilityVector(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw ValidationError("ProbabilityVector: empty");
  for (double& x : probs_) {
    if (!std::isfinite(x) || x < -kConditionTolerance || x > 1.0 + kConditionTolerance) {
      throw ValidationError("ProbabilityVector: entry outside [0,1]");
    }
    x = std::clamp(x, 0.0, 1.0);
  }
  double s = neumaier_sum(probs_);
  if (std::abs(s - 1.0) > kConditionTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "ProbabilityVector: entries sum to " << s << ", not 1";
    throw ValidationError(os.str());
  }
}

std::vector<double> ProbabilityVector::prefix_sums() const {
  std::vector<double> out(probs_.size());
  double s = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) out[i] = (s += probs_[i]);
  return out;
}

double ProbabilityVector::max_entry() const { return *std::max_element(probs_.begin(), probs_.end()); }

ProbabilityVector ProbabilityVector::uniform(std::size_t n) {
  if (n == 0) throw ValidationError("uniform: n must be positive");
  return ProbabilityVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

ConditionParams::ConditionParams(double delta_, double epsilon_, double c_cap_)
    : delta(delta_), epsilon(epsilon_), c_cap(c_cap_) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("ConditionParams: delta must be in (0,1)");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("ConditionParams: epsilon must be in (0,1)");
  if (!(c_cap >= 1.0)) throw ValidationError("ConditionParams: C must be >= 1");
}

std::size_t snap_quantile(double delta, std::size_t n) {
  double k = delta * static_cast<double>(n);
  double r = std::round(k);
  if (std::abs(k - r) > 1e-9) {
    std::ostringstream os;
    os << "delta*n = " << k << " is not integral (delta=" << delta << ", n=" << n << ")";
    throw ValidationError(os.str());
  }
  return static_cast<std::size_t>(r);
}

std::size_t ConditionParams::quantile_index(std::size_t n) const { return snap_quantile(delta, n); }

bool check_D0(const ProbabilityVector& p) {
  for (std::size_t i = 0; i + 1 < p.n(); ++i) {
    if (p[i] > p[i + 1] + kConditionTolerance) return false;
  }
  return true;
}

bool check_D1(const ProbabilityVector& p, const ConditionParams& params) {
  std::size_t k = params.quantile_index(p.n());
  if (k == 0) return true;
  return p[k - 1] <= (1.0 - params.epsilon) / static_cast<double>(p.n()) + kConditionTolerance;
}

bool check_C1(const ProbabilityVector& p, const ConditionParams& params) {
  std::size_t k0 = params.quantile_index(p.n());
  return c1_holds<double>(p.probs(), k0, params.epsilon, params.epsilon_tilde(), kConditionTolerance);
}

bool check_C2(const ProbabilityVector& p, double c_cap) {
  if (!(c_cap >= 1.0)) throw ValidationError("check_C2: C must be >= 1");
  return p.max_entry() <= c_cap / static_cast<double>(p.n()) + kConditionTolerance;
}

bool d0_d1_implies_c1_witness(const ProbabilityVector& p, const ConditionParams& params) {
  if (!(check_D0(p) && check_D1(p, params))) return true;
  return check_C1(p, params);
}

bool majorizes(const ProbabilityVector& p, const ProbabilityVector& q) {
  return prefix_dominates<double>(p.probs(), q.probs(), kConditionTolerance);
}

ProbabilityVector worst_case_vector(const ConditionParams& params, std::size_t n) {
  std::size_t k0 = params.quantile_index(n);
  double nn = static_cast<double>(n);
  double lo = (1.0 - params.epsilon) / nn;
  // Upper level derived from the remaining mass keeps the sum at 1 to rounding.
  double hi = (1.0 - lo * static_cast<double>(k0)) / static_cast<double>(n - k0);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = i < k0 ? lo : hi;
  return ProbabilityVector(std::move(r));
}

ProbabilityVector average_ties(const ProbabilityVector& p, const LoadState& state) {
  if (p.n() != state.n()) throw ValidationError("average_ties: size mismatch");
  std::vector<double> out(p.probs().begin(), p.probs().end());
  std::size_t i = 0;
  while (i < out.size()) {
    double x = state.load(state.bin_at_rank(i));
    std::size_t j = i + 1;
    while (j < out.size() && state.load(state.bin_at_rank(j)) == x) ++j;
    if (j - i > 1) {
      double s = 0.0;
      for (std::size_t k = i; k < j; ++k) s += out[k];
      double avg = s / static_cast<double>(j - i);
      for (std::size_t k = i; k < j; ++k) out[k] = avg;
    }
    i = j;
  }
  return ProbabilityVector(std::move(out));
}

std::string to_csv_row(const ProbabilityVector& p) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < p.n(); ++i) {
    if (i) out.push_back(',');
    auto res = std::to_chars(buf, buf + sizeof buf, p[i]);
    out.append(buf, res.ptr);
  }
  return out;
}

ProbabilityVector from_csv_row(const std::string& row) {
  std::vector<double> xs;
  std::size_t start = 0;
  while (start <= row.size()) {
    std::size_t end = row.find(',', start);
    if (end == std::string::npos) end = row.size();
    std::string_view cell(row.data() + start, end - start);
    while (!cell.empty() && (cell.front() == ' ')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r' || cell.back() == '\n')) cell.remove_suffix(1);
    double x = 0.0;
    auto res = std::from_chars(cell.data(), cell.data() + cell.size(), x);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
      throw ValidationError("from_csv_row: bad number '" + std::string(cell) + "'");
    }
    xs.push_back(x);
    start = end + 1;
  }
  return ProbabilityVector(std::move(xs));
}

}  // namespace balloc
