#include "balloc/weights.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "balloc/error.hpp"

namespace balloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double parse_number(const std::string& s, const std::string& spec) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ValidationError("bad weight spec '" + spec + "'");
  return v;
}

// Largest 2^-k ≤ 1 with M(2ζ) finite and at most 1e3.
double dyadic_zeta(const WeightDistribution& d) {
  for (double z = 1.0; z > 1e-6; z /= 2) {
    if (2 * z < d.mgf_radius() && mgf(d, 2 * z) <= 1e3) return z;
  }
  throw ValidationError("no dyadic zeta found for " + d.to_string());
}

}  // namespace

WeightDistribution::WeightDistribution(WeightKind kind, double param) : kind_(kind), param_(param) {}

WeightDistribution WeightDistribution::unit() { return WeightDistribution(WeightKind::kUnit, 0.0); }

WeightDistribution WeightDistribution::exponential() {
  WeightDistribution d(WeightKind::kExponential, 1.0);
  d.zeta_ = 0.25;
  return d;
}

WeightDistribution WeightDistribution::scaled_geometric(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw ValidationError("geometric weights need p in (0,1]");
  WeightDistribution d(WeightKind::kScaledGeometric, p);
  d.zeta_ = dyadic_zeta(d);
  return d;
}

WeightDistribution WeightDistribution::scaled_poisson(double lambda) {
  if (!(lambda > 0.0 && lambda <= 100.0)) throw ValidationError("poisson weights need lambda in (0,100]");
  WeightDistribution d(WeightKind::kScaledPoisson, lambda);
  d.zeta_ = dyadic_zeta(d);
  return d;
}

WeightDistribution WeightDistribution::parse(const std::string& spec) {
  if (spec == "unit") return unit();
  if (spec == "exp1" || spec == "exp") return exponential();
  auto colon = spec.find(':');
  if (colon != std::string::npos) {
    std::string head = spec.substr(0, colon), rest = spec.substr(colon + 1);
    auto eq = rest.find('=');
    if (eq != std::string::npos) {
      std::string key = rest.substr(0, eq);
      double v = parse_number(rest.substr(eq + 1), spec);
      if (head == "geom" && key == "p") return scaled_geometric(v);
      if (head == "poisson" && (key == "l" || key == "lambda")) return scaled_poisson(v);
    }
  }
  throw ValidationError("unknown weight spec '" + spec + "' (expected unit, exp1, geom:p=<p>, poisson:l=<lambda>)");
}

double WeightDistribution::mean() const {
  switch (kind_) {
    case WeightKind::kUnit:
      return 1.0;
    case WeightKind::kExponential:
      return 1.0;
    case WeightKind::kScaledGeometric:
      return param_ * (1.0 / param_);
    case WeightKind::kScaledPoisson:
      return param_ / param_;
  }
  return 1.0;
}

double WeightDistribution::mgf_radius() const {
  switch (kind_) {
    case WeightKind::kExponential:
      return 1.0;
    case WeightKind::kScaledGeometric:
      return param_ >= 1.0 ? kInf : -std::log1p(-param_) / param_;
    default:
      return kInf;
  }
}

std::string WeightDistribution::to_string() const {
  std::ostringstream os;
  switch (kind_) {
    case WeightKind::kUnit:
      return "unit";
    case WeightKind::kExponential:
      return "exp1";
    case WeightKind::kScaledGeometric:
      os << "geom:p=" << param_;
      return os.str();
    case WeightKind::kScaledPoisson:
      os << "poisson:l=" << param_;
      return os.str();
  }
  return "unit";
}

double sample(const WeightDistribution& dist, CounterRng& rng) {
  switch (dist.kind()) {
    case WeightKind::kUnit:
      return 1.0;
    case WeightKind::kExponential:
      return -std::log(rng.uniform_open0());
    case WeightKind::kScaledGeometric: {
      double p = dist.param();
      if (p >= 1.0) return 1.0;
      double g = 1.0 + std::floor(std::log(rng.uniform_open0()) / std::log1p(-p));
      return p * g;
    }
    case WeightKind::kScaledPoisson: {
      double lambda = dist.param();
      double u = rng.uniform();
      double term = std::exp(-lambda), cdf = term;
      long k = 0;
      while (u >= cdf && term > 0.0) {
        ++k;
        term *= lambda / static_cast<double>(k);
        cdf += term;
      }
      return static_cast<double>(k) / lambda;
    }
  }
  return 1.0;
}

double mgf(const WeightDistribution& dist, double z) {
  if (!(z < dist.mgf_radius())) {
    std::ostringstream os;
    os << "mgf of " << dist.to_string() << " diverges at z=" << z;
    throw DivergenceError(os.str());
  }
  switch (dist.kind()) {
    case WeightKind::kUnit:
      return std::exp(z);
    case WeightKind::kExponential:
      return 1.0 / (1.0 - z);
    case WeightKind::kScaledGeometric: {
      double p = dist.param();
      double et = std::exp(z * p);
      return p * et / (1.0 - (1.0 - p) * et);
    }
    case WeightKind::kScaledPoisson: {
      double lambda = dist.param();
      return std::exp(lambda * std::expm1(z / lambda));
    }
  }
  return 0.0;
}

double mgf_numeric(const WeightDistribution& dist, double z) {
  if (!(z < dist.mgf_radius())) throw DivergenceError("mgf_numeric: diverges at z=" + std::to_string(z));
  switch (dist.kind()) {
    case WeightKind::kUnit:
      return std::exp(z);
    case WeightKind::kExponential: {
      boost::math::quadrature::exp_sinh<double> integrator;
      return integrator.integrate([z](double x) { return std::exp((z - 1.0) * x); }, 1e-8);
    }
    case WeightKind::kScaledGeometric: {
      double p = dist.param();
      if (p >= 1.0) return std::exp(z);
      double sum = 0.0, mass = p;
      for (long k = 1; k < 100000; ++k) {
        double term = mass * std::exp(z * p * static_cast<double>(k));
        sum += term;
        if (term < 1e-18 * sum && k > 10) break;
        mass *= 1.0 - p;
      }
      return sum;
    }
    case WeightKind::kScaledPoisson: {
      double lambda = dist.param();
      double sum = 0.0, mass = std::exp(-lambda);
      for (long k = 0; k < 100000; ++k) {
        double term = mass * std::exp(z * static_cast<double>(k) / lambda);
        sum += term;
        if (term < 1e-18 * sum && static_cast<double>(k) > lambda) break;
        mass *= lambda / static_cast<double>(k + 1);
      }
      return sum;
    }
  }
  return 0.0;
}

double s_constant(const WeightDistribution& dist) {
  double zeta = dist.zeta();
  double a = 8.0 / zeta * std::log(8.0 / zeta);
  double first = a * a * a * a;
  double second = mgf(dist, zeta) + mgf(dist, 2.0 * zeta);
  return std::max(first, second);
}

CheckResult moment_inequality_check(const WeightDistribution& dist, double gamma, double ell, long trials,
                                    CounterRng& rng) {
  if (!(gamma > 0.0 && gamma <= dist.zeta() / 2.0 + 1e-15)) {
    throw ValidationError("moment_inequality_check: gamma must lie in (0, zeta/2]");
  }
  if (!(ell >= -1.0 && ell <= 1.0)) throw ValidationError("moment_inequality_check: ell must lie in [-1,1]");
  if (trials < 0) throw ValidationError("moment_inequality_check: trials must be >= 0");
  CheckResult r;
  r.kind = "moment_inequality";
  double s = s_constant(dist);
  r.bound = 1.0 + ell * gamma + s * ell * ell * gamma * gamma;
  if (trials == 0) {
    r.value = mgf(dist, gamma * ell);
    r.slack = r.bound - r.value;
    r.pass = r.value <= r.bound;
    return r;
  }
  double mean = 0.0, m2 = 0.0;
  for (long t = 0; t < trials; ++t) {
    double x = std::exp(gamma * ell * sample(dist, rng));
    double delta = x - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (x - mean);
  }
  r.estimated = true;
  r.value = mean;
  r.std_error = trials > 1 ? std::sqrt(m2 / static_cast<double>(trials - 1) / static_cast<double>(trials)) : 0.0;
  r.slack = r.bound + 3.0 * r.std_error - r.value;
  r.pass = r.slack >= 0.0;
  return r;
}

double drift_s_constant(const WeightDistribution& dist) { return dist.is_unit() ? 1.0 : s_constant(dist); }

}  // namespace balloc
