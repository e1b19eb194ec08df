#include "aftercast/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "aftercast/quadrature.hpp"

namespace aftercast {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // ln(2*pi)/2
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::domain_error(std::string(what) + " must be finite");
  }
}

// ln of the t_nu normalizing constant Gamma((nu+1)/2) / (Gamma(nu/2) sqrt(nu pi))
double t_log_norm(double nu) {
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * M_PI);
}

}  // namespace

const char* family_name(ErrorFamily family) {
  switch (family) {
    case ErrorFamily::kNormal: return "normal";
    case ErrorFamily::kDoubleExponential: return "double_exponential";
    case ErrorFamily::kScaledStudentT: return "scaled_student_t";
  }
  return "unknown";
}

ErrorFamily family_from_name(const std::string& name) {
  if (name == "normal") return ErrorFamily::kNormal;
  if (name == "double_exponential" || name == "de") {
    return ErrorFamily::kDoubleExponential;
  }
  if (name == "scaled_student_t" || name == "t") {
    return ErrorFamily::kScaledStudentT;
  }
  throw std::invalid_argument("unknown distribution family: " + name);
}

DistributionSpec DistributionSpec::normal(double scale) {
  DistributionSpec s{ErrorFamily::kNormal, scale, 0.0};
  s.validate();
  return s;
}

DistributionSpec DistributionSpec::double_exponential(double scale) {
  DistributionSpec s{ErrorFamily::kDoubleExponential, scale, 0.0};
  s.validate();
  return s;
}

DistributionSpec DistributionSpec::scaled_student_t(double dof, double scale) {
  DistributionSpec s{ErrorFamily::kScaledStudentT, scale, dof};
  s.validate();
  return s;
}

void DistributionSpec::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("distribution scale must be positive");
  }
  if (family == ErrorFamily::kScaledStudentT &&
      (!(dof > 0.0) || !std::isfinite(dof))) {
    throw std::invalid_argument("student t dof must be positive");
  }
}

double log_pdf(const DistributionSpec& spec, double x) {
  spec.validate();
  require_finite(x, "log_pdf argument");
  const double z = x / spec.scale;
  switch (spec.family) {
    case ErrorFamily::kNormal:
      return -std::log(spec.scale) - kHalfLog2Pi - 0.5 * z * z;
    case ErrorFamily::kDoubleExponential:
      return -std::log(2.0 * spec.scale) - std::fabs(z);
    case ErrorFamily::kScaledStudentT:
      return t_log_norm(spec.dof) - std::log(spec.scale) -
             0.5 * (spec.dof + 1.0) * std::log1p(z * z / spec.dof);
  }
  throw std::logic_error("unreachable family");
}

double pdf(const DistributionSpec& spec, double x) {
  return std::exp(log_pdf(spec, x));
}

namespace {

// Continued fraction for the regularized incomplete beta (Lentz's method).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("incomplete beta parameters must be positive");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = a * std::log(x) + b * std::log1p(-x) -
                          (std::lgamma(a) + std::lgamma(b) -
                           std::lgamma(a + b));
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double t_cdf(double nu, double x) {
  if (!(nu > 0.0)) throw std::invalid_argument("t_cdf dof must be positive");
  if (std::isnan(x)) throw std::domain_error("t_cdf argument is NaN");
  if (x == kInf) return 1.0;
  if (x == -kInf) return 0.0;
  const double ib = regularized_incomplete_beta(0.5 * nu, 0.5,
                                                nu / (nu + x * x));
  return x >= 0.0 ? 1.0 - 0.5 * ib : 0.5 * ib;
}

double abs_median(double nu) {
  if (!(nu > 0.0)) {
    throw std::invalid_argument("abs_median dof must be positive");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (t_cdf(nu, hi) < 0.75) hi *= 2.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (t_cdf(nu, mid) < 0.75) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double sample(const DistributionSpec& spec, RngState& rng) {
  spec.validate();
  switch (spec.family) {
    case ErrorFamily::kNormal:
      return std::normal_distribution<double>(0.0, spec.scale)(rng);
    case ErrorFamily::kDoubleExponential: {
      double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      u = std::clamp(u, 1e-300, 1.0 - 1e-16);
      return u < 0.5 ? spec.scale * std::log(2.0 * u)
                     : -spec.scale * std::log(2.0 * (1.0 - u));
    }
    case ErrorFamily::kScaledStudentT: {
      const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
      double v = std::chi_squared_distribution<double>(spec.dof)(rng);
      v = std::max(v, 1e-300);
      return spec.scale * z / std::sqrt(v / spec.dof);
    }
  }
  throw std::logic_error("unreachable family");
}

double tail_mass_bound(const DistributionSpec& spec, double z) {
  spec.validate();
  if (z <= 0.0) return 1.0;
  const double u = z / spec.scale;
  switch (spec.family) {
    case ErrorFamily::kNormal:
      return std::erfc(u / std::sqrt(2.0));
    case ErrorFamily::kDoubleExponential:
      return std::exp(-u);
    case ErrorFamily::kScaledStudentT: {
      // f_t(y|nu) <= A_nu (nu / y^2)^((nu+1)/2) integrated from u to infinity
      const double log_a = t_log_norm(spec.dof);
      const double log_tail = log_a + 0.5 * (spec.dof + 1.0) *
                                          std::log(spec.dof) -
                              spec.dof * std::log(u) - std::log(spec.dof);
      return std::min(1.0, 2.0 * std::exp(log_tail));
    }
  }
  throw std::logic_error("unreachable family");
}

double located_log_pdf(const LocatedSpec& d, double x) {
  return log_pdf(d.spec, x - d.shift);
}

namespace {

// Core half-width wide enough that everything outside it is either
// negligible (light tails) or handled by the 1/x tail extension (t tails).
double core_width_for(const LocatedSpec& d, double limit) {
  const double s = d.spec.scale;
  if (d.spec.family == ErrorFamily::kScaledStudentT) {
    return std::fabs(d.shift) + 50.0 * s;
  }
  double z = 8.0 * s;
  while (tail_mass_bound(d.spec, z) > limit) z *= 1.5;
  return std::fabs(d.shift) + z;
}

}  // namespace

double kl_numeric(const LocatedSpec& p, const LocatedSpec& q,
                  const QuadratureSpec& grid) {
  p.spec.validate();
  q.spec.validate();
  require_finite(p.shift, "location shift");
  require_finite(q.shift, "location shift");

  double half_width;
  if (grid.half_width > 0.0) {
    half_width = grid.half_width;
    double worst = 0.0;
    for (const LocatedSpec* d : {&p, &q}) {
      const double z = half_width - std::fabs(d->shift);
      const double bound = z > 0.0 ? tail_mass_bound(d->spec, z) : 1.0;
      worst = std::max(worst, bound);
    }
    if (worst > grid.tail_mass_limit) {
      std::ostringstream msg;
      msg << "kl_numeric grid half_width " << half_width
          << " leaves tail mass bound " << worst << " above limit "
          << grid.tail_mass_limit;
      throw AccuracyError(msg.str(), worst);
    }
  } else {
    half_width = std::max(core_width_for(p, grid.tail_mass_limit),
                          core_width_for(q, grid.tail_mass_limit));
  }

  auto integrand = [&](double x) -> double {
    const double lp = located_log_pdf(p, x);
    if (lp < -730.0) return 0.0;  // exp underflows; contribution vanishes
    const double lq = located_log_pdf(q, x);
    return std::exp(lp) * (lp - lq);
  };
  return quadrature::real_line_integral(integrand, half_width, grid.abs_tol);
}

}  // namespace aftercast
