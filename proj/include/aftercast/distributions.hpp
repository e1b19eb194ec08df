#ifndef AFTERCAST_DISTRIBUTIONS_HPP
#define AFTERCAST_DISTRIBUTIONS_HPP

#include <cstdint>
#include <random>

#include "aftercast/errors.hpp"

namespace aftercast {

enum class ErrorFamily { kNormal, kDoubleExponential, kScaledStudentT };

const char* family_name(ErrorFamily family);
ErrorFamily family_from_name(const std::string& name);

// A zero-location error density: (1/scale) * h(x / scale), where h is the
// standard member of the family (standard normal, unit double-exponential,
// or Student's t with `dof` degrees of freedom).
struct DistributionSpec {
  ErrorFamily family = ErrorFamily::kNormal;
  double scale = 1.0;
  double dof = 0.0;  // meaningful only for kScaledStudentT

  static DistributionSpec normal(double scale);
  static DistributionSpec double_exponential(double scale);
  static DistributionSpec scaled_student_t(double dof, double scale);

  // throws std::invalid_argument on nonpositive scale/dof
  void validate() const;
};

// Natural log of the density at x.  Finite for every finite x.
double log_pdf(const DistributionSpec& spec, double x);
double pdf(const DistributionSpec& spec, double x);

// Regularized incomplete beta I_x(a, b), continued-fraction (Lentz)
// evaluation, relative tolerance ~1e-14.
double regularized_incomplete_beta(double a, double b, double x);

// CDF of the standard Student's t with dof nu > 0.
double t_cdf(double nu, double x);

// Median of |T| for T ~ t_nu, i.e. the 0.75-quantile of t_nu; root of
// t_cdf(nu, m) = 0.75 found by bisection to absolute tolerance 1e-10.
double abs_median(double nu);

// Explicit-value RNG state; never shared between threads.
using RngState = std::mt19937_64;

// One draw from the family.  The scaled-t draw is normal / sqrt(chisq/nu);
// variance targeting (scale selection) is the caller's responsibility.
double sample(const DistributionSpec& spec, RngState& rng);

// Upper bound on P(|X| > z) for the zero-location family; closed form.
double tail_mass_bound(const DistributionSpec& spec, double z);

// Density (1/s) h((x - shift)/s): a location-shifted family member.
struct LocatedSpec {
  DistributionSpec spec;
  double shift = 0.0;
};

double located_log_pdf(const LocatedSpec& d, double x);

struct QuadratureSpec {
  double half_width = 0.0;        // 0 = choose from the operands' tails
  double abs_tol = 1e-9;          // per-integral Simpson tolerance
  double tail_mass_limit = 1e-10; // reject explicit grids looser than this
};

// Numeric Kullback-Leibler divergence D(p || q) = integral p log(p/q).
// The independent quadrature oracle: core interval plus algebraic (1/x)
// tail extensions so Student's t tails are integrated instead of truncated.
// Throws AccuracyError when an explicit half_width leaves more tail mass
// than grid.tail_mass_limit.
double kl_numeric(const LocatedSpec& p, const LocatedSpec& q,
                  const QuadratureSpec& grid = {});

}  // namespace aftercast

#endif
