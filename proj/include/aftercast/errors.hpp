#ifndef AFTERCAST_ERRORS_HPP
#define AFTERCAST_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace aftercast {

// Internal numeric failure (non-convergence, overflow); maps to CLI exit 4.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// A quadrature request whose truncation error cannot be brought under the
// requested tail-mass limit.  Carries the analytic bound that was reached.
class AccuracyError : public std::runtime_error {
 public:
  AccuracyError(const std::string& msg, double tail_mass_bound)
      : std::runtime_error(msg), tail_mass_bound_(tail_mass_bound) {}
  double tail_mass_bound() const { return tail_mass_bound_; }

 private:
  double tail_mass_bound_;
};

}  // namespace aftercast

#endif
