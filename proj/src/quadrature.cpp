#include "aftercast/quadrature.hpp"

#include <cmath>
#include <cstdlib>

namespace aftercast::quadrature {

namespace {

double simpson(double a, double fa, double fm, double fb, double b) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double fa,
             double m, double fm, double b, double fb, double whole,
             double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, fa, flm, fm, m);
  const double right = simpson(m, fm, frm, fb, b);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adapt(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double abs_tol, int max_depth) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = simpson(a, fa, fm, fb, b);
  return adapt(f, a, fa, m, fm, b, fb, whole, abs_tol, max_depth);
}

double real_line_integral(const std::function<double(double)>& f,
                          double core_half_width, double abs_tol) {
  const double l = core_half_width;
  // x beyond this would overflow x*x inside typical density kernels
  constexpr double kXMax = 1e120;

  const double core =
      adaptive_simpson(f, -l, 0.0, 0.25 * abs_tol) +
      adaptive_simpson(f, 0.0, l, 0.25 * abs_tol);

  auto tail = [&](double sign) {
    auto g = [&](double u) -> double {
      if (u <= 1.0 / kXMax) return 0.0;
      const double x = sign / u;
      const double v = f(x);
      return v / (u * u);
    };
    return adaptive_simpson(g, 0.0, 1.0 / l, 0.25 * abs_tol);
  };
  return core + tail(1.0) + tail(-1.0);
}

}  // namespace aftercast::quadrature
