#ifndef AFTERCAST_QUADRATURE_HPP
#define AFTERCAST_QUADRATURE_HPP

#include <functional>

namespace aftercast::quadrature {

// Adaptive Simpson with Richardson correction on [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double abs_tol, int max_depth = 52);

// Integral of f over the whole real line: plain adaptive Simpson on
// [-core_half_width, core_half_width] plus both tails mapped through
// u = 1/x so that algebraically decaying integrands stay resolvable.
// f must decay at least like |x|^-(1+eps) with an integrable log factor.
double real_line_integral(const std::function<double(double)>& f,
                          double core_half_width, double abs_tol);

}  // namespace aftercast::quadrature

#endif
