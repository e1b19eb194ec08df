#ifndef AFTERCAST_BASELINES_HPP
#define AFTERCAST_BASELINES_HPP

#include <optional>
#include <span>
#include <vector>

#include "aftercast/forecast_panel.hpp"

namespace aftercast {

// Arithmetic mean of the candidate forecasts.  Throws on an empty pool.
double simple_average(std::span<const double> forecasts);

// Order-statistic median; even pools average the two central values.
double median_combine(std::span<const double> forecasts);

// Mean after deleting exactly one maximal and one minimal element;
// pools smaller than 3 fall back to the simple average.
double trimmed_mean(std::span<const double> forecasts);

// Inverse discounted-mean-squared-error weights.  squared_errors holds one
// chronological list of past squared errors per candidate (latest last);
// rho = 1 is the plain mean.  Returns nullopt when any candidate has no
// history yet.  Zero-variance candidates are floored at 1e-12 x the largest
// mean squared error so a perfect record cannot blow up the division.
std::optional<std::vector<double>> bg_weights(
    const std::vector<std::vector<double>>& squared_errors, double rho = 1.0);

// Ordinary least squares of past outcomes on past forecasts, evaluated at
// the current forecast vector.  Needs cols + 2 history rows (plus one for
// the intercept); otherwise nullopt.  Rank deficiency resolves to the
// minimum-norm solution.
std::optional<double> lr_combine(const Matrix& past_forecasts,
                                 std::span<const double> past_outcomes,
                                 std::span<const double> forecasts,
                                 bool intercept = true);

// Least squares over the probability simplex (nonnegative weights summing
// to one, no intercept), solved by an active-set method with minimum-norm
// KKT solves.  Needs at least one history row.
std::vector<double> clr_weights(const Matrix& past_forecasts,
                                std::span<const double> past_outcomes);

double clr_combine(const Matrix& past_forecasts,
                   std::span<const double> past_outcomes,
                   std::span<const double> forecasts);

}  // namespace aftercast

#endif
