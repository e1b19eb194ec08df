#ifndef AFTERCAST_FORECAST_PANEL_HPP
#define AFTERCAST_FORECAST_PANEL_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace aftercast {

// Dense row-major matrix, just enough for panels and regression histories.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  void append_row(std::span<const double> v);
};

// Realized outcomes plus the per-period candidate forecast matrix.  In
// simulation the true conditional means are carried along for scoring;
// real panels leave them empty.
struct ForecastPanel {
  std::vector<std::string> candidate_names;  // may be empty
  Matrix forecasts;                          // periods x candidates
  std::vector<double> outcomes;              // y, one per period
  std::vector<double> true_means;            // m, empty for real data

  std::size_t periods() const { return forecasts.rows; }
  std::size_t candidates() const { return forecasts.cols; }
  void validate() const;  // shape coherence; throws std::invalid_argument
};

}  // namespace aftercast

#endif
