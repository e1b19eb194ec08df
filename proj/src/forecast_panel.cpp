#include "aftercast/forecast_panel.hpp"

#include <stdexcept>

namespace aftercast {

void Matrix::append_row(std::span<const double> v) {
  if (rows == 0 && cols == 0) cols = v.size();
  if (v.size() != cols) {
    throw std::invalid_argument("appended row has wrong width");
  }
  data.insert(data.end(), v.begin(), v.end());
  ++rows;
}

void ForecastPanel::validate() const {
  if (outcomes.size() != forecasts.rows) {
    throw std::invalid_argument("panel outcomes/forecast row count mismatch");
  }
  if (!true_means.empty() && true_means.size() != forecasts.rows) {
    throw std::invalid_argument("panel true-mean length mismatch");
  }
  if (!candidate_names.empty() && candidate_names.size() != forecasts.cols) {
    throw std::invalid_argument("panel candidate name count mismatch");
  }
}

}  // namespace aftercast
