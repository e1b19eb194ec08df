#ifndef AFTERCAST_SCALE_ESTIMATOR_HPP
#define AFTERCAST_SCALE_ESTIMATOR_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aftercast/distributions.hpp"

namespace aftercast {

struct ScaleOptions {
  std::size_t warmup = 1;      // estimates unavailable before this many errors
  double floor_scale = 1e-8;   // floor = floor_scale * max(|e|, fallback 1)
  bool center_normal = false;  // center the SD at the sample mean
};

// Expanding-window estimate of the conditional scale of a forecaster's
// errors under one assumed family: sample SD (normal), mean absolute error
// (double-exponential), or median absolute error divided by the theoretical
// t_nu absolute median (scaled t).  Estimates depend only on errors pushed
// so far and are clamped below by a floor so a perfect-forecast history can
// never produce a zero scale.
class ScaleEstimator {
 public:
  using Options = ScaleOptions;

  static ScaleEstimator normal(Options opts = Options());
  static ScaleEstimator double_exponential(Options opts = Options());
  static ScaleEstimator scaled_student_t(double dof, Options opts = Options());

  void push_error(double e);  // throws std::domain_error on non-finite e

  bool ready() const { return errors_.size() >= opts_.warmup; }
  std::size_t count() const { return errors_.size(); }

  // nullopt until `warmup` errors have been observed
  std::optional<double> estimate() const;

  double floor() const;
  ErrorFamily family() const { return family_; }
  double dof() const { return dof_; }
  const std::vector<double>& errors() const { return errors_; }
  const Options& options() const { return opts_; }

  nlohmann::json to_json() const;
  static ScaleEstimator from_json(const nlohmann::json& j);

 private:
  ScaleEstimator(ErrorFamily family, double dof, Options opts);

  ErrorFamily family_;
  double dof_ = 0.0;
  double dof_abs_median_ = 1.0;  // cached abs_median(dof) for the t family
  Options opts_;
  std::vector<double> errors_;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
  double sum_abs_ = 0.0;
  double max_abs_ = 0.0;
};

}  // namespace aftercast

#endif
