#include "aftercast/scale_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace aftercast {

ScaleEstimator::ScaleEstimator(ErrorFamily family, double dof, Options opts)
    : family_(family), dof_(dof), opts_(opts) {
  if (family_ == ErrorFamily::kScaledStudentT) {
    if (!(dof > 0.0)) {
      throw std::invalid_argument("scale estimator dof must be positive");
    }
    dof_abs_median_ = abs_median(dof);
  }
  if (!(opts_.floor_scale > 0.0)) {
    throw std::invalid_argument("floor_scale must be positive");
  }
}

ScaleEstimator ScaleEstimator::normal(Options opts) {
  return ScaleEstimator(ErrorFamily::kNormal, 0.0, opts);
}

ScaleEstimator ScaleEstimator::double_exponential(Options opts) {
  return ScaleEstimator(ErrorFamily::kDoubleExponential, 0.0, opts);
}

ScaleEstimator ScaleEstimator::scaled_student_t(double dof, Options opts) {
  return ScaleEstimator(ErrorFamily::kScaledStudentT, dof, opts);
}

void ScaleEstimator::push_error(double e) {
  if (!std::isfinite(e)) {
    throw std::domain_error("forecast error must be finite");
  }
  errors_.push_back(e);
  sum_ += e;
  sum_sq_ += e * e;
  sum_abs_ += std::fabs(e);
  max_abs_ = std::max(max_abs_, std::fabs(e));
}

double ScaleEstimator::floor() const {
  return opts_.floor_scale * (max_abs_ > 0.0 ? max_abs_ : 1.0);
}

std::optional<double> ScaleEstimator::estimate() const {
  const std::size_t n = errors_.size();
  if (n < opts_.warmup) return std::nullopt;
  double value = 0.0;
  switch (family_) {
    case ErrorFamily::kNormal:
      if (n >= 2) {
        double ss = sum_sq_;
        if (opts_.center_normal) {
          const double mean = sum_ / static_cast<double>(n);
          ss = std::max(0.0, sum_sq_ - static_cast<double>(n) * mean * mean);
        }
        value = std::sqrt(ss / static_cast<double>(n - 1));
      } else if (n == 1) {
        value = std::fabs(errors_[0]);
      }
      break;
    case ErrorFamily::kDoubleExponential:
      if (n > 0) value = sum_abs_ / static_cast<double>(n);
      break;
    case ErrorFamily::kScaledStudentT: {
      if (n > 0) {
        std::vector<double> abs(n);
        for (std::size_t i = 0; i < n; ++i) abs[i] = std::fabs(errors_[i]);
        const std::size_t hi = n / 2;
        std::nth_element(abs.begin(), abs.begin() + hi, abs.end());
        double med = abs[hi];
        if (n % 2 == 0) {
          // even length: mean of the two central order statistics
          const double lo =
              *std::max_element(abs.begin(), abs.begin() + hi);
          med = 0.5 * (lo + med);
        }
        value = med / dof_abs_median_;
      }
      break;
    }
  }
  return std::max(value, floor());
}

nlohmann::json ScaleEstimator::to_json() const {
  return nlohmann::json{{"family", family_name(family_)},
                        {"dof", dof_},
                        {"warmup", opts_.warmup},
                        {"floor_scale", opts_.floor_scale},
                        {"center_normal", opts_.center_normal},
                        {"errors", errors_}};
}

ScaleEstimator ScaleEstimator::from_json(const nlohmann::json& j) {
  Options opts;
  opts.warmup = j.at("warmup").get<std::size_t>();
  opts.floor_scale = j.at("floor_scale").get<double>();
  opts.center_normal = j.at("center_normal").get<bool>();
  ScaleEstimator est(family_from_name(j.at("family").get<std::string>()),
                     j.at("dof").get<double>(), opts);
  for (double e : j.at("errors").get<std::vector<double>>()) {
    est.push_error(e);
  }
  return est;
}

}  // namespace aftercast
