#ifndef AFTERCAST_AFTER_ENGINE_HPP
#define AFTERCAST_AFTER_ENGINE_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aftercast/scale_estimator.hpp"

namespace aftercast {

enum class AfterMethod { kL2, kL1, kT, kG };

const char* after_method_name(AfterMethod m);
AfterMethod after_method_from_name(const std::string& name);

struct AfterConfig {
  AfterMethod method = AfterMethod::kG;
  std::vector<double> omega = {1.0, 3.0};  // t dof pool, strictly increasing
  double c1 = 1.0;                         // double-exponential stream weight
  double c2 = 2.0;                         // t stream weight
  std::optional<double> fixed_scale;       // test hook: bypass estimators

  // Custom initial weights; empty means uniform (1/J per single-family
  // stream, 1/(K*J) across the t streams).  init_t_weights is indexed
  // [dof index][candidate].
  std::vector<double> init_normal_weights;
  std::vector<double> init_de_weights;
  std::vector<std::vector<double>> init_t_weights;

  ScaleEstimator::Options scale_options;

  void validate(std::size_t num_candidates) const;
};

// Online forecast-combination state.  Every stream (error-family / dof
// combination) keeps one cumulative log-likelihood per candidate; weights
// are the normalized exponentials of those accumulators, mixed across
// streams for the t and general methods.  All mixing happens in log space.
class AfterState {
 public:
  AfterState(std::size_t num_candidates, AfterConfig config = {});

  std::size_t num_candidates() const { return num_candidates_; }
  std::size_t period() const { return period_; }
  const AfterConfig& config() const { return config_; }

  // Current combination weights: a probability vector over candidates.
  std::vector<double> weights() const;

  // Absorb one (forecast vector, outcome) pair: accumulate each stream's
  // log density of the forecast error at the stream's current scale
  // estimate, then feed the error to the scale estimators.  Streams whose
  // estimator is still warming up contribute factor 1.
  void absorb(std::span<const double> forecasts, double outcome);

  // Mixture density estimate at y given the upcoming forecasts, evaluated
  // with the current (pre-absorb) weights and scale estimates.
  double density_estimate(std::span<const double> forecasts, double y) const;

  nlohmann::json to_json() const;
  static AfterState from_json(const nlohmann::json& j);

 private:
  struct Stream {
    ErrorFamily family;
    double dof = 0.0;
    double log_coeff = 0.0;        // ln(1), ln(c1) or ln(c2)
    std::vector<double> log_init;  // ln of initial weights per candidate
    std::vector<double> acc;       // cumulative log likelihood per candidate
    std::vector<ScaleEstimator> scales;
  };

  void build_streams();
  double stream_scale(const Stream& s, std::size_t j) const;

  std::size_t num_candidates_ = 0;
  AfterConfig config_;
  std::size_t period_ = 0;
  std::vector<Stream> streams_;
};

// Inner product of a weight vector with a forecast vector.
double combine(std::span<const double> weights,
               std::span<const double> forecasts);

}  // namespace aftercast

#endif
