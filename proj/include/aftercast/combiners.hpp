#ifndef AFTERCAST_COMBINERS_HPP
#define AFTERCAST_COMBINERS_HPP

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aftercast/after_engine.hpp"
#include "aftercast/baselines.hpp"
#include "aftercast/forecast_panel.hpp"

namespace aftercast {

struct MethodSpec {
  enum class Kind { kSa, kMd, kTm, kBg, kLr, kClr, kAfter };

  std::string label;  // display name used in tables: SA, BG_0.9, A2, ...
  Kind kind = Kind::kSa;
  double rho = 1.0;          // BG discount factor
  bool lr_intercept = true;  // LR only
  AfterConfig after;         // Kind::kAfter only
};

// Parse a method name: sa, md, tm, bg, bg_<rho>, lr, clr, l2|a2, l1|a1,
// t|at, g|ag.  Throws std::invalid_argument listing valid names.
MethodSpec parse_method(const std::string& name);
std::vector<std::string> builtin_method_names();

// One online combiner run causally over a panel: call predict() for the
// period's combined forecast, then observe() with the realized outcome.
// Methods that are not ready yet (LR before cols+2 rows, BG before any
// error) emit the simple average so every period has a forecast.
class Combiner {
 public:
  explicit Combiner(std::string label) : label_(std::move(label)) {}
  virtual ~Combiner() = default;

  const std::string& label() const { return label_; }

  virtual double predict(std::span<const double> forecasts) = 0;
  virtual void observe(std::span<const double> forecasts, double outcome) = 0;

  // weights behind the upcoming prediction; nullopt when the method has no
  // convex-weight representation (LR)
  virtual std::optional<std::vector<double>> next_weights(
      std::span<const double> forecasts) {
    (void)forecasts;
    return std::nullopt;
  }

  // mixture density estimate at y, AFTER methods only
  virtual std::optional<double> density_at(std::span<const double> forecasts,
                                           double y) {
    (void)forecasts;
    (void)y;
    return std::nullopt;
  }

 private:
  std::string label_;
};

std::unique_ptr<Combiner> make_combiner(const MethodSpec& spec,
                                        std::size_t num_candidates);

// Per-period record of one combiner over a panel.
struct CombinerTrace {
  std::vector<double> combined;
  Matrix weights;  // periods x candidates, rows of zeros when unavailable
  bool has_weights = false;
  std::vector<double> density;
  bool has_density = false;
};

CombinerTrace run_trace(const ForecastPanel& panel, const MethodSpec& spec);

// Forecast paths of several methods over one panel: periods x methods.
Matrix run_methods_over_panel(const ForecastPanel& panel,
                              const std::vector<MethodSpec>& methods);

}  // namespace aftercast

#endif
