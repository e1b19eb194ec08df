#ifndef AFTERCAST_SIMULATION_HPP
#define AFTERCAST_SIMULATION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aftercast/combiners.hpp"
#include "aftercast/distributions.hpp"
#include "aftercast/forecast_panel.hpp"

namespace aftercast {

enum class ScenarioKind { kLinReg, kAr };
enum class CovKind { kEquicorrelated, kAr1, kIdentity };

struct NoiseSpec {
  enum class Kind { kNormal, kDoubleExponential, kStudentT, kLogNormal };
  Kind kind = Kind::kNormal;
  double sigma2 = 1.0;     // target variance (normal / de / t)
  double dof = 3.0;        // t only; must exceed 2 for variance targeting
  double log_scale = 1.0;  // log-normal scale parameter
  bool center = false;     // subtract the log-normal mean

  std::string label() const;
};

double sample_noise(const NoiseSpec& noise, RngState& rng);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kLinReg;
  int p = 5;                // candidate count (largest nested model)
  std::optional<int> p0;    // truth order; nullopt = uniform on {1..p} (AR)
  int n = 125;
  int fit_start = 90;       // forecasts produced for observations beyond this
  int combine_after = 5;    // combination warms up over this many forecasts
  int eval_window = 20;     // score the last this-many forecasts
  NoiseSpec noise;
  CovKind cov_kind = CovKind::kEquicorrelated;  // LinReg predictors
  double cov_param = 0.8;
  int n_beta_draws = 200;
  int n_replicates = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimulatedDataset {
  Matrix x;               // n x p predictors (LinReg only)
  std::vector<double> y;  // realized series
  std::vector<double> m;  // true conditional means
};

// One coefficient/order draw of a scenario.
struct ScenarioDraw {
  int p0 = 1;
  std::vector<double> coefficients;
};

std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t draw,
                             std::uint64_t replicate);

std::vector<ScenarioDraw> make_draws(const ScenarioSpec& spec);

SimulatedDataset gen_linreg(const ScenarioSpec& spec,
                            std::span<const double> beta, RngState& rng);

// AR(p0) series with a 200-observation burn-in; coefficients must be
// stationary.
SimulatedDataset gen_ar(const ScenarioSpec& spec,
                        std::span<const double> coeffs, RngState& rng);

// Stationary AR coefficients via partial autocorrelations drawn i.i.d.
// Uniform(-0.8, 0.8) mapped through the Durbin-Levinson recursion.
std::vector<double> draw_ar_coefficients(int p0, RngState& rng);
bool is_stationary(std::span<const double> coeffs);

// Nested candidate forecasters (OLS with intercept on the first k
// predictors, or on k lags), refit each period on the expanding window of
// observations strictly before the target.
ForecastPanel make_candidates(const SimulatedDataset& data,
                              const ScenarioSpec& spec);

struct ReplicateResult {
  std::vector<double> asee_by_method;
  std::vector<double> candidate_asee;
  std::vector<double> true_means_eval;
};

ReplicateResult run_replicate(const ForecastPanel& panel,
                              const ScenarioSpec& spec,
                              const std::vector<MethodSpec>& methods);

// Mean and standard error over coefficient draws of the per-draw ratios
// (mean ASEE of each method over that of the L1-AFTER benchmark).
struct ExperimentResult {
  std::vector<std::string> methods;
  std::vector<double> mean_ratio;
  std::vector<double> se_ratio;
  Matrix draw_ratios;  // draws x methods
  std::size_t benchmark_index = 0;
  ScenarioSpec spec;
};

// OpenMP runner; jobs <= 0 uses all available threads.  Results are
// identical for any job count (cells are seeded independently and reduced
// in index order).
ExperimentResult run_experiment(const ScenarioSpec& spec,
                                const std::vector<MethodSpec>& methods,
                                int jobs = 0);

// Plain serial loop kept as the reference implementation for testing and
// benchmarking the parallel runner.
ExperimentResult run_experiment_reference(
    const ScenarioSpec& spec, const std::vector<MethodSpec>& methods);

void write_ratio_csv(std::ostream& os, const ExperimentResult& result);
std::string format_ratio_table(const ExperimentResult& result);

}  // namespace aftercast

#endif
