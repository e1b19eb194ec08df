#ifndef AFTERCAST_PANEL_BENCH_HPP
#define AFTERCAST_PANEL_BENCH_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aftercast/combiners.hpp"
#include "aftercast/forecast_panel.hpp"

namespace aftercast {

// One external series: training history (with calendar months) plus the
// hold-out actuals and the candidate forecast matrix.
struct PanelRecord {
  std::string series_id;
  std::vector<double> history;
  std::vector<int> months;  // 1..12, one per history observation
  std::vector<double> actuals;
  Matrix forecasts;  // periods x methods
  std::vector<std::string> method_names;

  ForecastPanel to_panel() const;
};

class PanelCsvError : public std::runtime_error {
 public:
  PanelCsvError(const std::string& msg, int line)
      : std::runtime_error(msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Long-format CSV:
//   series_id,split,t,month,actual,f_<name1>,...,f_<nameM>
// train rows carry history (month required, forecast cells empty); test
// rows carry actuals and a full forecast row (month optional).  Values
// round-trip bit-exactly through save/load.
std::vector<PanelRecord> load_panel_csv(const std::filesystem::path& path);
void save_panel_csv(const std::filesystem::path& path,
                    const std::vector<PanelRecord>& records);

struct BenchmarkOptions {
  int warmup = 6;  // combination starts after this many forecasts
  int scored = 9;  // MSFE over the last this-many forecasts
};

struct PanelSummary {
  std::vector<std::string> methods;
  std::vector<double> mean, se, median, min, q1, q3, max;
  std::vector<std::string> series_ids;  // series actually scored
  Matrix series_ratios;                 // series x methods
  std::vector<std::string> warnings;    // skipped series etc.
};

// Per series, every method runs causally over the forecast periods; MSFE
// over the last `scored` periods against the actuals, reported relative to
// the simple average.  Series shorter than warmup + scored are skipped
// with a warning.
PanelSummary run_panel_benchmark(const std::vector<PanelRecord>& records,
                                 const std::vector<MethodSpec>& methods,
                                 BenchmarkOptions options = {}, int jobs = 0);
PanelSummary run_panel_benchmark_reference(
    const std::vector<PanelRecord>& records,
    const std::vector<MethodSpec>& methods, BenchmarkOptions options = {});

// Quantile with linear interpolation between order statistics at position
// 1 + (n-1)p.
double quantile_interpolated(std::vector<double> values, double prob);

struct ScreenDetail {
  bool heavy = false;
  double kurtosis = 0.0;
  double threshold = 0.0;
  int terms_kept = 0;
  std::vector<double> aic_path;  // AIC after each elimination step
};

// Backward AIC elimination on the seasonal-plus-lags regression of the
// training history; flags the series when the residual kurtosis m4/m2^2
// exceeds 3 by more than 1.645 * sqrt(24/n), the one-sided normal-sampling
// allowance.  Histories shorter than 30 observations are not screenable.
std::optional<ScreenDetail> heavy_tail_screen_detail(const PanelRecord& rec);
std::optional<bool> heavy_tail_screen(const PanelRecord& rec);

void write_summary_csv(std::ostream& os, const PanelSummary& summary);
std::string format_summary_table(const PanelSummary& summary);

}  // namespace aftercast

#endif
