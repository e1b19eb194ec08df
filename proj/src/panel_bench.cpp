#include "aftercast/panel_bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>

#include <Eigen/Dense>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace aftercast {

ForecastPanel PanelRecord::to_panel() const {
  ForecastPanel panel;
  panel.candidate_names = method_names;
  panel.forecasts = forecasts;
  panel.outcomes = actuals;
  panel.validate();
  return panel;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

double parse_double(const std::string& cell, int line_no, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    std::ostringstream msg;
    msg << "line " << line_no << ": cannot parse " << what << " '" << cell
        << "'";
    throw PanelCsvError(msg.str(), line_no);
  }
}

int parse_int(const std::string& cell, int line_no, const char* what) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    std::ostringstream msg;
    msg << "line " << line_no << ": cannot parse " << what << " '" << cell
        << "'";
    throw PanelCsvError(msg.str(), line_no);
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<PanelRecord> load_panel_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw PanelCsvError("cannot open panel file " + path.string(), 0);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw PanelCsvError("panel file is empty: " + path.string(), 0);
  }
  const std::vector<std::string> header = split_csv_line(line);
  const std::vector<std::string> fixed = {"series_id", "split", "t", "month",
                                          "actual"};
  if (header.size() < fixed.size() + 1) {
    throw PanelCsvError("header must be series_id,split,t,month,actual,"
                        "f_<name>,...",
                        1);
  }
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    if (header[i] != fixed[i]) {
      throw PanelCsvError("unexpected header column '" + header[i] +
                              "', expected '" + fixed[i] + "'",
                          1);
    }
  }
  std::vector<std::string> method_names;
  for (std::size_t i = fixed.size(); i < header.size(); ++i) {
    if (header[i].rfind("f_", 0) != 0 || header[i].size() == 2) {
      throw PanelCsvError("forecast columns must be named f_<name>, got '" +
                              header[i] + "'",
                          1);
    }
    method_names.push_back(header[i].substr(2));
  }
  const std::size_t m_count = method_names.size();

  std::vector<PanelRecord> records;
  std::vector<std::string> order;  // first-appearance order of series ids
  auto find_record = [&](const std::string& id) -> PanelRecord& {
    for (auto& r : records) {
      if (r.series_id == id) return r;
    }
    records.emplace_back();
    records.back().series_id = id;
    records.back().method_names = method_names;
    records.back().forecasts.cols = m_count;
    order.push_back(id);
    return records.back();
  };

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << "line " << line_no << ": expected " << header.size()
          << " cells, got " << cells.size();
      throw PanelCsvError(msg.str(), line_no);
    }
    PanelRecord& rec = find_record(cells[0]);
    const std::string& split = cells[1];
    parse_int(cells[2], line_no, "t");
    if (split == "train") {
      const int month = parse_int(cells[3], line_no, "month");
      if (month < 1 || month > 12) {
        std::ostringstream msg;
        msg << "line " << line_no << ": month out of range for series "
            << rec.series_id;
        throw PanelCsvError(msg.str(), line_no);
      }
      rec.history.push_back(parse_double(cells[4], line_no, "actual"));
      rec.months.push_back(month);
      for (std::size_t i = 0; i < m_count; ++i) {
        if (!cells[5 + i].empty()) {
          std::ostringstream msg;
          msg << "line " << line_no << ": train rows must leave forecast "
              << "cells empty (series " << rec.series_id << ")";
          throw PanelCsvError(msg.str(), line_no);
        }
      }
    } else if (split == "test") {
      rec.actuals.push_back(parse_double(cells[4], line_no, "actual"));
      std::vector<double> row(m_count);
      for (std::size_t i = 0; i < m_count; ++i) {
        if (cells[5 + i].empty()) {
          std::ostringstream msg;
          msg << "line " << line_no << ": missing forecast cell f_"
              << method_names[i] << " for series " << rec.series_id;
          throw PanelCsvError(msg.str(), line_no);
        }
        row[i] = parse_double(cells[5 + i], line_no, "forecast");
      }
      rec.forecasts.append_row(row);
    } else {
      std::ostringstream msg;
      msg << "line " << line_no << ": split must be train or test, got '"
          << split << "'";
      throw PanelCsvError(msg.str(), line_no);
    }
  }

  for (const auto& rec : records) {
    if (rec.forecasts.rows != rec.actuals.size()) {
      throw PanelCsvError("series " + rec.series_id +
                              ": forecast row count differs from actuals",
                          0);
    }
  }
  return records;
}

void save_panel_csv(const std::filesystem::path& path,
                    const std::vector<PanelRecord>& records) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write panel file " + path.string());
  }
  out << "series_id,split,t,month,actual";
  if (!records.empty()) {
    for (const auto& name : records.front().method_names) {
      out << ",f_" << name;
    }
  }
  out << "\n";
  for (const auto& rec : records) {
    const std::size_t m_count = rec.method_names.size();
    for (std::size_t t = 0; t < rec.history.size(); ++t) {
      out << rec.series_id << ",train," << (t + 1) << "," << rec.months[t]
          << "," << format_double(rec.history[t]);
      for (std::size_t i = 0; i < m_count; ++i) out << ",";
      out << "\n";
    }
    for (std::size_t t = 0; t < rec.actuals.size(); ++t) {
      out << rec.series_id << ",test," << (t + 1) << ",,"
          << format_double(rec.actuals[t]);
      for (std::size_t i = 0; i < m_count; ++i) {
        out << "," << format_double(rec.forecasts.at(t, i));
      }
      out << "\n";
    }
  }
}

double quantile_interpolated(std::vector<double> values, double prob) {
  if (values.empty()) {
    throw std::invalid_argument("quantile of an empty list");
  }
  std::sort(values.begin(), values.end());
  const double pos = (static_cast<double>(values.size()) - 1.0) * prob;
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

// MSFE of each method over the last `scored` periods of one record; the
// simple average is always evaluated as the ratio denominator.
std::vector<double> series_ratios(const PanelRecord& rec,
                                  const std::vector<MethodSpec>& methods,
                                  const BenchmarkOptions& options) {
  const ForecastPanel panel = rec.to_panel();
  std::vector<MethodSpec> with_sa = methods;
  with_sa.push_back(parse_method("sa"));
  const Matrix preds = run_methods_over_panel(panel, with_sa);
  const std::size_t periods = panel.periods();
  const std::size_t start = periods - static_cast<std::size_t>(options.scored);

  std::vector<double> msfe(with_sa.size(), 0.0);
  for (std::size_t m = 0; m < with_sa.size(); ++m) {
    double acc = 0.0;
    for (std::size_t i = start; i < periods; ++i) {
      const double d = panel.outcomes[i] - preds.at(i, m);
      acc += d * d;
    }
    msfe[m] = acc / static_cast<double>(options.scored);
  }
  const double sa = msfe.back();
  std::vector<double> ratios(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    ratios[m] = msfe[m] / sa;
  }
  return ratios;
}

PanelSummary summarize(const std::vector<MethodSpec>& methods,
                       const std::vector<std::string>& ids,
                       const std::vector<std::vector<double>>& ratios,
                       std::vector<std::string> warnings) {
  PanelSummary summary;
  for (const auto& m : methods) summary.methods.push_back(m.label);
  summary.series_ids = ids;
  summary.warnings = std::move(warnings);
  summary.series_ratios = Matrix(ids.size(), methods.size());
  for (std::size_t s = 0; s < ids.size(); ++s) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      summary.series_ratios.at(s, m) = ratios[s][m];
    }
  }
  const std::size_t n = ids.size();
  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::vector<double> col(n);
    for (std::size_t s = 0; s < n; ++s) col[s] = ratios[s][m];
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(n);
    double se = 0.0;
    if (n > 1) {
      double ss = 0.0;
      for (double v : col) ss += (v - mean) * (v - mean);
      se = std::sqrt(ss / static_cast<double>(n - 1) /
                     static_cast<double>(n));
    }
    summary.mean.push_back(mean);
    summary.se.push_back(se);
    summary.median.push_back(quantile_interpolated(col, 0.5));
    summary.min.push_back(*std::min_element(col.begin(), col.end()));
    summary.q1.push_back(quantile_interpolated(col, 0.25));
    summary.q3.push_back(quantile_interpolated(col, 0.75));
    summary.max.push_back(*std::max_element(col.begin(), col.end()));
  }
  return summary;
}

}  // namespace

PanelSummary run_panel_benchmark_reference(
    const std::vector<PanelRecord>& records,
    const std::vector<MethodSpec>& methods, BenchmarkOptions options) {
  if (methods.empty()) {
    throw std::invalid_argument("panel benchmark needs at least one method");
  }
  std::vector<std::string> ids;
  std::vector<std::vector<double>> ratios;
  std::vector<std::string> warnings;
  const std::size_t min_periods =
      static_cast<std::size_t>(options.warmup + options.scored);
  for (const auto& rec : records) {
    if (rec.actuals.size() < min_periods) {
      warnings.push_back("series " + rec.series_id +
                         " skipped: too few forecast periods");
      continue;
    }
    ids.push_back(rec.series_id);
    ratios.push_back(series_ratios(rec, methods, options));
  }
  return summarize(methods, ids, ratios, std::move(warnings));
}

PanelSummary run_panel_benchmark(const std::vector<PanelRecord>& records,
                                 const std::vector<MethodSpec>& methods,
                                 BenchmarkOptions options, int jobs) {
  if (methods.empty()) {
    throw std::invalid_argument("panel benchmark needs at least one method");
  }
  const std::size_t min_periods =
      static_cast<std::size_t>(options.warmup + options.scored);
  std::vector<const PanelRecord*> keep;
  std::vector<std::string> warnings;
  for (const auto& rec : records) {
    if (rec.actuals.size() < min_periods) {
      warnings.push_back("series " + rec.series_id +
                         " skipped: too few forecast periods");
    } else {
      keep.push_back(&rec);
    }
  }
  std::vector<std::string> ids(keep.size());
  std::vector<std::vector<double>> ratios(keep.size());

  std::exception_ptr error;
  std::mutex error_mutex;
  const long long count = static_cast<long long>(keep.size());
#ifdef _OPENMP
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#else
  (void)jobs;
#endif
  for (long long i = 0; i < count; ++i) {
    try {
      ids[i] = keep[i]->series_id;
      ratios[i] = series_ratios(*keep[i], methods, options);
    } catch (...) {
      const std::scoped_lock lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return summarize(methods, ids, ratios, std::move(warnings));
}

namespace {

struct ScreenFit {
  double aic = 0.0;
  Eigen::VectorXd residuals;
};

ScreenFit fit_subset(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                     const std::vector<int>& cols) {
  const Eigen::Index n = y.size();
  Eigen::MatrixXd a(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    a.col(static_cast<Eigen::Index>(i)) = design.col(cols[i]);
  }
  const Eigen::VectorXd beta = a.completeOrthogonalDecomposition().solve(y);
  ScreenFit fit;
  fit.residuals = y - a * beta;
  const double rss = fit.residuals.squaredNorm();
  const double n_d = static_cast<double>(n);
  // Gaussian-likelihood AIC with k = number of regression coefficients
  fit.aic = n_d * std::log(std::max(rss, 1e-300) / n_d) +
            2.0 * static_cast<double>(cols.size());
  return fit;
}

}  // namespace

std::optional<ScreenDetail> heavy_tail_screen_detail(const PanelRecord& rec) {
  const std::size_t n_hist = rec.history.size();
  if (n_hist < 30 || rec.months.size() != n_hist) return std::nullopt;

  constexpr int kLags = 5;
  const Eigen::Index rows = static_cast<Eigen::Index>(n_hist) - kLags;
  // columns: intercept, month dummies 1..11 (month 12 is the baseline),
  // lags 1..5
  const int n_cols = 1 + 11 + kLags;
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(rows, n_cols);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t t = static_cast<std::size_t>(r) + kLags;
    design(r, 0) = 1.0;
    const int month = rec.months[t];
    if (month >= 1 && month <= 11) design(r, month) = 1.0;
    for (int lag = 1; lag <= kLags; ++lag) {
      design(r, 11 + lag) = rec.history[t - lag];
    }
    y(r) = rec.history[t];
  }

  std::vector<int> cols(n_cols);
  for (int i = 0; i < n_cols; ++i) cols[i] = i;
  ScreenFit current = fit_subset(design, y, cols);

  ScreenDetail detail;
  detail.aic_path.push_back(current.aic);
  while (cols.size() > 1) {
    double best_aic = current.aic;
    std::size_t best_drop = cols.size();
    ScreenFit best_fit;
    for (std::size_t i = 1; i < cols.size(); ++i) {  // never the intercept
      std::vector<int> sub = cols;
      sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(i));
      ScreenFit fit = fit_subset(design, y, sub);
      if (fit.aic < best_aic) {
        best_aic = fit.aic;
        best_drop = i;
        best_fit = std::move(fit);
      }
    }
    if (best_drop == cols.size()) break;
    cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(best_drop));
    current = std::move(best_fit);
    detail.aic_path.push_back(current.aic);
  }

  detail.terms_kept = static_cast<int>(cols.size());
  const double n_d = static_cast<double>(rows);
  const double m2 = current.residuals.squaredNorm() / n_d;
  if (m2 <= 0.0) {
    // a perfectly fit series has no residual tail to speak of
    detail.kurtosis = 0.0;
    detail.threshold = 3.0;
    detail.heavy = false;
    return detail;
  }
  double m4 = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double e = current.residuals(r);
    m4 += e * e * e * e;
  }
  m4 /= n_d;
  detail.kurtosis = m4 / (m2 * m2);
  detail.threshold = 3.0 + 1.645 * std::sqrt(24.0 / n_d);
  detail.heavy = detail.kurtosis > detail.threshold;
  return detail;
}

std::optional<bool> heavy_tail_screen(const PanelRecord& rec) {
  if (auto detail = heavy_tail_screen_detail(rec)) return detail->heavy;
  return std::nullopt;
}

void write_summary_csv(std::ostream& os, const PanelSummary& summary) {
  os << "method,mean,se,median,min,q1,q3,max\n";
  char num[64];
  for (std::size_t m = 0; m < summary.methods.size(); ++m) {
    os << summary.methods[m];
    for (double v : {summary.mean[m], summary.se[m], summary.median[m],
                     summary.min[m], summary.q1[m], summary.q3[m],
                     summary.max[m]}) {
      std::snprintf(num, sizeof(num), ",%.6f", v);
      os << num;
    }
    os << "\n";
  }
}

std::string format_summary_table(const PanelSummary& summary) {
  std::ostringstream os;
  os << "MSFE ratios relative to SA over " << summary.series_ids.size()
     << " series\n\n";
  char line[160];
  std::snprintf(line, sizeof(line),
                "%-10s %8s %8s %8s %8s %8s %8s %8s\n", "method", "mean",
                "se", "median", "min", "q1", "q3", "max");
  os << line;
  for (std::size_t m = 0; m < summary.methods.size(); ++m) {
    std::snprintf(line, sizeof(line),
                  "%-10s %8.3f %8.3f %8.3f %8.3f %8.3f %8.3f %8.3f\n",
                  summary.methods[m].c_str(), summary.mean[m], summary.se[m],
                  summary.median[m], summary.min[m], summary.q1[m],
                  summary.q3[m], summary.max[m]);
    os << line;
  }
  for (const auto& w : summary.warnings) os << "warning: " << w << "\n";
  return os.str();
}

}  // namespace aftercast
