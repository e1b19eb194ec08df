#include "aftercast/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace aftercast {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t s = a;
  std::uint64_t h = splitmix64(s);
  s ^= b + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  h = splitmix64(s);
  s ^= c + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  return splitmix64(s);
}

constexpr std::uint64_t kDrawTag = 0xD7A3C1E5u;
constexpr std::uint64_t kCellTag = 0x5EEDC0DEu;

}  // namespace

std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t draw,
                             std::uint64_t replicate) {
  return mix(base ^ kCellTag, draw, replicate);
}

std::string NoiseSpec::label() const {
  char buf[64];
  switch (kind) {
    case Kind::kNormal:
      std::snprintf(buf, sizeof(buf), "normal(var=%g)", sigma2);
      break;
    case Kind::kDoubleExponential:
      std::snprintf(buf, sizeof(buf), "de(var=%g)", sigma2);
      break;
    case Kind::kStudentT:
      std::snprintf(buf, sizeof(buf), "t(dof=%g,var=%g)", dof, sigma2);
      break;
    case Kind::kLogNormal:
      std::snprintf(buf, sizeof(buf), "lognormal(sigma=%g%s)", log_scale,
                    center ? ",centered" : "");
      break;
  }
  return buf;
}

double sample_noise(const NoiseSpec& noise, RngState& rng) {
  switch (noise.kind) {
    case NoiseSpec::Kind::kNormal:
      return sample(DistributionSpec::normal(std::sqrt(noise.sigma2)), rng);
    case NoiseSpec::Kind::kDoubleExponential:
      return sample(
          DistributionSpec::double_exponential(std::sqrt(noise.sigma2 / 2.0)),
          rng);
    case NoiseSpec::Kind::kStudentT: {
      // Var(k t_nu) = k^2 nu / (nu - 2)
      const double k =
          std::sqrt(noise.sigma2 * (noise.dof - 2.0) / noise.dof);
      return sample(DistributionSpec::scaled_student_t(noise.dof, k), rng);
    }
    case NoiseSpec::Kind::kLogNormal: {
      const double z =
          sample(DistributionSpec::normal(noise.log_scale), rng);
      double v = std::exp(z);
      if (noise.center) v -= std::exp(0.5 * noise.log_scale * noise.log_scale);
      return v;
    }
  }
  throw std::logic_error("unreachable noise kind");
}

void ScenarioSpec::validate() const {
  if (n <= 0 || fit_start <= 0 || fit_start >= n) {
    throw std::invalid_argument("scenario requires 0 < fit_start < n");
  }
  if (eval_window < 1 || combine_after < 0) {
    throw std::invalid_argument("scenario eval/warmup windows invalid");
  }
  if (fit_start + combine_after + eval_window > n) {
    throw std::invalid_argument(
        "scenario windows exceed the sample: fit_start + combine_after + "
        "eval_window must be <= n");
  }
  if (p < 1) throw std::invalid_argument("scenario needs p >= 1");
  if (kind == ScenarioKind::kLinReg) {
    if (!p0) {
      throw std::invalid_argument("linreg scenario requires p0");
    }
    if (*p0 < 1 || *p0 > p) {
      throw std::invalid_argument("scenario requires 1 <= p0 <= p");
    }
    if (fit_start < p + 2) {
      throw std::invalid_argument("fit_start too small to fit the largest "
                                  "candidate model");
    }
  } else {
    if (p0 && (*p0 < 1 || *p0 > p)) {
      throw std::invalid_argument("scenario requires 1 <= p0 <= p");
    }
    if (fit_start - p < p + 2) {
      throw std::invalid_argument("fit_start too small to fit the largest "
                                  "AR candidate");
    }
  }
  switch (noise.kind) {
    case NoiseSpec::Kind::kNormal:
    case NoiseSpec::Kind::kDoubleExponential:
      if (!(noise.sigma2 > 0.0)) {
        throw std::invalid_argument("noise variance must be positive");
      }
      break;
    case NoiseSpec::Kind::kStudentT:
      if (!(noise.sigma2 > 0.0)) {
        throw std::invalid_argument("noise variance must be positive");
      }
      if (!(noise.dof > 2.0)) {
        throw std::invalid_argument(
            "t noise requires dof > 2 for variance targeting");
      }
      break;
    case NoiseSpec::Kind::kLogNormal:
      if (!(noise.log_scale > 0.0)) {
        throw std::invalid_argument("log-normal scale must be positive");
      }
      break;
  }
  if (n_beta_draws < 1 || n_replicates < 1) {
    throw std::invalid_argument("draw/replicate counts must be positive");
  }
}

std::vector<ScenarioDraw> make_draws(const ScenarioSpec& spec) {
  std::vector<ScenarioDraw> draws;
  draws.reserve(spec.n_beta_draws);
  for (int d = 0; d < spec.n_beta_draws; ++d) {
    RngState rng(mix(spec.seed ^ kDrawTag, static_cast<std::uint64_t>(d), 0));
    ScenarioDraw draw;
    if (spec.kind == ScenarioKind::kLinReg) {
      draw.p0 = *spec.p0;
      std::uniform_real_distribution<double> unif(1.0, 3.0);
      for (int i = 0; i < draw.p0; ++i) draw.coefficients.push_back(unif(rng));
    } else {
      if (spec.p0) {
        draw.p0 = *spec.p0;
      } else {
        draw.p0 = std::uniform_int_distribution<int>(1, spec.p)(rng);
      }
      draw.coefficients = draw_ar_coefficients(draw.p0, rng);
    }
    draws.push_back(std::move(draw));
  }
  return draws;
}

SimulatedDataset gen_linreg(const ScenarioSpec& spec,
                            std::span<const double> beta, RngState& rng) {
  const int n = spec.n;
  const int p = spec.p;
  const int p0 = static_cast<int>(beta.size());
  if (p0 < 1 || p0 > p) {
    throw std::invalid_argument("beta length must lie in [1, p]");
  }
  SimulatedDataset data;
  data.x = Matrix(n, p);
  data.y.resize(n);
  data.m.resize(n);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    switch (spec.cov_kind) {
      case CovKind::kIdentity:
        for (int c = 0; c < p; ++c) data.x.at(i, c) = std_normal(rng);
        break;
      case CovKind::kEquicorrelated: {
        const double rho = spec.cov_param;
        const double g = std_normal(rng);
        for (int c = 0; c < p; ++c) {
          data.x.at(i, c) =
              std::sqrt(rho) * g + std::sqrt(1.0 - rho) * std_normal(rng);
        }
        break;
      }
      case CovKind::kAr1: {
        const double rho = spec.cov_param;
        double prev = std_normal(rng);
        data.x.at(i, 0) = prev;
        for (int c = 1; c < p; ++c) {
          prev = rho * prev + std::sqrt(1.0 - rho * rho) * std_normal(rng);
          data.x.at(i, c) = prev;
        }
        break;
      }
    }
    double m = 0.0;
    for (int c = 0; c < p0; ++c) m += data.x.at(i, c) * beta[c];
    data.m[i] = m;
    data.y[i] = m + sample_noise(spec.noise, rng);
  }
  return data;
}

std::vector<double> draw_ar_coefficients(int p0, RngState& rng) {
  std::uniform_real_distribution<double> unif(-0.8, 0.8);
  std::vector<double> pac(p0);
  for (double& v : pac) v = unif(rng);
  // Durbin-Levinson: map partial autocorrelations to AR coefficients
  std::vector<double> phi(p0, 0.0);
  for (int k = 0; k < p0; ++k) {
    std::vector<double> prev(phi.begin(), phi.begin() + k);
    phi[k] = pac[k];
    for (int i = 0; i < k; ++i) {
      phi[i] = prev[i] - pac[k] * prev[k - 1 - i];
    }
  }
  return phi;
}

bool is_stationary(std::span<const double> coeffs) {
  const int p = static_cast<int>(coeffs.size());
  if (p == 0) return true;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (int c = 0; c < p; ++c) companion(0, c) = coeffs[c];
  for (int r = 1; r < p; ++r) companion(r, r - 1) = 1.0;
  const Eigen::VectorXcd eig = companion.eigenvalues();
  for (int i = 0; i < p; ++i) {
    if (std::abs(eig(i)) >= 1.0) return false;
  }
  return true;
}

SimulatedDataset gen_ar(const ScenarioSpec& spec,
                        std::span<const double> coeffs, RngState& rng) {
  if (!is_stationary(coeffs)) {
    throw std::invalid_argument("AR coefficients are not stationary");
  }
  constexpr int kBurnIn = 200;
  const int n = spec.n;
  const int total = kBurnIn + n;
  const int p0 = static_cast<int>(coeffs.size());
  std::vector<double> y(total, 0.0);
  std::vector<double> m(total, 0.0);
  for (int t = 0; t < total; ++t) {
    double mean = 0.0;
    for (int k = 0; k < p0; ++k) {
      const int lag = t - 1 - k;
      mean += coeffs[k] * (lag >= 0 ? y[lag] : 0.0);
    }
    m[t] = mean;
    y[t] = mean + sample_noise(spec.noise, rng);
  }
  SimulatedDataset data;
  data.y.assign(y.begin() + kBurnIn, y.end());
  data.m.assign(m.begin() + kBurnIn, m.end());
  return data;
}

namespace {

// OLS forecast of y[target] from a design built on rows < target.
double ols_forecast(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                    const Eigen::RowVectorXd& at_point) {
  const Eigen::VectorXd beta =
      a.completeOrthogonalDecomposition().solve(b);
  return at_point * beta;
}

}  // namespace

ForecastPanel make_candidates(const SimulatedDataset& data,
                              const ScenarioSpec& spec) {
  const int n = static_cast<int>(data.y.size());
  if (n != spec.n) {
    throw std::invalid_argument("dataset length does not match scenario");
  }
  const int fs = spec.fit_start;
  const int p = spec.p;
  const int rows = n - fs;

  ForecastPanel panel;
  panel.forecasts = Matrix(rows, p);
  panel.outcomes.assign(data.y.begin() + fs, data.y.end());
  panel.true_means.assign(data.m.begin() + fs, data.m.end());
  for (int k = 1; k <= p; ++k) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%s%d",
                  spec.kind == ScenarioKind::kAr ? "ar" : "ols", k);
    panel.candidate_names.emplace_back(buf);
  }

  for (int k = 1; k <= p; ++k) {
    for (int i = fs; i < n; ++i) {
      double forecast;
      if (spec.kind == ScenarioKind::kLinReg) {
        Eigen::MatrixXd a(i, k + 1);
        Eigen::VectorXd b(i);
        for (int r = 0; r < i; ++r) {
          a(r, 0) = 1.0;
          for (int c = 0; c < k; ++c) a(r, c + 1) = data.x.at(r, c);
          b(r) = data.y[r];
        }
        Eigen::RowVectorXd point(k + 1);
        point(0) = 1.0;
        for (int c = 0; c < k; ++c) point(c + 1) = data.x.at(i, c);
        forecast = ols_forecast(a, b, point);
      } else {
        const int first = k;  // first row with all k lags inside the window
        const int train = i - first;
        Eigen::MatrixXd a(train, k + 1);
        Eigen::VectorXd b(train);
        for (int r = 0; r < train; ++r) {
          const int t = first + r;
          a(r, 0) = 1.0;
          for (int lag = 1; lag <= k; ++lag) a(r, lag) = data.y[t - lag];
          b(r) = data.y[t];
        }
        Eigen::RowVectorXd point(k + 1);
        point(0) = 1.0;
        for (int lag = 1; lag <= k; ++lag) point(lag) = data.y[i - lag];
        forecast = ols_forecast(a, b, point);
      }
      panel.forecasts.at(i - fs, k - 1) = forecast;
    }
  }
  return panel;
}

ReplicateResult run_replicate(const ForecastPanel& panel,
                              const ScenarioSpec& spec,
                              const std::vector<MethodSpec>& methods) {
  panel.validate();
  if (panel.true_means.empty()) {
    throw std::invalid_argument("run_replicate needs true conditional means");
  }
  const std::size_t periods = panel.periods();
  const std::size_t window = static_cast<std::size_t>(spec.eval_window);
  if (window > periods) {
    throw std::invalid_argument("eval window longer than the panel");
  }
  const Matrix preds = run_methods_over_panel(panel, methods);
  const std::size_t start = periods - window;

  ReplicateResult result;
  result.asee_by_method.assign(methods.size(), 0.0);
  for (std::size_t m = 0; m < methods.size(); ++m) {
    double acc = 0.0;
    for (std::size_t i = start; i < periods; ++i) {
      const double d = panel.true_means[i] - preds.at(i, m);
      acc += d * d;
    }
    result.asee_by_method[m] = acc / static_cast<double>(window);
  }
  result.candidate_asee.assign(panel.candidates(), 0.0);
  for (std::size_t j = 0; j < panel.candidates(); ++j) {
    double acc = 0.0;
    for (std::size_t i = start; i < periods; ++i) {
      const double d = panel.true_means[i] - panel.forecasts.at(i, j);
      acc += d * d;
    }
    result.candidate_asee[j] = acc / static_cast<double>(window);
  }
  result.true_means_eval.assign(panel.true_means.begin() + start,
                                panel.true_means.end());
  return result;
}

namespace {

std::size_t ensure_benchmark(std::vector<MethodSpec>& methods) {
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (methods[i].kind == MethodSpec::Kind::kAfter &&
        methods[i].after.method == AfterMethod::kL1) {
      return i;
    }
  }
  methods.push_back(parse_method("l1"));
  return methods.size() - 1;
}

std::vector<double> experiment_cell(const ScenarioSpec& spec,
                                    const ScenarioDraw& draw,
                                    const std::vector<MethodSpec>& methods,
                                    int d, int r) {
  RngState rng(replicate_seed(spec.seed, d, r));
  SimulatedDataset data =
      spec.kind == ScenarioKind::kLinReg
          ? gen_linreg(spec, draw.coefficients, rng)
          : gen_ar(spec, draw.coefficients, rng);
  const ForecastPanel panel = make_candidates(data, spec);
  return run_replicate(panel, spec, methods).asee_by_method;
}

ExperimentResult reduce_cells(const ScenarioSpec& spec,
                              const std::vector<MethodSpec>& methods,
                              std::size_t bench,
                              const std::vector<std::vector<double>>& cells) {
  const int d_count = spec.n_beta_draws;
  const int r_count = spec.n_replicates;
  const std::size_t m_count = methods.size();

  ExperimentResult result;
  result.spec = spec;
  result.benchmark_index = bench;
  for (const auto& m : methods) result.methods.push_back(m.label);
  result.draw_ratios = Matrix(d_count, m_count);
  for (int d = 0; d < d_count; ++d) {
    std::vector<double> mean_asee(m_count, 0.0);
    for (int r = 0; r < r_count; ++r) {
      const auto& cell = cells[static_cast<std::size_t>(d) * r_count + r];
      for (std::size_t m = 0; m < m_count; ++m) mean_asee[m] += cell[m];
    }
    for (std::size_t m = 0; m < m_count; ++m) {
      mean_asee[m] /= static_cast<double>(r_count);
    }
    for (std::size_t m = 0; m < m_count; ++m) {
      result.draw_ratios.at(d, m) = mean_asee[m] / mean_asee[bench];
    }
  }
  result.mean_ratio.assign(m_count, 0.0);
  result.se_ratio.assign(m_count, 0.0);
  for (std::size_t m = 0; m < m_count; ++m) {
    double mean = 0.0;
    for (int d = 0; d < d_count; ++d) mean += result.draw_ratios.at(d, m);
    mean /= static_cast<double>(d_count);
    result.mean_ratio[m] = mean;
    if (d_count > 1) {
      double ss = 0.0;
      for (int d = 0; d < d_count; ++d) {
        const double dev = result.draw_ratios.at(d, m) - mean;
        ss += dev * dev;
      }
      result.se_ratio[m] = std::sqrt(ss / static_cast<double>(d_count - 1) /
                                     static_cast<double>(d_count));
    }
  }
  return result;
}

}  // namespace

ExperimentResult run_experiment_reference(
    const ScenarioSpec& spec, const std::vector<MethodSpec>& methods_in) {
  spec.validate();
  std::vector<MethodSpec> methods = methods_in;
  const std::size_t bench = ensure_benchmark(methods);
  const std::vector<ScenarioDraw> draws = make_draws(spec);
  std::vector<std::vector<double>> cells(
      static_cast<std::size_t>(spec.n_beta_draws) * spec.n_replicates);
  for (int d = 0; d < spec.n_beta_draws; ++d) {
    for (int r = 0; r < spec.n_replicates; ++r) {
      cells[static_cast<std::size_t>(d) * spec.n_replicates + r] =
          experiment_cell(spec, draws[d], methods, d, r);
    }
  }
  return reduce_cells(spec, methods, bench, cells);
}

ExperimentResult run_experiment(const ScenarioSpec& spec,
                                const std::vector<MethodSpec>& methods_in,
                                int jobs) {
  spec.validate();
  std::vector<MethodSpec> methods = methods_in;
  const std::size_t bench = ensure_benchmark(methods);
  const std::vector<ScenarioDraw> draws = make_draws(spec);
  const int d_count = spec.n_beta_draws;
  const int r_count = spec.n_replicates;
  std::vector<std::vector<double>> cells(
      static_cast<std::size_t>(d_count) * r_count);

  std::exception_ptr error;
  std::mutex error_mutex;
#ifdef _OPENMP
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for collapse(2) schedule(dynamic) num_threads(threads)
#else
  (void)jobs;
#endif
  for (int d = 0; d < d_count; ++d) {
    for (int r = 0; r < r_count; ++r) {
      try {
        cells[static_cast<std::size_t>(d) * r_count + r] =
            experiment_cell(spec, draws[d], methods, d, r);
      } catch (...) {
        const std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return reduce_cells(spec, methods, bench, cells);
}

namespace {

const char* kind_name(ScenarioKind kind) {
  return kind == ScenarioKind::kLinReg ? "linreg" : "ar";
}

}  // namespace

void write_ratio_csv(std::ostream& os, const ExperimentResult& result) {
  os << "method,mean_ratio,se,kind,p,p0,noise,n,fit_start,combine_after,"
        "eval_window,n_draws,n_replicates,seed\n";
  const auto& s = result.spec;
  char num[64];
  for (std::size_t m = 0; m < result.methods.size(); ++m) {
    os << result.methods[m] << ",";
    std::snprintf(num, sizeof(num), "%.6f", result.mean_ratio[m]);
    os << num << ",";
    std::snprintf(num, sizeof(num), "%.6f", result.se_ratio[m]);
    os << num << "," << kind_name(s.kind) << "," << s.p << ",";
    if (s.p0) {
      os << *s.p0;
    } else {
      os << "uniform";
    }
    os << "," << s.noise.label() << "," << s.n << "," << s.fit_start << ","
       << s.combine_after << "," << s.eval_window << "," << s.n_beta_draws
       << "," << s.n_replicates << "," << s.seed << "\n";
  }
}

std::string format_ratio_table(const ExperimentResult& result) {
  std::ostringstream os;
  const auto& s = result.spec;
  os << "scenario " << kind_name(s.kind) << "  p=" << s.p << "  p0=";
  if (s.p0) {
    os << *s.p0;
  } else {
    os << "uniform";
  }
  os << "  noise=" << s.noise.label() << "  draws=" << s.n_beta_draws
     << "  replicates=" << s.n_replicates << "  seed=" << s.seed << "\n";
  os << "ratios of mean squared estimation error relative to "
     << result.methods[result.benchmark_index] << "\n\n";
  char line[128];
  std::snprintf(line, sizeof(line), "%-8s %12s %10s\n", "method",
                "mean_ratio", "se");
  os << line;
  for (std::size_t m = 0; m < result.methods.size(); ++m) {
    std::snprintf(line, sizeof(line), "%-8s %12.4f %10.4f\n",
                  result.methods[m].c_str(), result.mean_ratio[m],
                  result.se_ratio[m]);
    os << line;
  }
  return os.str();
}

}  // namespace aftercast
