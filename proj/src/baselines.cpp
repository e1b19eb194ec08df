#include "aftercast/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace aftercast {

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = m.at(r, c);
  }
  return out;
}

Eigen::VectorXd to_eigen(std::span<const double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = v[i];
  }
  return out;
}

}  // namespace

double simple_average(std::span<const double> forecasts) {
  if (forecasts.empty()) {
    throw std::invalid_argument("simple_average: empty forecast pool");
  }
  const double sum = std::accumulate(forecasts.begin(), forecasts.end(), 0.0);
  return sum / static_cast<double>(forecasts.size());
}

double median_combine(std::span<const double> forecasts) {
  if (forecasts.empty()) {
    throw std::invalid_argument("median_combine: empty forecast pool");
  }
  std::vector<double> v(forecasts.begin(), forecasts.end());
  const std::size_t hi = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + hi, v.end());
  double med = v[hi];
  if (v.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(v.begin(), v.begin() + hi));
  }
  return med;
}

double trimmed_mean(std::span<const double> forecasts) {
  if (forecasts.size() < 3) return simple_average(forecasts);
  const auto [lo, hi] =
      std::minmax_element(forecasts.begin(), forecasts.end());
  const double sum = std::accumulate(forecasts.begin(), forecasts.end(), 0.0);
  return (sum - *lo - *hi) / static_cast<double>(forecasts.size() - 2);
}

std::optional<std::vector<double>> bg_weights(
    const std::vector<std::vector<double>>& squared_errors, double rho) {
  if (!(rho > 0.0) || rho > 1.0) {
    throw std::invalid_argument("bg discount factor must be in (0, 1]");
  }
  if (squared_errors.empty()) {
    throw std::invalid_argument("bg_weights: empty candidate pool");
  }
  const std::size_t j_count = squared_errors.size();
  std::vector<double> v(j_count, 0.0);
  for (std::size_t j = 0; j < j_count; ++j) {
    const auto& hist = squared_errors[j];
    if (hist.empty()) return std::nullopt;
    double num = 0.0;
    double den = 0.0;
    double disc = 1.0;  // rho^(T - t), latest error first
    for (auto it = hist.rbegin(); it != hist.rend(); ++it) {
      num += disc * *it;
      den += disc;
      disc *= rho;
    }
    v[j] = num / den;
  }
  const double vmax = *std::max_element(v.begin(), v.end());
  const double floor = vmax > 0.0 ? 1e-12 * vmax : 1e-12;
  double sum = 0.0;
  std::vector<double> w(j_count);
  for (std::size_t j = 0; j < j_count; ++j) {
    w[j] = 1.0 / std::max(v[j], floor);
    sum += w[j];
  }
  for (double& x : w) x /= sum;
  return w;
}

std::optional<double> lr_combine(const Matrix& past_forecasts,
                                 std::span<const double> past_outcomes,
                                 std::span<const double> forecasts,
                                 bool intercept) {
  const std::size_t j_count = past_forecasts.cols;
  if (forecasts.size() != j_count) {
    throw std::invalid_argument("lr_combine forecast length mismatch");
  }
  if (past_outcomes.size() != past_forecasts.rows) {
    throw std::invalid_argument("lr_combine history shape mismatch");
  }
  if (past_forecasts.rows < j_count + 2) return std::nullopt;

  const std::size_t cols = j_count + (intercept ? 1 : 0);
  Eigen::MatrixXd a(past_forecasts.rows, cols);
  for (std::size_t r = 0; r < past_forecasts.rows; ++r) {
    std::size_t c = 0;
    if (intercept) a(r, c++) = 1.0;
    for (std::size_t j = 0; j < j_count; ++j) {
      a(r, c++) = past_forecasts.at(r, j);
    }
  }
  const Eigen::VectorXd beta =
      a.completeOrthogonalDecomposition().solve(to_eigen(past_outcomes));
  double pred = intercept ? beta(0) : 0.0;
  const std::size_t offset = intercept ? 1 : 0;
  for (std::size_t j = 0; j < j_count; ++j) {
    pred += beta(static_cast<Eigen::Index>(offset + j)) * forecasts[j];
  }
  return pred;
}

std::vector<double> clr_weights(const Matrix& past_forecasts,
                                std::span<const double> past_outcomes) {
  const std::size_t j_count = past_forecasts.cols;
  if (j_count == 0) {
    throw std::invalid_argument("clr_weights: empty candidate pool");
  }
  if (past_outcomes.size() != past_forecasts.rows ||
      past_forecasts.rows == 0) {
    throw std::invalid_argument("clr_weights needs at least one history row");
  }
  if (j_count == 1) return {1.0};

  const Eigen::MatrixXd f = to_eigen(past_forecasts);
  const Eigen::VectorXd y = to_eigen(past_outcomes);
  const Eigen::MatrixXd gram = f.transpose() * f;
  const Eigen::VectorXd b = f.transpose() * y;
  const Eigen::Index n = static_cast<Eigen::Index>(j_count);

  std::vector<bool> active(j_count, true);
  Eigen::VectorXd x =
      Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(j_count));

  const int max_outer = 50 * static_cast<int>(j_count) + 50;
  for (int outer = 0; outer < max_outer; ++outer) {
    // solve min |y - Fw|^2 s.t. sum(w) = 1 on the active set, allowing
    // negative entries; shrink the set until the solution is feasible
    for (int inner = 0; inner < max_outer; ++inner) {
      std::vector<std::size_t> idx;
      for (std::size_t j = 0; j < j_count; ++j) {
        if (active[j]) idx.push_back(j);
      }
      const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
      Eigen::VectorXd rhs(m + 1);
      for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index c = 0; c < m; ++c) {
          kkt(a, c) = 2.0 * gram(static_cast<Eigen::Index>(idx[a]),
                                 static_cast<Eigen::Index>(idx[c]));
        }
        kkt(a, m) = 1.0;
        kkt(m, a) = 1.0;
        rhs(a) = 2.0 * b(static_cast<Eigen::Index>(idx[a]));
      }
      rhs(m) = 1.0;
      // minimum-norm solve keeps tied (duplicate) candidates symmetric
      const Eigen::VectorXd sol =
          kkt.completeOrthogonalDecomposition().solve(rhs);

      bool feasible = true;
      for (Eigen::Index a = 0; a < m; ++a) {
        if (sol(a) < -1e-12) feasible = false;
      }
      if (feasible) {
        x.setZero();
        double sum = 0.0;
        for (Eigen::Index a = 0; a < m; ++a) {
          const double v = std::max(sol(a), 0.0);
          x(static_cast<Eigen::Index>(idx[a])) = v;
          sum += v;
        }
        x /= sum;
        break;
      }
      // step from the current feasible point toward sol until the first
      // coordinate hits zero, then deactivate it
      double alpha = 1.0;
      std::size_t drop = idx[0];
      for (Eigen::Index a = 0; a < m; ++a) {
        const std::size_t j = idx[a];
        if (sol(a) < x(static_cast<Eigen::Index>(j))) {
          const double xa = x(static_cast<Eigen::Index>(j));
          const double step = xa / (xa - sol(a));
          if (sol(a) < 0.0 && step < alpha) {
            alpha = step;
            drop = j;
          }
        }
      }
      Eigen::VectorXd target = Eigen::VectorXd::Zero(n);
      for (Eigen::Index a = 0; a < m; ++a) {
        target(static_cast<Eigen::Index>(idx[a])) = sol(a);
      }
      x += alpha * (target - x);
      x(static_cast<Eigen::Index>(drop)) = 0.0;
      active[drop] = false;
      if (std::count(active.begin(), active.end(), true) == 1) {
        // only one candidate left: it takes everything
        x.setZero();
        for (std::size_t j = 0; j < j_count; ++j) {
          if (active[j]) x(static_cast<Eigen::Index>(j)) = 1.0;
        }
        break;
      }
    }

    // dual feasibility: inactive gradients must not undercut the active
    // multiplier
    const Eigen::VectorXd g = 2.0 * (gram * x - b);
    double mu = 0.0;
    int n_active = 0;
    for (std::size_t j = 0; j < j_count; ++j) {
      if (active[j]) {
        mu += g(static_cast<Eigen::Index>(j));
        ++n_active;
      }
    }
    mu /= static_cast<double>(n_active);
    const double tol = 1e-10 * (1.0 + g.cwiseAbs().maxCoeff());
    double worst = 0.0;
    std::size_t worst_j = j_count;
    for (std::size_t j = 0; j < j_count; ++j) {
      if (active[j]) continue;
      const double gap = mu - g(static_cast<Eigen::Index>(j));
      if (gap > tol && gap > worst) {
        worst = gap;
        worst_j = j;
      }
    }
    if (worst_j == j_count) break;
    active[worst_j] = true;
  }

  std::vector<double> out(j_count);
  for (std::size_t j = 0; j < j_count; ++j) {
    out[j] = x(static_cast<Eigen::Index>(j));
  }
  return out;
}

double clr_combine(const Matrix& past_forecasts,
                   std::span<const double> past_outcomes,
                   std::span<const double> forecasts) {
  const std::vector<double> w = clr_weights(past_forecasts, past_outcomes);
  if (w.size() != forecasts.size()) {
    throw std::invalid_argument("clr_combine forecast length mismatch");
  }
  return std::inner_product(w.begin(), w.end(), forecasts.begin(), 0.0);
}

}  // namespace aftercast
