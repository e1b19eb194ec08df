#include "aftercast/after_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace aftercast {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

void check_weight_sum(const std::vector<double>& w, const char* what) {
  double sum = 0.0;
  for (double v : w) {
    if (v < 0.0 || !std::isfinite(v)) {
      throw std::invalid_argument(std::string(what) +
                                  " must be nonnegative and finite");
    }
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string(what) + " must sum to 1");
  }
}

}  // namespace

const char* after_method_name(AfterMethod m) {
  switch (m) {
    case AfterMethod::kL2: return "l2";
    case AfterMethod::kL1: return "l1";
    case AfterMethod::kT: return "t";
    case AfterMethod::kG: return "g";
  }
  return "unknown";
}

AfterMethod after_method_from_name(const std::string& name) {
  if (name == "l2") return AfterMethod::kL2;
  if (name == "l1") return AfterMethod::kL1;
  if (name == "t") return AfterMethod::kT;
  if (name == "g") return AfterMethod::kG;
  throw std::invalid_argument("unknown AFTER method: " + name);
}

void AfterConfig::validate(std::size_t num_candidates) const {
  if (num_candidates == 0) {
    throw std::invalid_argument("candidate pool is empty");
  }
  if (method == AfterMethod::kT || method == AfterMethod::kG) {
    if (omega.empty()) {
      throw std::invalid_argument("omega must be nonempty for t/g methods");
    }
    for (std::size_t k = 0; k < omega.size(); ++k) {
      if (!(omega[k] > 0.0)) {
        throw std::invalid_argument("omega entries must be positive");
      }
      if (k > 0 && !(omega[k] > omega[k - 1])) {
        throw std::invalid_argument("omega must be strictly increasing");
      }
    }
  }
  if (c1 < 0.0 || c2 < 0.0) {
    throw std::invalid_argument("c1 and c2 must be nonnegative");
  }
  if (fixed_scale && !(*fixed_scale > 0.0)) {
    throw std::invalid_argument("fixed_scale must be positive");
  }
  if (!init_normal_weights.empty()) {
    if (init_normal_weights.size() != num_candidates) {
      throw std::invalid_argument("init_normal_weights size mismatch");
    }
    check_weight_sum(init_normal_weights, "normal initial weights");
  }
  if (!init_de_weights.empty()) {
    if (init_de_weights.size() != num_candidates) {
      throw std::invalid_argument("init_de_weights size mismatch");
    }
    check_weight_sum(init_de_weights, "double-exponential initial weights");
  }
  if (!init_t_weights.empty()) {
    if (init_t_weights.size() != omega.size()) {
      throw std::invalid_argument("init_t_weights dof-count mismatch");
    }
    std::vector<double> flat;
    for (const auto& per_dof : init_t_weights) {
      if (per_dof.size() != num_candidates) {
        throw std::invalid_argument("init_t_weights candidate-count mismatch");
      }
      flat.insert(flat.end(), per_dof.begin(), per_dof.end());
    }
    check_weight_sum(flat, "t initial weights");
  }
}

AfterState::AfterState(std::size_t num_candidates, AfterConfig config)
    : num_candidates_(num_candidates), config_(std::move(config)) {
  config_.validate(num_candidates_);
  build_streams();
}

void AfterState::build_streams() {
  const std::size_t j_count = num_candidates_;
  const std::size_t k_count = config_.omega.size();

  auto log_weights = [&](const std::vector<double>& custom, double uniform) {
    std::vector<double> lw(j_count);
    for (std::size_t j = 0; j < j_count; ++j) {
      lw[j] = safe_log(custom.empty() ? uniform : custom[j]);
    }
    return lw;
  };

  auto add_normal = [&](double log_coeff) {
    Stream s;
    s.family = ErrorFamily::kNormal;
    s.log_coeff = log_coeff;
    s.log_init = log_weights(config_.init_normal_weights,
                             1.0 / static_cast<double>(j_count));
    s.acc.assign(j_count, 0.0);
    s.scales.assign(j_count, ScaleEstimator::normal(config_.scale_options));
    streams_.push_back(std::move(s));
  };
  auto add_de = [&](double log_coeff) {
    Stream s;
    s.family = ErrorFamily::kDoubleExponential;
    s.log_coeff = log_coeff;
    s.log_init = log_weights(config_.init_de_weights,
                             1.0 / static_cast<double>(j_count));
    s.acc.assign(j_count, 0.0);
    s.scales.assign(j_count,
                    ScaleEstimator::double_exponential(config_.scale_options));
    streams_.push_back(std::move(s));
  };
  auto add_t = [&](double log_coeff) {
    for (std::size_t k = 0; k < k_count; ++k) {
      Stream s;
      s.family = ErrorFamily::kScaledStudentT;
      s.dof = config_.omega[k];
      s.log_coeff = log_coeff;
      const double uniform =
          1.0 / static_cast<double>(k_count * j_count);
      std::vector<double> custom;
      if (!config_.init_t_weights.empty()) custom = config_.init_t_weights[k];
      s.log_init = log_weights(custom, uniform);
      s.acc.assign(j_count, 0.0);
      s.scales.assign(j_count, ScaleEstimator::scaled_student_t(
                                   s.dof, config_.scale_options));
      streams_.push_back(std::move(s));
    }
  };

  switch (config_.method) {
    case AfterMethod::kL2:
      add_normal(0.0);
      break;
    case AfterMethod::kL1:
      add_de(0.0);
      break;
    case AfterMethod::kT:
      add_t(0.0);
      break;
    case AfterMethod::kG:
      add_normal(0.0);
      add_de(safe_log(config_.c1));
      add_t(safe_log(config_.c2));
      break;
  }
}

std::vector<double> AfterState::weights() const {
  std::vector<double> log_score(num_candidates_, kNegInf);
  for (const Stream& s : streams_) {
    if (s.log_coeff == kNegInf) continue;
    for (std::size_t j = 0; j < num_candidates_; ++j) {
      log_score[j] =
          log_add(log_score[j], s.log_coeff + s.log_init[j] + s.acc[j]);
    }
  }
  const double top = *std::max_element(log_score.begin(), log_score.end());
  if (top == kNegInf) {
    throw NumericError("AFTER weights degenerate: all scores are zero");
  }
  std::vector<double> w(num_candidates_);
  double sum = 0.0;
  for (std::size_t j = 0; j < num_candidates_; ++j) {
    w[j] = std::exp(log_score[j] - top);
    sum += w[j];
  }
  for (double& v : w) v /= sum;
  return w;
}

double AfterState::stream_scale(const Stream& s, std::size_t j) const {
  if (config_.fixed_scale) return *config_.fixed_scale;
  if (auto est = s.scales[j].estimate()) return *est;
  return 1.0;  // neutral scale while warming up
}

void AfterState::absorb(std::span<const double> forecasts, double outcome) {
  if (forecasts.size() != num_candidates_) {
    throw std::invalid_argument("forecast vector has wrong length");
  }
  if (!std::isfinite(outcome)) {
    throw std::domain_error("outcome must be finite");
  }
  for (double f : forecasts) {
    if (!std::isfinite(f)) {
      throw std::domain_error("forecasts must be finite");
    }
  }
  for (Stream& s : streams_) {
    for (std::size_t j = 0; j < num_candidates_; ++j) {
      const double e = outcome - forecasts[j];
      const bool have_scale = config_.fixed_scale || s.scales[j].ready();
      if (have_scale) {
        DistributionSpec spec{s.family, stream_scale(s, j), s.dof};
        s.acc[j] += log_pdf(spec, e);
      }
      s.scales[j].push_error(e);
    }
  }
  ++period_;
}

double AfterState::density_estimate(std::span<const double> forecasts,
                                    double y) const {
  if (forecasts.size() != num_candidates_) {
    throw std::invalid_argument("forecast vector has wrong length");
  }
  if (!std::isfinite(y)) throw std::domain_error("y must be finite");

  // stream-level posterior weights, normalized across every (stream, j)
  std::vector<double> terms;
  terms.reserve(streams_.size() * num_candidates_);
  double top = kNegInf;
  for (const Stream& s : streams_) {
    for (std::size_t j = 0; j < num_candidates_; ++j) {
      const double t = s.log_coeff + s.log_init[j] + s.acc[j];
      terms.push_back(t);
      top = std::max(top, t);
    }
  }
  double denom = 0.0;
  for (double t : terms) {
    if (t != kNegInf) denom += std::exp(t - top);
  }
  double density = 0.0;
  std::size_t idx = 0;
  for (const Stream& s : streams_) {
    for (std::size_t j = 0; j < num_candidates_; ++j, ++idx) {
      if (terms[idx] == kNegInf) continue;
      const double w = std::exp(terms[idx] - top) / denom;
      DistributionSpec spec{s.family, stream_scale(s, j), s.dof};
      density += w * pdf(spec, forecasts[j] - y);
    }
  }
  return density;
}

double combine(std::span<const double> weights,
               std::span<const double> forecasts) {
  if (weights.size() != forecasts.size()) {
    throw std::invalid_argument("weight/forecast length mismatch");
  }
  return std::inner_product(weights.begin(), weights.end(), forecasts.begin(),
                            0.0);
}

nlohmann::json AfterState::to_json() const {
  nlohmann::json cfg{
      {"method", after_method_name(config_.method)},
      {"omega", config_.omega},
      {"c1", config_.c1},
      {"c2", config_.c2},
      {"warmup", config_.scale_options.warmup},
      {"floor_scale", config_.scale_options.floor_scale},
      {"center_normal", config_.scale_options.center_normal},
  };
  if (config_.fixed_scale) cfg["fixed_scale"] = *config_.fixed_scale;
  if (!config_.init_normal_weights.empty()) {
    cfg["init_normal_weights"] = config_.init_normal_weights;
  }
  if (!config_.init_de_weights.empty()) {
    cfg["init_de_weights"] = config_.init_de_weights;
  }
  if (!config_.init_t_weights.empty()) {
    cfg["init_t_weights"] = config_.init_t_weights;
  }

  nlohmann::json streams = nlohmann::json::array();
  for (const Stream& s : streams_) {
    nlohmann::json est = nlohmann::json::array();
    for (const auto& sc : s.scales) est.push_back(sc.to_json());
    streams.push_back(nlohmann::json{{"family", family_name(s.family)},
                                     {"dof", s.dof},
                                     {"acc", s.acc},
                                     {"scales", est}});
  }
  return nlohmann::json{{"format", "aftercast.after_state"},
                        {"version", 1},
                        {"num_candidates", num_candidates_},
                        {"period", period_},
                        {"config", cfg},
                        {"streams", streams}};
}

AfterState AfterState::from_json(const nlohmann::json& j) {
  if (j.at("format").get<std::string>() != "aftercast.after_state" ||
      j.at("version").get<int>() != 1) {
    throw std::invalid_argument("unsupported after-state document");
  }
  const auto& cfg = j.at("config");
  AfterConfig config;
  config.method = after_method_from_name(cfg.at("method").get<std::string>());
  config.omega = cfg.at("omega").get<std::vector<double>>();
  config.c1 = cfg.at("c1").get<double>();
  config.c2 = cfg.at("c2").get<double>();
  config.scale_options.warmup = cfg.at("warmup").get<std::size_t>();
  config.scale_options.floor_scale = cfg.at("floor_scale").get<double>();
  config.scale_options.center_normal = cfg.at("center_normal").get<bool>();
  if (cfg.contains("fixed_scale")) {
    config.fixed_scale = cfg.at("fixed_scale").get<double>();
  }
  if (cfg.contains("init_normal_weights")) {
    config.init_normal_weights =
        cfg.at("init_normal_weights").get<std::vector<double>>();
  }
  if (cfg.contains("init_de_weights")) {
    config.init_de_weights =
        cfg.at("init_de_weights").get<std::vector<double>>();
  }
  if (cfg.contains("init_t_weights")) {
    config.init_t_weights =
        cfg.at("init_t_weights").get<std::vector<std::vector<double>>>();
  }

  AfterState state(j.at("num_candidates").get<std::size_t>(),
                   std::move(config));
  state.period_ = j.at("period").get<std::size_t>();
  const auto& streams = j.at("streams");
  if (streams.size() != state.streams_.size()) {
    throw std::invalid_argument("after-state stream count mismatch");
  }
  for (std::size_t i = 0; i < state.streams_.size(); ++i) {
    Stream& s = state.streams_[i];
    const auto& js = streams[i];
    if (js.at("family").get<std::string>() != family_name(s.family)) {
      throw std::invalid_argument("after-state stream family mismatch");
    }
    s.acc = js.at("acc").get<std::vector<double>>();
    if (s.acc.size() != state.num_candidates_) {
      throw std::invalid_argument("after-state accumulator size mismatch");
    }
    const auto& est = js.at("scales");
    if (est.size() != state.num_candidates_) {
      throw std::invalid_argument("after-state estimator count mismatch");
    }
    s.scales.clear();
    for (const auto& e : est) s.scales.push_back(ScaleEstimator::from_json(e));
  }
  return state;
}

}  // namespace aftercast
