#include "aftercast/combiners.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace aftercast {

namespace {

std::vector<double> uniform_weights(std::size_t j_count) {
  return std::vector<double>(j_count, 1.0 / static_cast<double>(j_count));
}

class SaCombiner : public Combiner {
 public:
  explicit SaCombiner(std::string label) : Combiner(std::move(label)) {}
  double predict(std::span<const double> f) override {
    return simple_average(f);
  }
  void observe(std::span<const double>, double) override {}
  std::optional<std::vector<double>> next_weights(
      std::span<const double> f) override {
    return uniform_weights(f.size());
  }
};

class MdCombiner : public Combiner {
 public:
  explicit MdCombiner(std::string label) : Combiner(std::move(label)) {}
  double predict(std::span<const double> f) override {
    return median_combine(f);
  }
  void observe(std::span<const double>, double) override {}
  std::optional<std::vector<double>> next_weights(
      std::span<const double> f) override {
    // selector weights on the central order statistic(s)
    std::vector<std::size_t> order(f.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    std::vector<double> w(f.size(), 0.0);
    if (f.size() % 2 == 1) {
      w[order[f.size() / 2]] = 1.0;
    } else {
      w[order[f.size() / 2 - 1]] = 0.5;
      w[order[f.size() / 2]] = 0.5;
    }
    return w;
  }
};

class TmCombiner : public Combiner {
 public:
  explicit TmCombiner(std::string label) : Combiner(std::move(label)) {}
  double predict(std::span<const double> f) override {
    return trimmed_mean(f);
  }
  void observe(std::span<const double>, double) override {}
  std::optional<std::vector<double>> next_weights(
      std::span<const double> f) override {
    if (f.size() < 3) return uniform_weights(f.size());
    std::vector<std::size_t> order(f.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    std::vector<double> w(f.size(), 1.0 / static_cast<double>(f.size() - 2));
    w[order.front()] = 0.0;
    w[order.back()] = 0.0;
    return w;
  }
};

class BgCombiner : public Combiner {
 public:
  BgCombiner(std::string label, std::size_t j_count, double rho)
      : Combiner(std::move(label)), rho_(rho), sq_errors_(j_count) {}
  double predict(std::span<const double> f) override {
    const auto w = next_weights(f);
    return std::inner_product(w->begin(), w->end(), f.begin(), 0.0);
  }
  void observe(std::span<const double> f, double y) override {
    for (std::size_t j = 0; j < f.size(); ++j) {
      const double e = y - f[j];
      sq_errors_[j].push_back(e * e);
    }
  }
  std::optional<std::vector<double>> next_weights(
      std::span<const double> f) override {
    if (auto w = bg_weights(sq_errors_, rho_)) return w;
    return uniform_weights(f.size());
  }

 private:
  double rho_;
  std::vector<std::vector<double>> sq_errors_;
};

class LrCombiner : public Combiner {
 public:
  LrCombiner(std::string label, bool intercept)
      : Combiner(std::move(label)), intercept_(intercept) {}
  double predict(std::span<const double> f) override {
    if (auto pred = lr_combine(history_, outcomes_, f, intercept_)) {
      return *pred;
    }
    return simple_average(f);
  }
  void observe(std::span<const double> f, double y) override {
    history_.append_row(f);
    outcomes_.push_back(y);
  }

 private:
  bool intercept_;
  Matrix history_;
  std::vector<double> outcomes_;
};

class ClrCombiner : public Combiner {
 public:
  explicit ClrCombiner(std::string label) : Combiner(std::move(label)) {}
  double predict(std::span<const double> f) override {
    const auto w = next_weights(f);
    return std::inner_product(w->begin(), w->end(), f.begin(), 0.0);
  }
  void observe(std::span<const double> f, double y) override {
    history_.append_row(f);
    outcomes_.push_back(y);
  }
  std::optional<std::vector<double>> next_weights(
      std::span<const double> f) override {
    if (history_.rows == 0) return uniform_weights(f.size());
    return clr_weights(history_, outcomes_);
  }

 private:
  Matrix history_;
  std::vector<double> outcomes_;
};

class AfterCombiner : public Combiner {
 public:
  AfterCombiner(std::string label, std::size_t j_count,
                const AfterConfig& cfg)
      : Combiner(std::move(label)), state_(j_count, cfg) {}
  double predict(std::span<const double> f) override {
    const std::vector<double> w = state_.weights();
    return combine(w, f);
  }
  void observe(std::span<const double> f, double y) override {
    state_.absorb(f, y);
  }
  std::optional<std::vector<double>> next_weights(
      std::span<const double>) override {
    return state_.weights();
  }
  std::optional<double> density_at(std::span<const double> f,
                                   double y) override {
    return state_.density_estimate(f, y);
  }
  const AfterState& state() const { return state_; }

 private:
  AfterState state_;
};

}  // namespace

std::vector<std::string> builtin_method_names() {
  return {"sa", "md", "tm", "bg", "bg_<rho>", "lr", "clr",
          "l2", "l1", "t",  "g"};
}

MethodSpec parse_method(const std::string& raw) {
  std::string name = raw;
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  MethodSpec spec;
  if (name == "sa") {
    spec = {"SA", MethodSpec::Kind::kSa, 1.0, true, {}};
  } else if (name == "md") {
    spec = {"MD", MethodSpec::Kind::kMd, 1.0, true, {}};
  } else if (name == "tm") {
    spec = {"TM", MethodSpec::Kind::kTm, 1.0, true, {}};
  } else if (name == "bg") {
    spec = {"BG", MethodSpec::Kind::kBg, 1.0, true, {}};
  } else if (name.rfind("bg_", 0) == 0) {
    double rho = 0.0;
    try {
      rho = std::stod(name.substr(3));
    } catch (const std::exception&) {
      rho = 0.0;
    }
    if (!(rho > 0.0) || rho > 1.0) {
      throw std::invalid_argument("bg discount factor must be in (0, 1]: " +
                                  raw);
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "BG_%g", rho);
    spec = {buf, MethodSpec::Kind::kBg, rho, true, {}};
  } else if (name == "lr") {
    spec = {"LR", MethodSpec::Kind::kLr, 1.0, true, {}};
  } else if (name == "clr") {
    spec = {"CLR", MethodSpec::Kind::kClr, 1.0, true, {}};
  } else if (name == "l2" || name == "a2") {
    spec = {"A2", MethodSpec::Kind::kAfter, 1.0, true, {}};
    spec.after.method = AfterMethod::kL2;
  } else if (name == "l1" || name == "a1") {
    spec = {"A1", MethodSpec::Kind::kAfter, 1.0, true, {}};
    spec.after.method = AfterMethod::kL1;
  } else if (name == "t" || name == "at") {
    spec = {"At", MethodSpec::Kind::kAfter, 1.0, true, {}};
    spec.after.method = AfterMethod::kT;
  } else if (name == "g" || name == "ag") {
    spec = {"Ag", MethodSpec::Kind::kAfter, 1.0, true, {}};
    spec.after.method = AfterMethod::kG;
  } else {
    std::ostringstream msg;
    msg << "unknown method '" << raw << "'; valid names:";
    for (const auto& n : builtin_method_names()) msg << " " << n;
    throw std::invalid_argument(msg.str());
  }
  return spec;
}

std::unique_ptr<Combiner> make_combiner(const MethodSpec& spec,
                                        std::size_t num_candidates) {
  switch (spec.kind) {
    case MethodSpec::Kind::kSa:
      return std::make_unique<SaCombiner>(spec.label);
    case MethodSpec::Kind::kMd:
      return std::make_unique<MdCombiner>(spec.label);
    case MethodSpec::Kind::kTm:
      return std::make_unique<TmCombiner>(spec.label);
    case MethodSpec::Kind::kBg:
      return std::make_unique<BgCombiner>(spec.label, num_candidates,
                                          spec.rho);
    case MethodSpec::Kind::kLr:
      return std::make_unique<LrCombiner>(spec.label, spec.lr_intercept);
    case MethodSpec::Kind::kClr:
      return std::make_unique<ClrCombiner>(spec.label);
    case MethodSpec::Kind::kAfter:
      return std::make_unique<AfterCombiner>(spec.label, num_candidates,
                                             spec.after);
  }
  throw std::logic_error("unreachable method kind");
}

CombinerTrace run_trace(const ForecastPanel& panel, const MethodSpec& spec) {
  panel.validate();
  auto combiner = make_combiner(spec, panel.candidates());
  CombinerTrace trace;
  trace.weights = Matrix(panel.periods(), panel.candidates());
  for (std::size_t i = 0; i < panel.periods(); ++i) {
    const auto row = panel.forecasts.row(i);
    if (auto w = combiner->next_weights(row)) {
      trace.has_weights = true;
      for (std::size_t j = 0; j < panel.candidates(); ++j) {
        trace.weights.at(i, j) = (*w)[j];
      }
    }
    trace.combined.push_back(combiner->predict(row));
    if (auto d = combiner->density_at(row, panel.outcomes[i])) {
      trace.has_density = true;
      trace.density.push_back(*d);
    } else {
      trace.density.push_back(0.0);
    }
    combiner->observe(row, panel.outcomes[i]);
  }
  return trace;
}

Matrix run_methods_over_panel(const ForecastPanel& panel,
                              const std::vector<MethodSpec>& methods) {
  panel.validate();
  Matrix preds(panel.periods(), methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    auto combiner = make_combiner(methods[m], panel.candidates());
    for (std::size_t i = 0; i < panel.periods(); ++i) {
      const auto row = panel.forecasts.row(i);
      preds.at(i, m) = combiner->predict(row);
      combiner->observe(row, panel.outcomes[i]);
    }
  }
  return preds;
}

}  // namespace aftercast
