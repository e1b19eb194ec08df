#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aftercast/config.hpp"
#include "aftercast/manifest.hpp"
#include "aftercast/panel_bench.hpp"
#include "aftercast/simulation.hpp"

namespace fs = std::filesystem;
using namespace aftercast;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int resolve_jobs(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("AFTERCAST_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 0;  // all cores
}

std::vector<MethodSpec> parse_methods(const std::vector<std::string>& names) {
  std::vector<MethodSpec> methods;
  for (const auto& raw : names) {
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) methods.push_back(parse_method(item));
    }
  }
  if (methods.empty()) {
    throw std::invalid_argument("method list is empty");
  }
  return methods;
}

std::vector<double> parse_omega(const std::string& text) {
  std::vector<double> omega;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) omega.push_back(std::stod(item));
  }
  if (omega.empty()) {
    throw std::invalid_argument("omega list is empty");
  }
  return omega;
}

struct SimulateArgs {
  std::string config;
  std::string out_dir = ".";
  int jobs = 0;
  std::int64_t seed = -1;
  int draws = 0;
  int replicates = 0;
  std::vector<std::string> methods;
};

int cmd_simulate(const SimulateArgs& args) {
  if (!fs::exists(args.config)) {
    std::cerr << "config file not found: " << args.config << "\n";
    return kExitUsage;
  }
  ScenarioConfig config = scenario_from_config(parse_config_file(args.config));
  if (args.seed >= 0) config.spec.seed = static_cast<std::uint64_t>(args.seed);
  if (args.draws > 0) config.spec.n_beta_draws = args.draws;
  if (args.replicates > 0) config.spec.n_replicates = args.replicates;

  std::vector<std::string> method_names = config.methods;
  if (!args.methods.empty()) method_names = args.methods;
  if (method_names.empty()) {
    method_names = {"a2", "at", "ag", "a1"};
  }
  const std::vector<MethodSpec> methods = parse_methods(method_names);

  config.spec.validate();
  const ExperimentResult result =
      run_experiment(config.spec, methods, resolve_jobs(args.jobs));

  fs::create_directories(args.out_dir);
  const fs::path csv_path = fs::path(args.out_dir) / "ratios.csv";
  const fs::path txt_path = fs::path(args.out_dir) / "ratios.txt";
  {
    std::ofstream csv(csv_path);
    write_ratio_csv(csv, result);
  }
  {
    std::ofstream txt(txt_path);
    txt << format_ratio_table(result);
  }
  std::cout << format_ratio_table(result);

  RunManifest manifest;
  manifest.command = "simulate";
  manifest.config_path = args.config;
  manifest.seed = config.spec.seed;
  manifest.input_hashes[args.config] = content_hash(args.config);
  manifest.params["n_draws"] = std::to_string(config.spec.n_beta_draws);
  manifest.params["n_replicates"] = std::to_string(config.spec.n_replicates);
  for (std::size_t i = 0; i < result.methods.size(); ++i) {
    manifest.params["method." + std::to_string(i)] = result.methods[i];
  }
  manifest.outputs = {csv_path.string(), txt_path.string()};
  manifest.stamp_now();
  manifest.write(fs::path(args.out_dir) / "manifest.json");
  return 0;
}

struct BenchArgs {
  std::string panel;
  std::string out_dir = ".";
  std::vector<std::string> methods;
  std::string screen;
  int warmup = 6;
  int scored = 9;
  int jobs = 0;
};

int cmd_bench(const BenchArgs& args) {
  const std::vector<MethodSpec> methods = parse_methods(args.methods);
  std::vector<PanelRecord> records = load_panel_csv(args.panel);
  if (!args.screen.empty()) {
    if (args.screen != "heavy-tail") {
      throw std::invalid_argument("--screen only supports heavy-tail");
    }
    std::vector<PanelRecord> kept;
    for (auto& rec : records) {
      const auto heavy = heavy_tail_screen(rec);
      if (heavy && *heavy) kept.push_back(std::move(rec));
    }
    records = std::move(kept);
  }
  if (records.empty()) {
    std::cerr << "no series to benchmark\n";
    return kExitData;
  }
  BenchmarkOptions options;
  options.warmup = args.warmup;
  options.scored = args.scored;
  const PanelSummary summary =
      run_panel_benchmark(records, methods, options, resolve_jobs(args.jobs));
  if (summary.series_ids.empty()) {
    for (const auto& w : summary.warnings) std::cerr << w << "\n";
    std::cerr << "no series long enough to score\n";
    return kExitData;
  }

  fs::create_directories(args.out_dir);
  const fs::path csv_path = fs::path(args.out_dir) / "summary.csv";
  {
    std::ofstream csv(csv_path);
    write_summary_csv(csv, summary);
  }
  std::cout << format_summary_table(summary);

  RunManifest manifest;
  manifest.command = "bench";
  manifest.input_hashes[args.panel] = content_hash(args.panel);
  manifest.params["warmup"] = std::to_string(options.warmup);
  manifest.params["scored"] = std::to_string(options.scored);
  manifest.params["screen"] = args.screen.empty() ? "none" : args.screen;
  for (std::size_t i = 0; i < summary.methods.size(); ++i) {
    manifest.params["method." + std::to_string(i)] = summary.methods[i];
  }
  manifest.outputs = {csv_path.string()};
  manifest.stamp_now();
  manifest.write(fs::path(args.out_dir) / "manifest.json");
  return 0;
}

struct CombineArgs {
  std::string panel;
  std::string method;
  std::string out = "trace.csv";
  std::string dump_state;
  std::string omega;
  double c1 = -1.0;
  double c2 = -1.0;
  double rho = -1.0;
};

int cmd_combine(const CombineArgs& args) {
  MethodSpec spec = parse_method(args.method);
  if (!args.omega.empty()) spec.after.omega = parse_omega(args.omega);
  if (args.c1 >= 0.0) spec.after.c1 = args.c1;
  if (args.c2 >= 0.0) spec.after.c2 = args.c2;
  if (args.rho > 0.0) spec.rho = args.rho;

  const std::vector<PanelRecord> records = load_panel_csv(args.panel);
  if (records.size() != 1) {
    std::cerr << "combine expects exactly one series, got " << records.size()
              << "\n";
    return kExitUsage;
  }
  const PanelRecord& rec = records.front();
  const ForecastPanel panel = rec.to_panel();
  const CombinerTrace trace = run_trace(panel, spec);

  std::ofstream out(args.out);
  if (!out) {
    std::cerr << "cannot write " << args.out << "\n";
    return kExitData;
  }
  out << "t,actual,combined";
  if (trace.has_density) out << ",density";
  if (trace.has_weights) {
    for (const auto& name : rec.method_names) out << ",w_" << name;
  }
  out << "\n";
  char num[40];
  for (std::size_t i = 0; i < panel.periods(); ++i) {
    out << (i + 1);
    std::snprintf(num, sizeof(num), ",%.17g", panel.outcomes[i]);
    out << num;
    std::snprintf(num, sizeof(num), ",%.17g", trace.combined[i]);
    out << num;
    if (trace.has_density) {
      std::snprintf(num, sizeof(num), ",%.17g", trace.density[i]);
      out << num;
    }
    if (trace.has_weights) {
      for (std::size_t j = 0; j < panel.candidates(); ++j) {
        std::snprintf(num, sizeof(num), ",%.17g", trace.weights.at(i, j));
        out << num;
      }
    }
    out << "\n";
  }
  out.close();

  if (!args.dump_state.empty() &&
      spec.kind == MethodSpec::Kind::kAfter) {
    // replay to capture the final engine state
    AfterState state(panel.candidates(), spec.after);
    for (std::size_t i = 0; i < panel.periods(); ++i) {
      state.absorb(panel.forecasts.row(i), panel.outcomes[i]);
    }
    std::ofstream dump(args.dump_state);
    dump << state.to_json().dump(2) << "\n";
  }

  RunManifest manifest;
  manifest.command = "combine";
  manifest.input_hashes[args.panel] = content_hash(args.panel);
  manifest.params["method"] = spec.label;
  if (spec.kind == MethodSpec::Kind::kAfter) {
    manifest.params["c1"] = std::to_string(spec.after.c1);
    manifest.params["c2"] = std::to_string(spec.after.c2);
    std::string omega;
    for (double v : spec.after.omega) {
      if (!omega.empty()) omega += ",";
      omega += std::to_string(v);
    }
    manifest.params["omega"] = omega;
  }
  if (spec.kind == MethodSpec::Kind::kBg) {
    manifest.params["rho"] = std::to_string(spec.rho);
  }
  manifest.outputs = {args.out};
  manifest.stamp_now();
  const fs::path manifest_path =
      fs::path(args.out).parent_path() / "manifest.json";
  manifest.write(manifest_path.empty() ? "manifest.json" : manifest_path);
  return 0;
}

struct ScreenArgs {
  std::string panel;
  std::string out;
};

int cmd_screen(const ScreenArgs& args) {
  const std::vector<PanelRecord> records = load_panel_csv(args.panel);
  std::ostringstream csv;
  csv << "series_id,screenable,heavy_tailed,kurtosis,threshold,terms_kept\n";
  for (const auto& rec : records) {
    const auto detail = heavy_tail_screen_detail(rec);
    csv << rec.series_id << ",";
    if (!detail) {
      csv << "0,,,,\n";
      continue;
    }
    char num[96];
    std::snprintf(num, sizeof(num), "1,%d,%.6f,%.6f,%d\n",
                  detail->heavy ? 1 : 0, detail->kurtosis, detail->threshold,
                  detail->terms_kept);
    csv << num;
  }
  if (args.out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream out(args.out);
    out << csv.str();
    RunManifest manifest;
    manifest.command = "screen";
    manifest.input_hashes[args.panel] = content_hash(args.panel);
    manifest.outputs = {args.out};
    manifest.stamp_now();
    const fs::path dir = fs::path(args.out).parent_path();
    manifest.write((dir.empty() ? fs::path(".") : dir) / "manifest.json");
  }
  return 0;
}

struct ReportArgs {
  std::string input;
  std::string out;
};

// Re-render a ratios.csv or summary.csv as an aligned text table.
int cmd_report(const ReportArgs& args) {
  std::ifstream in(args.input);
  if (!in) {
    std::cerr << "cannot open " << args.input << "\n";
    return kExitUsage;
  }
  std::string header;
  if (!std::getline(in, header)) {
    std::cerr << "empty report input\n";
    return kExitData;
  }
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
  }
  std::vector<std::size_t> width(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    width[c] = cols[c].size();
    for (const auto& row : rows) {
      if (c < row.size()) width[c] = std::max(width[c], row[c].size());
    }
  }
  std::ostringstream table;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const std::string& v = c < cells.size() ? cells[c] : "";
      table << v << std::string(width[c] - v.size() + 2, ' ');
    }
    table << "\n";
  };
  emit(cols);
  for (const auto& row : rows) emit(row);
  if (args.out.empty()) {
    std::cout << table.str();
  } else {
    std::ofstream out(args.out);
    out << table.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forecast combination toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "run a simulation scenario and write ratio tables");
  simulate->add_option("--config", sim.config, "scenario config (toml/json)")
      ->required();
  simulate->add_option("--out-dir", sim.out_dir, "output directory");
  simulate->add_option("--jobs", sim.jobs, "worker threads (0 = all)");
  simulate->add_option("--seed", sim.seed, "override the scenario seed");
  simulate->add_option("--draws", sim.draws, "override coefficient draws");
  simulate->add_option("--replicates", sim.replicates,
                       "override replicates per draw");
  simulate->add_option("--methods", sim.methods,
                       "comma-separated method list");

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "benchmark combination methods over a forecast panel");
  bench_cmd->add_option("--panel", bench.panel, "panel csv file")->required();
  bench_cmd->add_option("--methods", bench.methods, "methods to evaluate")
      ->required();
  bench_cmd->add_option("--out-dir", bench.out_dir, "output directory");
  bench_cmd->add_option("--screen", bench.screen,
                        "restrict to screened series (heavy-tail)");
  bench_cmd->add_option("--warmup", bench.warmup,
                        "forecasts before combination starts");
  bench_cmd->add_option("--scored", bench.scored, "scored trailing periods");
  bench_cmd->add_option("--jobs", bench.jobs, "worker threads (0 = all)");

  CombineArgs comb;
  CLI::App* combine_cmd = app.add_subcommand(
      "combine", "trace one method over a single-series panel");
  combine_cmd->add_option("--panel", comb.panel, "single-series panel csv")
      ->required();
  combine_cmd->add_option("--method", comb.method, "method name")->required();
  combine_cmd->add_option("--out", comb.out, "trace csv path");
  combine_cmd->add_option("--dump-state", comb.dump_state,
                          "write the final engine state as json");
  combine_cmd->add_option("--omega", comb.omega, "t dof pool, e.g. 1,3");
  combine_cmd->add_option("--c1", comb.c1, "double-exponential stream weight");
  combine_cmd->add_option("--c2", comb.c2, "t stream weight");
  combine_cmd->add_option("--rho", comb.rho, "BG discount factor");

  ScreenArgs screen;
  CLI::App* screen_cmd = app.add_subcommand(
      "screen", "heavy-tail screen over a panel's training histories");
  screen_cmd->add_option("--panel", screen.panel, "panel csv file")
      ->required();
  screen_cmd->add_option("--out", screen.out, "output csv (default stdout)");

  ReportArgs report;
  CLI::App* report_cmd = app.add_subcommand(
      "report", "render a ratios/summary csv as an aligned table");
  report_cmd->add_option("--input", report.input, "csv produced by "
                                                  "simulate or bench")
      ->required();
  report_cmd->add_option("--out", report.out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (bench_cmd->parsed()) return cmd_bench(bench);
    if (combine_cmd->parsed()) return cmd_combine(comb);
    if (screen_cmd->parsed()) return cmd_screen(screen);
    if (report_cmd->parsed()) return cmd_report(report);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PanelCsvError& e) {
    std::cerr << "panel error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
