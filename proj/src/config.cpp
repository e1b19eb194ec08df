#include "aftercast/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace aftercast {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

bool parse_number(const std::string& text, ConfigValue& out) {
  try {
    std::size_t pos = 0;
    if (text.find_first_of(".eE") == std::string::npos) {
      const long long v = std::stoll(text, &pos);
      if (pos == text.size()) {
        out = static_cast<std::int64_t>(v);
        return true;
      }
    }
    pos = 0;
    const double v = std::stod(text, &pos);
    if (pos == text.size()) {
      out = v;
      return true;
    }
  } catch (const std::exception&) {
  }
  return false;
}

ConfigValue parse_toml_value(const std::string& raw, int line_no) {
  const std::string text = trim(raw);
  if (text.empty()) {
    throw ConfigError("line " + std::to_string(line_no) + ": empty value");
  }
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": unterminated string");
    }
    return text.substr(1, text.size() - 2);
  }
  if (text == "true") return true;
  if (text == "false") return false;
  if (text.front() == '[') {
    if (text.back() != ']') {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": unterminated array");
    }
    const std::string body = trim(text.substr(1, text.size() - 2));
    std::vector<double> numbers;
    std::vector<std::string> strings;
    bool any_string = false;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      if (item.front() == '"') {
        any_string = true;
        if (item.size() < 2 || item.back() != '"') {
          throw ConfigError("line " + std::to_string(line_no) +
                            ": unterminated string in array");
        }
        strings.push_back(item.substr(1, item.size() - 2));
      } else {
        ConfigValue v;
        if (!parse_number(item, v)) {
          throw ConfigError("line " + std::to_string(line_no) +
                            ": bad array element '" + item + "'");
        }
        numbers.push_back(std::holds_alternative<double>(v)
                              ? std::get<double>(v)
                              : static_cast<double>(std::get<std::int64_t>(v)));
      }
    }
    if (any_string) {
      if (!numbers.empty()) {
        throw ConfigError("line " + std::to_string(line_no) +
                          ": mixed array types");
      }
      return strings;
    }
    return numbers;
  }
  ConfigValue v;
  if (parse_number(text, v)) return v;
  throw ConfigError("line " + std::to_string(line_no) + ": bad value '" +
                    text + "'");
}

}  // namespace

ConfigMap parse_toml_subset(const std::string& text) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line;
  std::string prefix;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(line_no) +
                          ": bad section header");
      }
      prefix = trim(line.substr(1, line.size() - 2));
      if (!prefix.empty()) prefix += '.';
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    }
    map[prefix + key] = parse_toml_value(line.substr(eq + 1), line_no);
  }
  return map;
}

ConfigMap parse_json_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad JSON config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("JSON config must be an object");
  ConfigMap map;
  auto put_scalar = [&](const std::string& key, const nlohmann::json& v) {
    if (v.is_boolean()) {
      map[key] = v.get<bool>();
    } else if (v.is_number_integer() || v.is_number_unsigned()) {
      map[key] = v.get<std::int64_t>();
    } else if (v.is_number_float()) {
      map[key] = v.get<double>();
    } else if (v.is_string()) {
      map[key] = v.get<std::string>();
    } else if (v.is_array()) {
      if (!v.empty() && v.front().is_string()) {
        map[key] = v.get<std::vector<std::string>>();
      } else {
        map[key] = v.get<std::vector<double>>();
      }
    } else {
      throw ConfigError("unsupported JSON value for key " + key);
    }
  };
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) {
      for (const auto& [sub, v] : value.items()) {
        put_scalar(key + "." + sub, v);
      }
    } else {
      put_scalar(key, value);
    }
  }
  return map;
}

ConfigMap parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  if (path.extension() == ".json") return parse_json_config(buffer.str());
  return parse_toml_subset(buffer.str());
}

namespace {

class ConfigReader {
 public:
  explicit ConfigReader(const ConfigMap& map) : map_(map) {}

  bool has(const std::string& key) {
    used_.push_back(key);
    return map_.count(key) > 0;
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) {
    if (!has(key)) return fallback;
    const ConfigValue& v = map_.at(key);
    if (std::holds_alternative<std::int64_t>(v)) {
      return std::get<std::int64_t>(v);
    }
    throw ConfigError("config key " + key + " must be an integer");
  }

  double get_double(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const ConfigValue& v = map_.at(key);
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    if (std::holds_alternative<std::int64_t>(v)) {
      return static_cast<double>(std::get<std::int64_t>(v));
    }
    throw ConfigError("config key " + key + " must be a number");
  }

  bool get_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const ConfigValue& v = map_.at(key);
    if (std::holds_alternative<bool>(v)) return std::get<bool>(v);
    throw ConfigError("config key " + key + " must be a boolean");
  }

  std::string get_string(const std::string& key, std::string fallback) {
    if (!has(key)) return fallback;
    const ConfigValue& v = map_.at(key);
    if (std::holds_alternative<std::string>(v)) {
      return std::get<std::string>(v);
    }
    throw ConfigError("config key " + key + " must be a string");
  }

  std::vector<std::string> get_strings(const std::string& key) {
    if (!has(key)) return {};
    const ConfigValue& v = map_.at(key);
    if (std::holds_alternative<std::vector<std::string>>(v)) {
      return std::get<std::vector<std::string>>(v);
    }
    if (std::holds_alternative<std::string>(v)) {
      return {std::get<std::string>(v)};
    }
    throw ConfigError("config key " + key + " must be a string array");
  }

  void reject_unknown() const {
    for (const auto& [key, value] : map_) {
      (void)value;
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        throw ConfigError("unknown config key: " + key);
      }
    }
  }

 private:
  const ConfigMap& map_;
  std::vector<std::string> used_;
};

}  // namespace

ScenarioConfig scenario_from_config(const ConfigMap& map) {
  ConfigReader reader(map);
  ScenarioConfig out;
  ScenarioSpec& spec = out.spec;

  const std::string kind = reader.get_string("kind", "linreg");
  if (kind == "linreg") {
    spec.kind = ScenarioKind::kLinReg;
  } else if (kind == "ar") {
    spec.kind = ScenarioKind::kAr;
  } else {
    throw ConfigError("kind must be linreg or ar, got " + kind);
  }

  if (reader.has("p0")) {
    const ConfigValue& v = map.at("p0");
    if (std::holds_alternative<std::string>(v)) {
      if (std::get<std::string>(v) != "uniform") {
        throw ConfigError("p0 must be an integer or \"uniform\"");
      }
      spec.p0.reset();
    } else if (std::holds_alternative<std::int64_t>(v)) {
      spec.p0 = static_cast<int>(std::get<std::int64_t>(v));
    } else {
      throw ConfigError("p0 must be an integer or \"uniform\"");
    }
  } else if (spec.kind == ScenarioKind::kAr) {
    spec.p0.reset();
  }

  std::int64_t default_p = 5;
  if (spec.kind == ScenarioKind::kLinReg && spec.p0) {
    default_p = 2 * *spec.p0 - 1;  // the default nested-family size
  }
  spec.p = static_cast<int>(reader.get_int("p", default_p));
  spec.n = static_cast<int>(reader.get_int("n", spec.n));
  spec.fit_start =
      static_cast<int>(reader.get_int("fit_start", spec.fit_start));
  spec.combine_after =
      static_cast<int>(reader.get_int("combine_after", spec.combine_after));
  spec.eval_window =
      static_cast<int>(reader.get_int("eval_window", spec.eval_window));
  spec.n_beta_draws = static_cast<int>(
      reader.get_int("n_draws", reader.get_int("n_beta_draws", 200)));
  spec.n_replicates =
      static_cast<int>(reader.get_int("n_replicates", spec.n_replicates));
  spec.seed = static_cast<std::uint64_t>(reader.get_int("seed", 0));

  const std::string cov = reader.get_string("cov", "equicorrelated");
  if (cov == "equicorrelated") {
    spec.cov_kind = CovKind::kEquicorrelated;
    spec.cov_param = reader.get_double("cov_param", 0.8);
  } else if (cov == "ar1") {
    spec.cov_kind = CovKind::kAr1;
    spec.cov_param = reader.get_double("cov_param", 0.5);
  } else if (cov == "identity") {
    spec.cov_kind = CovKind::kIdentity;
    spec.cov_param = reader.get_double("cov_param", 0.0);
  } else {
    throw ConfigError("cov must be equicorrelated, ar1 or identity");
  }

  const std::string family = reader.get_string("noise.family", "normal");
  if (family == "normal") {
    spec.noise.kind = NoiseSpec::Kind::kNormal;
  } else if (family == "de" || family == "double_exponential") {
    spec.noise.kind = NoiseSpec::Kind::kDoubleExponential;
  } else if (family == "t") {
    spec.noise.kind = NoiseSpec::Kind::kStudentT;
  } else if (family == "lognormal") {
    spec.noise.kind = NoiseSpec::Kind::kLogNormal;
  } else {
    throw ConfigError("noise.family must be normal, de, t or lognormal");
  }
  spec.noise.sigma2 = reader.get_double("noise.sigma2", 1.0);
  spec.noise.dof = reader.get_double("noise.dof", 3.0);
  spec.noise.log_scale = reader.get_double("noise.sigma", 1.0);
  spec.noise.center = reader.get_bool("noise.center", false);

  out.methods = reader.get_strings("methods");

  reader.reject_unknown();
  spec.validate();
  return out;
}

}  // namespace aftercast
