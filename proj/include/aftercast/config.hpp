#ifndef AFTERCAST_CONFIG_HPP
#define AFTERCAST_CONFIG_HPP

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "aftercast/simulation.hpp"

namespace aftercast {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

using ConfigValue = std::variant<bool, std::int64_t, double, std::string,
                                 std::vector<double>,
                                 std::vector<std::string>>;
using ConfigMap = std::map<std::string, ConfigValue>;

// Flat key/value view of a TOML (subset: key = value lines, [section]
// headers and dotted keys flattened with '.', inline comments, string /
// number / boolean / homogeneous array values) or JSON document (one
// nesting level flattened the same way).  Format chosen by extension,
// .json vs anything else.
ConfigMap parse_config_file(const std::filesystem::path& path);
ConfigMap parse_toml_subset(const std::string& text);
ConfigMap parse_json_config(const std::string& text);

struct ScenarioConfig {
  ScenarioSpec spec;
  std::vector<std::string> methods;  // may be empty; CLI applies defaults
};

// Builds a ScenarioSpec from a config map; unknown keys are an error.
ScenarioConfig scenario_from_config(const ConfigMap& map);

}  // namespace aftercast

#endif
