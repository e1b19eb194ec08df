#ifndef AFTERCAST_MANIFEST_HPP
#define AFTERCAST_MANIFEST_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace aftercast {

// 64-bit FNV-1a over the file bytes, rendered as "fnv1a64:<hex>".
std::string content_hash(const std::filesystem::path& path);
std::uint64_t fnv1a64(const void* data, std::size_t size);

// Reproducibility record written next to every command's outputs.
struct RunManifest {
  std::string command;
  std::string config_path;  // empty when the command takes no config
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_hashes;
  std::map<std::string, std::string> params;
  std::vector<std::string> outputs;
  std::string timestamp;  // ISO-8601 UTC

  void stamp_now();
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

}  // namespace aftercast

#endif
