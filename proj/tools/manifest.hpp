#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gtpulse/result.hpp"

namespace gtpulse::cli {

// One manifest per run, written alongside the outputs. Output checksums are
// FNV-1a 64 over file bytes; the wall-clock fields are the only
// non-deterministic content.
class RunManifest {
 public:
  explicit RunManifest(std::string subcommand);

  void set_config(nlohmann::json config);
  void add_seed(const std::string& name, std::uint64_t seed);
  void add_input(const std::string& path);
  void add_output(const std::string& path);
  void set_wall_ms(double wall_ms);

  // Checksums every recorded output file and writes <dir>/manifest.json.
  Status write(const std::string& dir) const;

 private:
  std::string subcommand_;
  nlohmann::json config_;
  nlohmann::json seeds_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  double wall_ms_ = 0.0;
};

}  // namespace gtpulse::cli
