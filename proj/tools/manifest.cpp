#include "manifest.hpp"

#include <chrono>
#include <filesystem>

#include "gtpulse/io_util.hpp"
#include "gtpulse/version.hpp"

namespace gtpulse::cli {

namespace {

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace

RunManifest::RunManifest(std::string subcommand)
    : subcommand_(std::move(subcommand)),
      config_(nlohmann::json::object()),
      seeds_(nlohmann::json::object()) {}

void RunManifest::set_config(nlohmann::json config) { config_ = std::move(config); }

void RunManifest::add_seed(const std::string& name, std::uint64_t seed) {
  seeds_[name] = seed;
}

void RunManifest::add_input(const std::string& path) { inputs_.push_back(path); }

void RunManifest::add_output(const std::string& path) { outputs_.push_back(path); }

void RunManifest::set_wall_ms(double wall_ms) { wall_ms_ = wall_ms; }

Status RunManifest::write(const std::string& dir) const {
  nlohmann::json doc;
  doc["format_version"] = kManifestFormatVersion;
  doc["tool"] = "gtpulse";
  doc["tool_version"] = kVersion;
  doc["subcommand"] = subcommand_;
  doc["config"] = config_;
  doc["seeds"] = seeds_;
  doc["written_at"] = iso_now();
  doc["wall_ms"] = wall_ms_;

  nlohmann::json inputs = nlohmann::json::array();
  for (const std::string& path : inputs_) {
    nlohmann::json entry{{"path", path}};
    if (auto content = read_file(path); content.ok()) {
      entry["fnv1a64"] = fnv1a64_hex(content.value());
      entry["bytes"] = content.value().size();
    }
    inputs.push_back(std::move(entry));
  }
  doc["inputs"] = std::move(inputs);

  nlohmann::json outputs = nlohmann::json::array();
  for (const std::string& path : outputs_) {
    auto content = read_file(path);
    if (!content.ok()) return content.error();
    outputs.push_back(nlohmann::json{{"path", path},
                                     {"fnv1a64", fnv1a64_hex(content.value())},
                                     {"bytes", content.value().size()}});
  }
  doc["outputs"] = std::move(outputs);

  const auto manifest_path =
      (std::filesystem::path(dir) / "manifest.json").string();
  return write_file(manifest_path, doc.dump(2) + "\n");
}

}  // namespace gtpulse::cli
