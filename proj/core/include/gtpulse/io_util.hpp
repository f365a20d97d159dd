#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gtpulse/result.hpp"

namespace gtpulse {

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text);

// Splits one CSV line; supports double-quoted fields with "" escapes.
std::vector<std::string> csv_split(std::string_view line);

// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

Result<std::string> read_file(const std::string& path);
Status write_file(const std::string& path, std::string_view content);

// FNV-1a 64-bit, used as a content checksum in run manifests (not
// cryptographic).
std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

}  // namespace gtpulse
