#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smc/errors.hpp"

namespace smc::util {

// FNV-1a, 64-bit.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a(const std::string& text);
std::string fnv1a_hex(std::span<const std::uint8_t> bytes);
std::string fnv1a_hex(const std::string& text);

// Shortest %.12g rendering; parse_double_12 maps it back so stored values
// round-trip bit-exactly through the printed form.
std::string format_double_12(double value);
double round_double_12(double value);

// Serializes JSON with doubles fixed at 12 significant digits and keys in
// insertion order, so identical values produce identical bytes.
std::string dump_json_12(const nlohmann::ordered_json& value, int indent = 2);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_text(const std::filesystem::path& path, const std::string& text);

}  // namespace smc::util
