#include "smc/util.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace smc::util {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::string to_hex(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return std::string(buf);
}

void dump_impl(const nlohmann::ordered_json& value, std::string& out, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent) * depth, ' ');
    switch (value.type()) {
        case nlohmann::ordered_json::value_t::object: {
            if (value.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& [key, child] : value.items()) {
                if (!first) out += ",\n";
                first = false;
                out += pad;
                out += nlohmann::ordered_json(key).dump();
                out += ": ";
                dump_impl(child, out, indent, depth + 1);
            }
            out += "\n" + close_pad + "}";
            return;
        }
        case nlohmann::ordered_json::value_t::array: {
            if (value.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            bool first = true;
            for (const auto& child : value) {
                if (!first) out += ",\n";
                first = false;
                out += pad;
                dump_impl(child, out, indent, depth + 1);
            }
            out += "\n" + close_pad + "]";
            return;
        }
        case nlohmann::ordered_json::value_t::number_float:
            out += format_double_12(value.get<double>());
            return;
        default:
            out += value.dump();
            return;
    }
}

}  // namespace

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
    std::uint64_t hash = kFnvOffset;
    for (std::uint8_t b : bytes) {
        hash ^= b;
        hash *= kFnvPrime;
    }
    return hash;
}

std::uint64_t fnv1a(const std::string& text) {
    return fnv1a(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string fnv1a_hex(std::span<const std::uint8_t> bytes) { return to_hex(fnv1a(bytes)); }

std::string fnv1a_hex(const std::string& text) { return to_hex(fnv1a(text)); }

std::string format_double_12(double value) {
    if (!std::isfinite(value)) return "null";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    std::string s(buf);
    // Bare integers must stay JSON numbers that parse back as doubles.
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

double round_double_12(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return std::strtod(buf, nullptr);
}

std::string dump_json_12(const nlohmann::ordered_json& value, int indent) {
    std::string out;
    dump_impl(value, out, indent, 0);
    out += "\n";
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SmcParseError("cannot open file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

std::string read_file_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SmcParseError("cannot open file: " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw SmcParseError("cannot write file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void write_file_text(const std::filesystem::path& path, const std::string& text) {
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                     text.size()));
}

}  // namespace smc::util
