#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace eqalign::io {

/// Write through a sibling temp file and rename into place.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Shortest round-trip decimal form; locale independent.
std::string format_double(double v);

/// Escape &, <, >, " for XML text and attribute values.
std::string xml_escape(std::string_view s);

}  // namespace eqalign::io
