#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace geoprune {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace geoprune
