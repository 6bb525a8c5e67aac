#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace promptaug {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames, so readers never see a partial file.
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Appends one line (newline added) and flushes.
void append_line(const std::filesystem::path& path, std::string_view line);

/// Non-empty lines of a text file; a missing file yields no lines.
std::vector<std::string> read_lines(const std::filesystem::path& path);

} // namespace promptaug
