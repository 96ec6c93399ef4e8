#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace attrsparse {

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);

/// Parses a full decimal string; nullopt on trailing junk or empty input.
std::optional<double> parse_double(std::string_view text);

/// Splits one CSV record. Double-quoted fields may contain the delimiter
/// and "" escapes. Surrounding whitespace is trimmed from unquoted fields.
std::vector<std::string> split_csv_record(std::string_view line, char delimiter);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace attrsparse
