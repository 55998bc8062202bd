#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ff {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Shortest round-trip decimal form; "nan"/"inf" spelled out. Used for every
/// real written to CSV so artifacts are byte-stable.
std::string format_real(double v);

/// RFC 4180 quoting when the field needs it.
std::string csv_field(std::string_view s);

/// Splits CSV text into rows of fields, honouring RFC 4180 quotes.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and renames, so readers never see partial files.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace ff
