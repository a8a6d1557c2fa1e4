#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace photon::io {

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);
/// Strict parse of a full field; throws ValidationError with `context` on failure.
double parse_double(std::string_view text, std::string_view context);
long long parse_int(std::string_view text, std::string_view context);

std::vector<std::string_view> split_csv(std::string_view line);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Lines of a text file with trailing '\r' stripped.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace photon::io
