#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace uptime::text {

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

/// Strict integer/real parsing; throws DataError mentioning `what`.
std::int64_t parse_int(std::string_view s, std::string_view what);
double parse_real(std::string_view s, std::string_view what);
std::vector<double> parse_real_list(std::string_view s, std::string_view what);

/// "%.17g": round-trips every double.
std::string format_exact(double v);
/// Fixed notation with `digits` decimals.
std::string format_fixed(double v, int digits);
std::string join_exact(const double* values, std::size_t count);

/// Reads the whole file; throws DataError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);
/// Writes `content` atomically enough for our purposes (truncate + write).
void write_file(const std::filesystem::path& path, std::string_view content);

/// Splits into lines, accepting both LF and CRLF; drops a trailing empty
/// line.
std::vector<std::string_view> lines(std::string_view content);

}  // namespace uptime::text
