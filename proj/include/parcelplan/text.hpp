#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace parcelplan::text {

// Shortest representation that parses back to the same double.
std::string format_real(double value);

std::string_view trim(std::string_view s);

// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string_view> split_lines(std::string_view text);

std::vector<std::string_view> split(std::string_view line, char sep);

bool parse_real(std::string_view s, double& out);
bool parse_int(std::string_view s, long long& out);
bool parse_bool(std::string_view s, bool& out);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace parcelplan::text
