#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hazardnet {

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

// Full-string decimal parse; throws std::invalid_argument naming `what`.
double parse_double(std::string_view s, const std::string& what);
long long parse_int(std::string_view s, const std::string& what);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace hazardnet
