#pragma once

#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace entdepth::csv {

// Shortest text guaranteed to round-trip a double.
inline std::string format17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::vector<std::string> split_fields(std::string_view line);

std::string_view trim(std::string_view text);

// Parses the whole field as a double. Returns false on trailing garbage or overflow.
bool parse_double(std::string_view field, double& out);

std::string read_file(const std::string& path);

void write_file(const std::string& path, std::string_view contents);

}  // namespace entdepth::csv
