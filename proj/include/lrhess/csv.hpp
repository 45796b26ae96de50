#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lrhess::csv {

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);

double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);
std::uint64_t parse_uint(std::string_view text);
bool parse_bool(std::string_view text);

/// Splits on commas; no quoting (none of our schemas need it).
std::vector<std::string_view> split(std::string_view line, char sep = ',');

std::string_view trim(std::string_view text);

}  // namespace lrhess::csv
