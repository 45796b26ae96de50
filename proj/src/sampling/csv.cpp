#include "lrhess/csv.hpp"

#include <charconv>
#include <stdexcept>

namespace lrhess::csv {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

namespace {

template <typename T>
T parse_number(std::string_view text, const char* what) {
  text = trim(text);
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw std::invalid_argument(std::string("cannot parse ") + what + " from '" +
                                std::string(text) + "'");
  return value;
}

}  // namespace

double parse_double(std::string_view text) { return parse_number<double>(text, "real"); }

std::int64_t parse_int(std::string_view text) {
  return parse_number<std::int64_t>(text, "integer");
}

std::uint64_t parse_uint(std::string_view text) {
  return parse_number<std::uint64_t>(text, "unsigned integer");
}

bool parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("cannot parse boolean from '" + std::string(text) + "'");
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

}  // namespace lrhess::csv
