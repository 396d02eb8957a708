#include "fairsin/tsv.hpp"

#include <charconv>
#include <cmath>

#include "fairsin/error.hpp"

namespace fairsin::tsv {

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

void split_fields(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == '\t' || line[i] == ' ' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != '\t' && line[j] != ' ' && line[j] != '\r') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
}

std::size_t parse_index(std::string_view field, const std::string& path, std::size_t line) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError(path, line, "invalid node index '" + std::string(field) + "'");
  return v;
}

long parse_int(std::string_view field, const std::string& path, std::size_t line) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError(path, line, "invalid integer '" + std::string(field) + "'");
  return v;
}

double parse_real(std::string_view field, const std::string& path, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
    throw ParseError(path, line, "invalid real '" + std::string(field) + "'");
  return v;
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("format_real: conversion failed");
  return std::string(buf, ptr);
}

}  // namespace fairsin::tsv
