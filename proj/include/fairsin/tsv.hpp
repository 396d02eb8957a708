#pragma once

#include <string>
#include <string_view>
#include <vector>

// Field-level helpers for the whitespace-separated interchange files.
namespace fairsin::tsv {

bool is_blank(std::string_view line);
// Splits on tabs and spaces; empty fields are skipped.
void split_fields(std::string_view line, std::vector<std::string_view>& out);

std::size_t parse_index(std::string_view field, const std::string& path, std::size_t line);
long parse_int(std::string_view field, const std::string& path, std::size_t line);
double parse_real(std::string_view field, const std::string& path, std::size_t line);

// Shortest decimal representation that round-trips exactly.
std::string format_real(double v);

}  // namespace fairsin::tsv
