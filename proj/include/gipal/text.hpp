#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gipal {

// Shortest decimal representation that round-trips the exact value.
std::string format_double(double v);
std::string format_float(float v);
std::string format_int(long long v);

// Strict numeric parsing; throws ParseError on any trailing garbage.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string_view> split_ws(std::string_view line);
std::vector<std::string_view> split_char(std::string_view line, char sep);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

} // namespace gipal
