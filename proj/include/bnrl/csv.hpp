#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bnrl::csv {

/// Splits one CSV line. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_line(std::string_view line);

/// Quotes a field when it contains a comma, quote, or leading/trailing space.
std::string escape(std::string_view field);

std::string trim(std::string_view text);

/// Reads a whole file; throws LoadError when it cannot be opened.
std::string read_file(const std::string& path);

/// Splits on '\n', dropping '\r' and a trailing empty line.
std::vector<std::string> lines(std::string_view text);

/// Writes via a temporary file and rename, so readers never see partial output.
void write_file_atomic(const std::string& path, std::string_view contents);

/// Parses `key = value` lines; '#' starts a comment. Keys keep file order.
/// Throws Error on a line without '=' or a repeated key.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text);

/// Splits a comma-separated list and trims each item; empty input gives {}.
std::vector<std::string> split_list(std::string_view value);

double parse_double(std::string_view text, const std::string& key);
long long parse_integer(std::string_view text, const std::string& key);

}  // namespace bnrl::csv
