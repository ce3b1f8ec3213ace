#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace refcat::tsv {

// Escapes backslash, tab, newline and carriage return so that any byte
// payload fits into one TSV field. escape/unescape round-trip exactly.
std::string escape(std::string_view raw);
std::string unescape(std::string_view field);

// Key of a keyed TSV line: the bytes before the first tab (whole line if
// the line has no tab).
std::string_view key_of(std::string_view line);

// Everything after the first tab; empty when the line has no tab.
std::string_view rest_of(std::string_view line);

// Splits a line on raw tabs. Fields stay escaped.
std::vector<std::string_view> split_fields(std::string_view line);

} // namespace refcat::tsv
