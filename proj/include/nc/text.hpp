#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nc {

// Round-trip formatting for report files: 17 significant digits (%.17g).
// Infinity serializes as "inf".
std::string format_double(double value);

// Strict parses; `context` names the file/field for diagnostics.
double parse_double(const std::string& text, const std::string& context);
std::uint64_t parse_u64(const std::string& text, const std::string& context);
std::size_t parse_count(const std::string& text, const std::string& context);

// Splits one CSV line on commas (no quoting; none of our fields need it).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace nc
