#include "nc/text.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "nc/errors.hpp"

namespace nc {

std::string format_double(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

double parse_double(const std::string& text, const std::string& context) {
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    errno = 0;
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0' || errno == ERANGE)
        throw ValidationError(context + ": expected a number, got '" + text + "'");
    return value;
}

std::uint64_t parse_u64(const std::string& text, const std::string& context) {
    if (text.empty() || text[0] == '-')
        throw ValidationError(context + ": expected an unsigned integer, got '" + text + "'");
    errno = 0;
    char* end = nullptr;
    const unsigned long long value = std::strtoull(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0' || errno == ERANGE)
        throw ValidationError(context + ": expected an unsigned integer, got '" + text + "'");
    return static_cast<std::uint64_t>(value);
}

std::size_t parse_count(const std::string& text, const std::string& context) {
    return static_cast<std::size_t>(parse_u64(text, context));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    fields.push_back(current);
    return fields;
}

}  // namespace nc
