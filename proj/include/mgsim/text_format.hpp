#pragma once

#include <string>
#include <string_view>

namespace mgsim {

/// Shortest decimal form that parses back to exactly `value`.
std::string format_double(double value);
/// Strict full-token parse; throws FormatError on trailing characters.
double parse_double(std::string_view token);
unsigned long long parse_unsigned(std::string_view token);

}  // namespace mgsim
