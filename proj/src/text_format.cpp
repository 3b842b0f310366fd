#include "mgsim/text_format.hpp"

#include <array>
#include <charconv>

#include "mgsim/errors.hpp"

namespace mgsim {

std::string format_double(double value) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view token) {
    double value = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
        throw FormatError("not a number: '" + std::string(token) + "'");
    }
    return value;
}

unsigned long long parse_unsigned(std::string_view token) {
    unsigned long long value = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
        throw FormatError("not a non-negative integer: '" + std::string(token) + "'");
    }
    return value;
}

}  // namespace mgsim
