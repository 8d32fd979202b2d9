#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>

#include "saltlyap/errors.hpp"

namespace saltlyap {

/// Shortest decimal string that parses back to the same double.
/// Locale independent, always '.' as decimal separator.
inline std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ArgumentError("not a number: '" + std::string(s) + "'");
    }
    return x;
}

inline unsigned long long parse_unsigned(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    unsigned long long x = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ArgumentError("not a non-negative integer: '" + std::string(s) + "'");
    }
    return x;
}

}  // namespace saltlyap
