#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>

#include "porediff/errors.hpp"

/// Deterministic decimal formatting for every text emitter (VTK, CSV).
/// Scalars print with max_digits10 significant digits ("%.17g" for double,
/// "%.9g" for float), which round-trips bit-exactly through the matching
/// strto* parse. NaN always prints as "nan" regardless of sign/payload so
/// identical runs produce byte-identical files.

namespace porediff {

template <typename T>
std::string format_scalar(T v) {
    static_assert(std::numeric_limits<T>::is_iec559, "expected an IEEE float type");
    if (std::isnan(v)) return "nan";
    char buf[64];
    const int digits = std::numeric_limits<T>::max_digits10;
    std::snprintf(buf, sizeof buf, "%.*g", digits, static_cast<double>(v));
    return buf;
}

/// Parses exactly one scalar of type T from a whole token; throws input_error
/// on anything else. Uses strtof for float so values written by
/// format_scalar<float> parse back without double rounding.
template <typename T>
T parse_scalar(const std::string& token) {
    const char* begin = token.c_str();
    char* end = nullptr;
    T v;
    if constexpr (std::numeric_limits<T>::is_iec559 && sizeof(T) == 4) {
        v = std::strtof(begin, &end);
    } else {
        v = static_cast<T>(std::strtod(begin, &end));
    }
    if (end == begin || *end != '\0')
        throw input_error("malformed numeric token '" + token + "'");
    return v;
}

inline long long parse_integer(const std::string& token) {
    const char* begin = token.c_str();
    char* end = nullptr;
    const long long v = std::strtoll(begin, &end, 10);
    if (end == begin || *end != '\0')
        throw input_error("malformed integer token '" + token + "'");
    return v;
}

} // namespace porediff
