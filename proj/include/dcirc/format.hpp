#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

namespace dcirc {

// Shortest decimal string that round-trips the double (used for CSV cells).
inline std::string fmt_shortest(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    (void)ec;
    return std::string(buf, end);
}

// Probabilities and expected utilities: nine significant digits.
inline std::string fmt_sig9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

// Dollar amounts: two decimal places.
inline std::string fmt_dollars(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

}  // namespace dcirc
