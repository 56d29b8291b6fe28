// oracle.hpp: comparison helpers shared by the test binaries
#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace oracle {

/// Rounds to n significant figures.
inline double sig(double v, int n) {
    if (v == 0) return 0;
    const double mag = std::floor(std::log10(std::fabs(v)));
    const double scale = std::pow(10.0, n - 1 - mag);
    return std::round(v * scale) / scale;
}

/// true if a and b agree to n significant figures.
inline bool same_sig(double a, double b, int n = 3) {
    return std::fabs(sig(a, n) - sig(b, n)) <= 1e-9 * std::fabs(sig(b, n));
}

/// true if v printed with `decimals` digits after the point equals `printed`.
inline bool same_printed(double v, double printed, int decimals) {
    char a[64], b[64];
    std::snprintf(a, sizeof a, "%.*f", decimals, v);
    std::snprintf(b, sizeof b, "%.*f", decimals, printed);
    return std::string(a) == b;
}

inline bool near_rel(double a, double b, double tol) { return std::fabs(a - b) <= tol * std::fabs(b); }

}  // namespace oracle
