#pragma once

#include <cmath>
#include <limits>

namespace uhcm::detail {

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

inline double log_choose(int n, int k) {
    if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

inline double choose(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    return std::exp(log_choose(n, k));
}

/// n (n-1) ... (n-m+1) as a double; 1 for m == 0, 0 for m > n.
inline double falling_factorial(int n, int m) {
    if (m == 0) return 1.0;
    if (m > n) return 0.0;
    double p = 1.0;
    for (int i = 0; i < m; ++i) p *= static_cast<double>(n - i);
    return p;
}

inline double log_falling_factorial(int n, int m) {
    if (m == 0) return 0.0;
    return log_factorial(n) - log_factorial(n - m);
}

}  // namespace uhcm::detail
