#pragma once

// Small reference routines used as independent checks. They deliberately
// avoid the library's quadrature and solvers.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

// Composite Simpson on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
    if (n % 2) ++n;
    double h = (b - a) / n, s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

inline double logistic_pdf(double x) {
    double e = std::exp(-std::abs(x));
    return e / ((1.0 + e) * (1.0 + e));
}

inline double logistic_cdf(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace oracle
