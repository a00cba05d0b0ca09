#include "retas/special.hpp"

#include "retas/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace retas::special {

namespace {

constexpr int kMaxIter = 10000;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

// Series sum for P(a, x) without the prefactor x^a e^{-x} / Gamma(a + 1).
double lower_series(double a, double x) {
    double term = 1.0;
    double sum = 1.0;
    double ap = a;
    for (int n = 0; n < kMaxIter; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kEps) return sum;
    }
    throw ModelError("incomplete gamma series failed to converge");
}

// Continued fraction for Q(a, x) without the prefactor x^a e^{-x} / Gamma(a).
double upper_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps) return h;
    }
    throw ModelError("incomplete gamma continued fraction failed to converge");
}

void check_args(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0))
        throw ModelError("incomplete gamma requires a > 0 and x >= 0");
}

} // namespace

double regularized_lower_gamma(double a, double x) {
    check_args(a, x);
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < a + 1.0) {
        const double log_pref = a * std::log(x) - x - std::lgamma(a + 1.0);
        return std::exp(log_pref) * lower_series(a, x);
    }
    return 1.0 - regularized_upper_gamma(a, x);
}

double regularized_upper_gamma(double a, double x) {
    check_args(a, x);
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return 1.0 - regularized_lower_gamma(a, x);
    const double log_pref = a * std::log(x) - x - std::lgamma(a);
    return std::exp(log_pref) * upper_fraction(a, x);
}

double log_regularized_upper_gamma(double a, double x) {
    check_args(a, x);
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
    if (x < a + 1.0) return std::log1p(-regularized_lower_gamma(a, x));
    return a * std::log(x) - x - std::lgamma(a) + std::log(upper_fraction(a, x));
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double normal_pdf(double z) {
    constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

double normal_interval(double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    constexpr double r = std::numbers::sqrt2;
    if (lo >= 0.0) return 0.5 * (std::erfc(lo / r) - std::erfc(hi / r));
    if (hi <= 0.0) return 0.5 * (std::erfc(-hi / r) - std::erfc(-lo / r));
    return 1.0 - 0.5 * std::erfc(-lo / r) - 0.5 * std::erfc(hi / r);
}

} // namespace retas::special
