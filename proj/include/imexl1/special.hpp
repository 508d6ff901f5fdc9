#pragma once

#include <cfloat>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "errors.hpp"

namespace imexl1 {

namespace detail {

// Lanczos coefficients, g = 7, n = 9
inline constexpr double lanczos_g = 7.0;
inline constexpr double lanczos_c[9] = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

inline double lanczos_sum(double z) {
    double a = lanczos_c[0];
    for (int i = 1; i < 9; ++i) a += lanczos_c[i] / (z + i);
    return a;
}

}  // namespace detail

/// Gamma function. Relative accuracy is about 1e-15 on (0, 50).
inline double gamma_fn(double x) {
    if (x < 0.5) {
        if (x == std::floor(x)) return std::numeric_limits<double>::quiet_NaN();
        return std::numbers::pi / (std::sin(std::numbers::pi * x) * gamma_fn(1.0 - x));
    }
    const double z = x - 1.0;
    const double t = z + detail::lanczos_g + 0.5;
    // split the power to postpone overflow near x = 171
    const double p = std::pow(t, 0.5 * (z + 0.5));
    return std::sqrt(2.0 * std::numbers::pi) * p * (p * std::exp(-t)) * detail::lanczos_sum(z);
}

/// log Gamma for x > 0
inline double log_gamma(double x) {
    if (!(x > 0.0)) throw DomainError("log_gamma: argument must be positive");
    if (x < 0.5) return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
    const double z = x - 1.0;
    const double t = z + detail::lanczos_g + 0.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
           std::log(detail::lanczos_sum(z));
}

/// k_beta(t) = t^(beta-1) / Gamma(beta)
inline double kernel_k(double beta, double t) {
    if (t <= 0.0) {
        if (beta > 1.0) return 0.0;
        if (beta == 1.0) return 1.0;
        return std::numeric_limits<double>::infinity();
    }
    return std::pow(t, beta - 1.0) / gamma_fn(beta);
}

/// (b + d)^p - b^p for b >= 0, d > 0 without cancellation when d << b.
inline double pow_diff(double b, double d, double p) {
    if (b <= 0.0) return std::pow(d, p);
    const double a = b + d;
    return -std::pow(a, p) * std::expm1(p * std::log1p(-d / a));
}

/// Caputo derivative of t^beta: Gamma(1+beta)/Gamma(1+beta-alpha) t^(beta-alpha).
inline double caputo_power(double beta, double alpha, double t) {
    if (!(beta > 0.0)) throw DomainError("caputo_power: beta must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("caputo_power: alpha must lie in (0,1)");
    if (t < 0.0) throw DomainError("caputo_power: t must be nonnegative");
    const double c = gamma_fn(1.0 + beta) / gamma_fn(1.0 + beta - alpha);
    if (t == 0.0) {
        if (beta > alpha) return 0.0;
        if (beta == alpha) return c;
        return std::numeric_limits<double>::infinity();
    }
    return c * std::pow(t, beta - alpha);
}

inline constexpr double mittag_leffler_zmax = 100.0;
inline constexpr double mittag_leffler_rtol = 1e-10;

/// E_alpha(z) = sum_j z^j / Gamma(j alpha + 1), by direct summation in
/// extended precision. Throws RangeError when |z| > 100, when the value
/// overflows a double, or when the rounding estimate exceeds 1e-10 relative
/// (large negative z with small alpha).
inline double mittag_leffler(double alpha, double z) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("mittag_leffler: alpha must lie in (0,1]");
    if (!std::isfinite(z) || std::fabs(z) > mittag_leffler_zmax)
        throw RangeError("mittag_leffler: |z| > 100 is outside the supported range");
    if (z == 0.0) return 1.0;

    const double az = std::fabs(z);
    // E_alpha(z) ~ exp(z^(1/alpha)) / alpha for large positive z
    if (z > 0.0 && std::log(az) / alpha > std::log(700.0))
        throw RangeError("mittag_leffler: value overflows double");

    const double lz = std::log(az);
    long double sum = 1.0L, comp = 0.0L, abs_sum = 1.0L;
    double prev = 0.0;
    bool past_peak = false;
    constexpr int jmax = 4000000;
    int j = 1;
    for (; j < jmax; ++j) {
        const double lt = j * lz - log_gamma(j * alpha + 1.0);
        if (lt > 709.0) throw RangeError("mittag_leffler: series terms overflow");
        long double term = std::exp(static_cast<long double>(lt));
        abs_sum += term;
        if (z < 0.0 && (j & 1)) term = -term;
        // Kahan summation
        const long double y = term - comp;
        const long double s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        if (lt < prev) past_peak = true;
        prev = lt;
        if (past_peak && lt < std::log(static_cast<double>(abs_sum)) + std::log(1e-18)) break;
    }
    if (j == jmax) throw RangeError("mittag_leffler: series did not converge");
    const long double err = abs_sum * LDBL_EPSILON * 8.0L;
    if (sum == 0.0L || err > mittag_leffler_rtol * std::fabs(sum))
        throw RangeError("mittag_leffler: cancellation too severe at z = " + std::to_string(z));
    const double out = static_cast<double>(sum);
    if (!std::isfinite(out)) throw RangeError("mittag_leffler: value overflows double");
    return out;
}

}  // namespace imexl1
