#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "errors.hpp"

namespace imexl1 {

/// Gauss-Legendre rule on [0,1].
struct LineRule {
    std::vector<double> x, w;
};

inline LineRule gauss_legendre(int n) {
    if (n < 1) throw ParameterError("gauss_legendre: n must be >= 1");
    LineRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::fabs(dz) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        r.x[i] = 0.5 * (1.0 - z);
        r.x[n - 1 - i] = 0.5 * (1.0 + z);
        r.w[i] = r.w[n - 1 - i] = 0.5 * w;
    }
    return r;
}

/// Rule on a triangle in barycentric coordinates; weights sum to 1 (multiply by the area).
struct TriangleRule {
    int degree = 0;
    std::vector<std::array<double, 3>> bary;
    std::vector<double> w;
    int size() const { return static_cast<int>(w.size()); }
};

namespace detail {

inline void add_orbit3(TriangleRule& r, double a, double w) {
    const double b = 1.0 - 2.0 * a;
    r.bary.push_back({a, a, b});
    r.bary.push_back({a, b, a});
    r.bary.push_back({b, a, a});
    for (int i = 0; i < 3; ++i) r.w.push_back(w);
}

}  // namespace detail

/// Rule exact for polynomials of total degree <= degree. Degrees 1, 2, 4, 5 use the
/// classical 1-, 3-, 6- and 7-point rules; other degrees use a collapsed Gauss product.
inline TriangleRule triangle_rule(int degree) {
    if (degree < 0) throw ParameterError("triangle_rule: negative degree");
    TriangleRule r;
    r.degree = degree;
    if (degree <= 1) {
        r.bary.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3});
        r.w.push_back(1.0);
    } else if (degree == 2) {
        detail::add_orbit3(r, 1.0 / 6.0, 1.0 / 3.0);
    } else if (degree == 3 || degree == 4) {
        r.degree = 4;
        detail::add_orbit3(r, 0.44594849091596488632, 0.22338158967801146570);
        detail::add_orbit3(r, 0.09157621350977074346, 0.10995174365532186764);
    } else if (degree == 5) {
        const double s = std::sqrt(15.0);
        r.bary.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3});
        r.w.push_back(0.225);
        detail::add_orbit3(r, (6.0 - s) / 21.0, (155.0 - s) / 1200.0);
        detail::add_orbit3(r, (6.0 + s) / 21.0, (155.0 + s) / 1200.0);
    } else {
        const int n = (degree + 3) / 2;
        const LineRule g = gauss_legendre(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double u = g.x[i], v = g.x[j] * (1.0 - g.x[i]);
                r.bary.push_back({1.0 - u - v, u, v});
                // reference area 1/2, Jacobian (1-u)
                r.w.push_back(2.0 * g.w[i] * g.w[j] * (1.0 - u));
            }
    }
    return r;
}

}  // namespace imexl1
