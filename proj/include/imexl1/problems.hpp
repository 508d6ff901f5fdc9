#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "mesh2d.hpp"
#include "mixedfem.hpp"
#include "quadrature.hpp"
#include "special.hpp"

namespace imexl1 {

enum class ExampleId { Ex7_1, Ex7_2, Ex7_3, Ex7_4, Ex7_5, Ex7_6, Ex7_7, Ex7_8 };

inline const std::vector<ExampleId>& all_examples() {
    static const std::vector<ExampleId> ids{ExampleId::Ex7_1, ExampleId::Ex7_2, ExampleId::Ex7_3, ExampleId::Ex7_4,
                                            ExampleId::Ex7_5, ExampleId::Ex7_6, ExampleId::Ex7_7, ExampleId::Ex7_8};
    return ids;
}

inline std::string to_string(ExampleId id) {
    static const char* names[] = {"Ex7_1", "Ex7_2", "Ex7_3", "Ex7_4", "Ex7_5", "Ex7_6", "Ex7_7", "Ex7_8"};
    return names[static_cast<int>(id)];
}

inline ExampleId parse_example(const std::string& s) {
    for (ExampleId id : all_examples()) {
        const std::string n = to_string(id);
        // accept Ex7_3, 7.3, 7_3
        if (s == n || s == n.substr(2) || s == std::string("7.") + n.back()) return id;
    }
    throw CatalogError("unknown example '" + s + "'");
}

using ScalarField = std::function<double(const Vec2&, double)>;
using VectorField = std::function<Vec2(const Vec2&, double)>;
using MatrixField = std::function<Mat2(const Vec2&, double)>;

struct ExactSolution {
    ScalarField u;
    VectorField sigma;  // A grad u
};

/// Merton jump parameters (uncorrelated jumps) and the far-field data used outside the domain.
struct MertonJumps {
    double mu1 = 0.0, mu2 = 0.0;
    double s1 = 1.0, s2 = 1.0;
    double R = 0.0;  // truncation radius beyond x + mu
    ScalarField far_field;

    SeparableGaussian kernel() const {
        return SeparableGaussian{1.0 / (2.0 * std::numbers::pi * s1 * s2), mu1, mu2, s1, s2};
    }
};

struct ProblemSpec {
    std::string name;
    std::string description;
    double xmin = -1, xmax = 1, ymin = -1, ymax = 1;
    double T = 1.0;
    MatrixField A;
    MatrixField dA_dt;   // empty: central differences in t
    bool A_static = false;
    VectorField b;       // empty: b = 0
    ScalarField c;       // empty: c = 0
    double lambda = 0.0;
    KernelFn g;          // empty: no integral term
    std::optional<SeparableGaussian> g_separable;
    ScalarField f;       // empty: f = 0
    // optional batched source at many points (used by the solver when present)
    std::function<std::vector<double>(const std::vector<Vec2>&, double)> f_batch;
    std::function<double(const Vec2&)> u0;
    ScalarField dirichlet;  // empty: homogeneous
    std::optional<ExactSolution> exact;
    std::optional<MertonJumps> merton;
    bool pricing_weights = false;  // errors weighted by t and t^{1+alpha/2}

    Coefficients coefficients() const { return Coefficients{A, b, c, dirichlet}; }
    bool has_integral() const { return lambda != 0.0 && static_cast<bool>(g); }

    Mat2 dA(const Vec2& x, double t) const {
        if (dA_dt) return dA_dt(x, t);
        if (A_static) return Mat2::Zero();
        const double h = 1e-5 * std::max(1.0, std::fabs(t));
        if (t - h < 0.0) return (-3.0 * A(x, t) + 4.0 * A(x, t + h) - A(x, t + 2 * h)) / (2 * h);
        return (A(x, t + h) - A(x, t - h)) / (2 * h);
    }
};

/// Space-time separable u(x,t) = S(x) * sum_k c_k t^{beta_k} (beta_k = 0 is a constant term).
struct SeparableSolution {
    std::function<double(const Vec2&)> S;
    std::function<Vec2(const Vec2&)> grad;
    std::function<Mat2(const Vec2&)> hess;
    std::vector<std::pair<double, double>> time_terms;  // (c_k, beta_k)

    double theta(double t) const {
        double s = 0.0;
        for (auto [ck, bk] : time_terms) s += bk == 0.0 ? ck : ck * std::pow(t, bk);
        return s;
    }
    double caputo_theta(double alpha, double t) const {
        double s = 0.0;
        for (auto [ck, bk] : time_terms)
            if (bk != 0.0) s += ck * caputo_power(bk, alpha, t);
        return s;
    }
};

inline SeparableSolution sinsin_solution(std::vector<std::pair<double, double>> terms) {
    constexpr double pi = std::numbers::pi;
    SeparableSolution s;
    s.S = [](const Vec2& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); };
    s.grad = [](const Vec2& x) {
        return Vec2(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()), pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
    };
    s.hess = [](const Vec2& x) {
        const double sx = std::sin(pi * x.x()), sy = std::sin(pi * x.y());
        const double cx = std::cos(pi * x.x()), cy = std::cos(pi * x.y());
        Mat2 H;
        H << -pi * pi * sx * sy, pi * pi * cx * cy, pi * pi * cx * cy, -pi * pi * sx * sy;
        return H;
    };
    s.time_terms = std::move(terms);
    return s;
}

namespace detail {

// column-wise divergence (d_1 A_1j + d_2 A_2j) by fourth-order central differences
inline Vec2 matrix_divergence(const MatrixField& A, const Vec2& x, double t, double h = 1e-3) {
    auto d = [&](int axis) {
        Vec2 e = Vec2::Zero();
        e(axis) = h;
        return Mat2((-A(x + 2 * e, t) + 8.0 * A(x + e, t) - 8.0 * A(x - e, t) + A(x - 2 * e, t)) / (12.0 * h));
    };
    const Mat2 d1 = d(0), d2 = d(1);
    return Vec2(d1(0, 0) + d2(1, 0), d1(0, 1) + d2(1, 1));
}

// composite Gauss rule on a rectangle: cells of size <= cell, 4 points per direction
struct RectRule {
    std::vector<double> x, wx, y, wy;
};

inline std::vector<std::pair<double, double>> composite_line(double a, double b, double cell, int pts = 4) {
    std::vector<std::pair<double, double>> out;
    if (!(b > a)) return out;
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / cell)));
    const LineRule g = gauss_legendre(pts);
    const double hc = (b - a) / n;
    for (int i = 0; i < n; ++i)
        for (int q = 0; q < pts; ++q) out.emplace_back(a + (i + g.x[q]) * hc, g.w[q] * hc);
    return out;
}

inline RectRule rect_rule(double x0, double x1, double y0, double y1, double cell, int pts = 4) {
    RectRule r;
    for (auto [p, w] : composite_line(x0, x1, cell, pts)) {
        r.x.push_back(p);
        r.wx.push_back(w);
    }
    for (auto [p, w] : composite_line(y0, y1, cell, pts)) {
        r.y.push_back(p);
        r.wy.push_back(w);
    }
    return r;
}

// the four rectangles covering [X0,X1]x[Y0,Y1] minus the domain
inline std::vector<RectRule> tail_rules(const ProblemSpec& p, double cell) {
    const MertonJumps& m = *p.merton;
    const double X0 = p.xmin + m.mu1 - m.R, X1 = p.xmax + m.mu1 + m.R;
    const double Y0 = p.ymin + m.mu2 - m.R, Y1 = p.ymax + m.mu2 + m.R;
    std::vector<RectRule> out;
    out.push_back(rect_rule(X0, p.xmin, Y0, Y1, cell));
    out.push_back(rect_rule(p.xmax, X1, Y0, Y1, cell));
    out.push_back(rect_rule(p.xmin, p.xmax, Y0, p.ymin, cell));
    out.push_back(rect_rule(p.xmin, p.xmax, p.ymax, Y1, cell));
    return out;
}

inline double tail_cell(const MertonJumps& m) { return 0.25 * std::min(m.s1, m.s2); }

}  // namespace detail

/// int_{R^2 \ Omega} u_far(z,t) g(z - x) dz over the box x + mu +- R, by composite Gauss rules
/// on cells of a quarter jump standard deviation.
inline double merton_tail_source(const ProblemSpec& p, double t, const Vec2& x, double cell = 0.0) {
    if (!p.merton) return 0.0;
    const MertonJumps& m = *p.merton;
    if (cell <= 0.0) cell = detail::tail_cell(m);
    const SeparableGaussian g = m.kernel();
    double s = 0.0;
    for (const auto& r : detail::tail_rules(p, cell))
        for (std::size_t a = 0; a < r.x.size(); ++a)
            for (std::size_t b = 0; b < r.y.size(); ++b) {
                const Vec2 z(r.x[a], r.y[b]);
                s += r.wx[a] * r.wy[b] * m.far_field(z, t) * g(x, z);
            }
    return s;
}

/// Relative Gaussian mass cut off by the truncation box.
inline double merton_truncation_estimate(const MertonJumps& m) {
    return 1.0 - std::erf(m.R / (m.s1 * std::sqrt(2.0))) * std::erf(m.R / (m.s2 * std::sqrt(2.0)));
}

/// Batched tail source at many points through the product structure of the Gaussian.
inline std::vector<double> merton_tail_batch(const ProblemSpec& p, const std::vector<Vec2>& pts, double t) {
    std::vector<double> out(pts.size(), 0.0);
    if (!p.merton || pts.empty()) return out;
    const MertonJumps& m = *p.merton;
    const SeparableGaussian g = m.kernel();
    std::vector<double> ux, uy;
    for (const auto& q : pts) {
        ux.push_back(q.x());
        uy.push_back(q.y());
    }
    auto uniq = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    const std::vector<double> X = uniq(ux), Y = uniq(uy);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(X.size()), static_cast<Eigen::Index>(Y.size()));
    for (const auto& r : detail::tail_rules(p, detail::tail_cell(m))) {
        const Eigen::Index na = static_cast<Eigen::Index>(r.x.size()), nb = static_cast<Eigen::Index>(r.y.size());
        if (na == 0 || nb == 0) continue;
        Eigen::MatrixXd U(na, nb), G1(static_cast<Eigen::Index>(X.size()), na), G2(static_cast<Eigen::Index>(Y.size()), nb);
        for (Eigen::Index a = 0; a < na; ++a)
            for (Eigen::Index b = 0; b < nb; ++b) U(a, b) = r.wx[a] * r.wy[b] * m.far_field(Vec2(r.x[a], r.y[b]), t);
        for (std::size_t i = 0; i < X.size(); ++i)
            for (Eigen::Index a = 0; a < na; ++a) {
                const double d = r.x[a] - X[i] - g.m1;
                G1(static_cast<Eigen::Index>(i), a) = std::exp(-d * d / (2 * g.s1 * g.s1));
            }
        for (std::size_t j = 0; j < Y.size(); ++j)
            for (Eigen::Index b = 0; b < nb; ++b) {
                const double d = r.y[b] - Y[j] - g.m2;
                G2(static_cast<Eigen::Index>(j), b) = std::exp(-d * d / (2 * g.s2 * g.s2));
            }
        T.noalias() += G1 * U * G2.transpose();
    }
    T *= g.amp;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto i = std::lower_bound(X.begin(), X.end(), pts[k].x()) - X.begin();
        const auto j = std::lower_bound(Y.begin(), Y.end(), pts[k].y()) - Y.begin();
        out[k] = T(i, j);
    }
    return out;
}

/// int_Omega g(x,y) S(y) dy by a composite tensor Gauss rule.
inline double integral_of(const ProblemSpec& p, const std::function<double(const Vec2&)>& S, const Vec2& x,
                          int cells = 16, int pts = 4) {
    const auto rx = detail::composite_line(p.xmin, p.xmax, (p.xmax - p.xmin) / cells, pts);
    const auto ry = detail::composite_line(p.ymin, p.ymax, (p.ymax - p.ymin) / cells, pts);
    double s = 0.0;
    for (auto [a, wa] : rx)
        for (auto [b, wb] : ry) {
            const Vec2 y(a, b);
            s += wa * wb * p.g(x, y) * S(y);
        }
    return s;
}

/// Attaches u0, the exact pair (u, A grad u) and f = D^alpha u - div(A grad u) + b.grad u + c u - lambda I u.
inline ProblemSpec manufacture(const SeparableSolution& sol, ProblemSpec spec, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("manufacture: alpha must lie in (0,1)");
    for (auto [ck, bk] : sol.time_terms) {
        (void)ck;
        if (!(bk >= 0.0) || !std::isfinite(bk)) throw UnsupportedForm("manufacture: time exponents must be >= 0");
    }
    const SeparableSolution s = sol;
    const MatrixField A = spec.A;
    const VectorField b = spec.b;
    const ScalarField c = spec.c;
    const double lambda = spec.lambda;
    const bool integral = spec.has_integral();
    const ProblemSpec geometry = spec;
    spec.exact = ExactSolution{[s](const Vec2& x, double t) { return s.S(x) * s.theta(t); },
                               [s, A](const Vec2& x, double t) { return Vec2(A(x, t) * s.grad(x) * s.theta(t)); }};
    spec.u0 = [s](const Vec2& x) { return s.S(x) * s.theta(0.0); };
    spec.f = [s, A, b, c, lambda, integral, alpha, geometry](const Vec2& x, double t) {
        const double th = s.theta(t);
        const Mat2 Ax = A(x, t);
        const Vec2 gS = s.grad(x);
        const Mat2 H = s.hess(x);
        const Vec2 divA = detail::matrix_divergence(A, x, t);
        double elliptic = divA.dot(gS) + (Ax.array() * H.array()).sum();
        double val = s.S(x) * s.caputo_theta(alpha, t) - th * elliptic;
        if (b) val += th * b(x, t).dot(gS);
        if (c) val += th * c(x, t) * s.S(x);
        if (integral) val -= lambda * th * integral_of(geometry, s.S, x);
        return val;
    };
    return spec;
}

namespace detail {

inline Mat2 mat(double a, double b, double c, double d) {
    Mat2 M;
    M << a, b, c, d;
    return M;
}

inline ProblemSpec base_ex72(double T) {
    ProblemSpec p;
    p.T = T;
    p.A = [](const Vec2& x, double t) {
        return mat(1 + 0.1 * x.x() * x.x() * t, 0.1 * x.x() * x.y() * t, 0.1 * x.x() * x.y() * t,
                   1 + 0.2 * x.y() * x.y() * t);
    };
    p.dA_dt = [](const Vec2& x, double) {
        return mat(0.1 * x.x() * x.x(), 0.1 * x.x() * x.y(), 0.1 * x.x() * x.y(), 0.2 * x.y() * x.y());
    };
    p.b = [](const Vec2& x, double t) { return Vec2(x.x() * std::exp(-t), x.y() * std::exp(-t)); };
    p.c = [](const Vec2& x, double t) { return 1.0 - x.x() * x.y() * std::exp(-t); };
    return p;
}

inline double hat(double s) { return s * (1.0 - std::fabs(s)); }

inline ProblemSpec base_ex75(double b2) {
    ProblemSpec p;
    p.T = 1.0;
    p.A = [](const Vec2& x, double t) {
        const double o = x.x() * x.y() * t / 8.0;
        return mat(1.0, o, o, 1.0);
    };
    p.dA_dt = [](const Vec2& x, double) {
        const double o = x.x() * x.y() / 8.0;
        return mat(0.0, o, o, 0.0);
    };
    p.b = [b2](const Vec2& x, double t) { return Vec2(x.x() * x.x() * t, b2 * x.y() * x.y() * t); };
    p.c = [](const Vec2& x, double t) { return x.x() * x.y() * t; };
    p.u0 = [](const Vec2& x) { return hat(x.x()) * hat(x.y()); };
    p.f = [](const Vec2& x, double t) {
        return std::exp(-t) * std::sin(std::numbers::pi * x.x()) * std::sin(std::numbers::pi * x.y());
    };
    return p;
}

inline double basket_far_field(const Vec2& x, double t, double eps) {
    const double s = 1.0 - 0.5 * (std::exp(x.x()) + std::exp(x.y()));
    return 0.5 * (s + std::sqrt(eps * t * eps * t + s * s));
}

inline ProblemSpec base_pricing(double r, double sig1, double sig2, double rho, double L, double eps, double drift1,
                                double drift2, double creact) {
    ProblemSpec p;
    p.xmin = p.ymin = -L;
    p.xmax = p.ymax = L;
    p.T = 1.0;
    const Mat2 A = mat(0.5 * sig1 * sig1, 0.5 * rho * sig1 * sig2, 0.5 * rho * sig1 * sig2, 0.5 * sig2 * sig2);
    p.A = [A](const Vec2&, double) { return A; };
    p.A_static = true;
    p.dA_dt = [](const Vec2&, double) { return Mat2::Zero().eval(); };
    const Vec2 b(-drift1, -drift2);
    p.b = [b](const Vec2&, double) { return b; };
    p.c = [creact](const Vec2&, double) { return creact; };
    p.u0 = [](const Vec2& x) { return std::max(1.0 - 0.5 * (std::exp(x.x()) + std::exp(x.y())), 0.0); };
    p.dirichlet = [eps](const Vec2& x, double t) { return basket_far_field(x, t, eps); };
    p.pricing_weights = true;
    (void)r;
    return p;
}

}  // namespace detail

/// Catalog entry for one example at fractional order alpha.
inline ProblemSpec catalog(ExampleId id, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("catalog: alpha must lie in (0,1)");
    using detail::mat;
    ProblemSpec p;
    switch (id) {
        case ExampleId::Ex7_1: {
            p.T = 0.5;
            p.A = [](const Vec2& x, double) {
                return mat(1 + 0.1 * x.x() * x.x(), 0.1 * x.x() * x.y(), 0.1 * x.x() * x.y(), 1 + 0.2 * x.y() * x.y());
            };
            p.A_static = true;
            p.dA_dt = [](const Vec2&, double) { return Mat2::Zero().eval(); };
            p.c = [](const Vec2& x, double) { return 1.0 - x.x() * x.y() * std::exp(-1.0); };
            p = manufacture(sinsin_solution({{1.0, 0.0}, {1.0, alpha}}), p, alpha);
            p.description = "static A, b = 0, c = 1 - x1 x2 / e, lambda = 0; u = sin sin (1 + t^a), T = 0.5";
            break;
        }
        case ExampleId::Ex7_2: {
            p = detail::base_ex72(0.5);
            p = manufacture(sinsin_solution({{1.0, 0.0}, {1.0, alpha}}), p, alpha);
            p.description = "A(x,t), b = x e^-t, c = 1 - x1 x2 e^-t, lambda = 0; u = sin sin (1 + t^a), T = 0.5";
            break;
        }
        case ExampleId::Ex7_3: {
            p = detail::base_ex72(1.0);
            p.lambda = 0.5;
            p.g_separable = SeparableGaussian{1.0, 0.0, 0.0, std::sqrt(0.5), std::sqrt(0.5)};
            p.g = *p.g_separable;
            p.u0 = [](const Vec2& x) { return detail::hat(x.x()) * detail::hat(x.y()); };
            p.f = [](const Vec2& x, double t) {
                return std::exp(-t) * std::sin(std::numbers::pi * x.x()) * std::sin(std::numbers::pi * x.y());
            };
            p.description = "Ex7_2 coefficients, lambda = 1/2, g = exp(-|x-y|^2), f = e^-t sin sin, T = 1";
            break;
        }
        case ExampleId::Ex7_4: {
            p.T = 1.0;
            p.A = [](const Vec2& x, double t) {
                return mat(2 - std::cos(t), x.x() * x.y(), x.x() * x.y(), 2 - std::sin(t));
            };
            p.dA_dt = [](const Vec2&, double t) { return mat(std::sin(t), 0.0, 0.0, -std::cos(t)); };
            p.b = [](const Vec2& x, double) { return Vec2(1 + 2 * x.x() * x.y(), 1 + x.x() * x.y()); };
            p.c = [](const Vec2&, double t) { return 1.0 - std::sin(t); };
            p = manufacture(sinsin_solution({{1.0, alpha}, {1.0, 3.0}}), p, alpha);
            p.description = "A = [[2-cos t, x1x2],[x1x2, 2-sin t]], b = (1+2x1x2, 1+x1x2), c = 1 - sin t; "
                            "u = sin sin (t^a + t^3), T = 1";
            break;
        }
        case ExampleId::Ex7_5: {
            p = detail::base_ex75(2.0);
            p.description = "A = [[1, x1x2t/8],[x1x2t/8, 1]], b = (x1^2 t, 2x2^2 t), c = x1x2t, lambda = 0, T = 1";
            break;
        }
        case ExampleId::Ex7_6: {
            p = detail::base_ex75(1.0);
            p.lambda = 0.5;
            p.g_separable = SeparableGaussian{0.5, 0.0, 0.0, std::sqrt(0.5), std::sqrt(0.5)};
            p.g = *p.g_separable;
            p.description = "Ex7_5 with b = (x1^2 t, x2^2 t), lambda = 1/2, g = exp(-|x-y|^2)/2, T = 1";
            break;
        }
        case ExampleId::Ex7_7: {
            const double r = 0.06, s = 0.2;
            p = detail::base_pricing(r, s, s, 0.5, 1.0, 1.0, r - 0.5 * s * s, r - 0.5 * s * s, r);
            p.description = "basket put, time-fractional Black-Scholes in log prices: sigma = 0.2, rho = 0.5, "
                            "r = 0.06, L = 1, T = 1";
            break;
        }
        case ExampleId::Ex7_8: {
            const double r = 0.06, s = 0.2, lambda = 0.5;
            MertonJumps m;
            m.s1 = 0.15;
            m.s2 = 0.2;
            m.mu1 = -0.10;
            m.mu2 = 0.10;
            m.R = 6.0 * std::max(m.s1, m.s2);  // Gaussian mass outside below 1e-8
            m.far_field = [](const Vec2& x, double t) { return detail::basket_far_field(x, t, 1.0); };
            const double xi1 = std::expm1(m.mu1 + 0.5 * m.s1 * m.s1);
            const double xi2 = std::expm1(m.mu2 + 0.5 * m.s2 * m.s2);
            p = detail::base_pricing(r, s, s, 0.5, 1.0, 1.0, r - 0.5 * s * s - lambda * xi1, r - 0.5 * s * s - lambda * xi2,
                                     r + lambda);
            p.lambda = lambda;
            p.merton = m;
            p.g_separable = m.kernel();
            p.g = *p.g_separable;
            p.f = [spec = p](const Vec2& x, double t) { return spec.lambda * merton_tail_source(spec, t, x); };
            p.f_batch = [spec = p](const std::vector<Vec2>& pts, double t) {
                auto v = merton_tail_batch(spec, pts, t);
                for (double& e : v) e *= spec.lambda;
                return v;
            };
            p.description = "basket put, time-fractional Merton in log prices: Ex7_7 market plus jumps "
                            "mu_M = (-0.1, 0.1), sigma_M = (0.15, 0.2), lambda = 1/2, T = 1";
            break;
        }
    }
    p.name = to_string(id);
    return p;
}

/// Merton drift correction xi_i = exp(mu_i + s_i^2/2) - 1.
inline Vec2 merton_xi(const MertonJumps& m) {
    return Vec2(std::expm1(m.mu1 + 0.5 * m.s1 * m.s1), std::expm1(m.mu2 + 0.5 * m.s2 * m.s2));
}

struct EigenRange {
    double kappa0 = 0.0, kappa1 = 0.0;
};

inline std::pair<double, double> sym_eigs(const Mat2& M) {
    const double tr = 0.5 * (M(0, 0) + M(1, 1));
    const double d = 0.5 * (M(0, 0) - M(1, 1));
    const double r = std::hypot(d, 0.5 * (M(0, 1) + M(1, 0)));
    return {tr - r, tr + r};
}

/// Eigenvalue range of A over seeded uniform samples of the space-time cylinder.
inline EigenRange sample_eigenvalues(const ProblemSpec& p, int samples = 10000, unsigned seed = 12345) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(p.xmin, p.xmax), uy(p.ymin, p.ymax), ut(0.0, p.T);
    EigenRange r{std::numeric_limits<double>::infinity(), 0.0};
    for (int k = 0; k < samples; ++k) {
        const auto [lo, hi] = sym_eigs(p.A(Vec2(ux(rng), uy(rng)), ut(rng)));
        r.kappa0 = std::min(r.kappa0, lo);
        r.kappa1 = std::max(r.kappa1, hi);
    }
    return r;
}

/// Schur-test bound sqrt(max_x int |g(x,.)| * max_y int |g(.,y)|) on a sample grid.
inline double integral_operator_bound(const ProblemSpec& p, int grid = 24) {
    if (!p.g) return 0.0;
    const auto rx = detail::composite_line(p.xmin, p.xmax, (p.xmax - p.xmin) / 12, 4);
    const auto ry = detail::composite_line(p.ymin, p.ymax, (p.ymax - p.ymin) / 12, 4);
    double row = 0.0, col = 0.0;
    for (int i = 0; i <= grid; ++i)
        for (int j = 0; j <= grid; ++j) {
            const Vec2 x(p.xmin + (p.xmax - p.xmin) * i / grid, p.ymin + (p.ymax - p.ymin) * j / grid);
            double sr = 0.0, sc = 0.0;
            for (auto [a, wa] : rx)
                for (auto [b, wb] : ry) {
                    const Vec2 y(a, b);
                    sr += wa * wb * std::fabs(p.g(x, y));
                    sc += wa * wb * std::fabs(p.g(y, x));
                }
            row = std::max(row, sr);
            col = std::max(col, sc);
        }
    return std::sqrt(row * col);
}

}  // namespace imexl1
