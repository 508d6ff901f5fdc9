#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <imexl1.hpp>

using namespace imexl1;

namespace {

// -div(A grad u) + b.grad u + c u - lambda I u for u(.,t), by fourth-order differences of sigma = A grad u
double strong_operator(const ProblemSpec& p, const Vec2& x, double t) {
    const double h = 1e-3;
    auto sig = [&](const Vec2& y) { return p.exact->sigma(y, t); };
    auto d = [&](const Vec2& e, int comp) {
        return (-sig(x + 2 * h * e)(comp) + 8 * sig(x + h * e)(comp) - 8 * sig(x - h * e)(comp) +
                sig(x - 2 * h * e)(comp)) /
               (12 * h);
    };
    double val = -(d(Vec2(1, 0), 0) + d(Vec2(0, 1), 1));
    const Vec2 grad = p.A(x, t).inverse() * p.exact->sigma(x, t);
    if (p.b) val += p.b(x, t).dot(grad);
    if (p.c) val += p.c(x, t) * p.exact->u(x, t);
    return val;
}

double caputo_of_exact(double alpha, const std::vector<std::pair<double, double>>& terms, double t) {
    double s = 0.0;
    for (auto [c, b] : terms)
        if (b > 0) s += c * std::tgamma(1 + b) / std::tgamma(1 + b - alpha) * std::pow(t, b - alpha);
    return s;
}

}  // namespace

TEST(Catalog, Ex71Coefficients) {
    const ProblemSpec p = catalog(ExampleId::Ex7_1, 0.3);
    EXPECT_TRUE(p.A(Vec2(0, 0), 0.2).isApprox(Mat2::Identity()));
    EXPECT_FALSE(static_cast<bool>(p.b));
    EXPECT_NEAR(p.c(Vec2(0.5, -0.7), 0.1), 1 + 0.35 * std::exp(-1.0), 1e-15);
    EXPECT_EQ(p.lambda, 0.0);
    EXPECT_FALSE(p.has_integral());
}

TEST(Catalog, Ex75StartsAtIdentity) {
    const ProblemSpec p = catalog(ExampleId::Ex7_5, 0.5);
    for (const Vec2 x : {Vec2(0.3, -0.9), Vec2(-1, 1), Vec2(0.5, 0.5)}) EXPECT_TRUE(p.A(x, 0.0).isApprox(Mat2::Identity()));
}

TEST(Catalog, MertonDrift) {
    const ProblemSpec p = catalog(ExampleId::Ex7_8, 0.5);
    ASSERT_TRUE(p.merton.has_value());
    const Vec2 xi = merton_xi(*p.merton);
    EXPECT_NEAR(xi.x(), std::exp(-0.10 + 0.15 * 0.15 / 2) - 1, 1e-15);
    EXPECT_NEAR(xi.x(), -0.0849257, 1e-7);
    EXPECT_EQ(p.lambda, 0.5);
}

TEST(Catalog, NamesAndErrors) {
    for (ExampleId id : all_examples()) {
        EXPECT_EQ(parse_example(to_string(id)), id);
        EXPECT_EQ(catalog(id, 0.5).name, to_string(id));
    }
    EXPECT_EQ(parse_example("7.3"), ExampleId::Ex7_3);
    EXPECT_THROW(parse_example("Ex9_9"), CatalogError);
    EXPECT_THROW(catalog(ExampleId::Ex7_1, 1.0), ParameterError);
}

TEST(Catalog, SymmetricPositiveDefinite) {
    for (ExampleId id : all_examples()) {
        const ProblemSpec p = catalog(id, 0.5);
        const EigenRange r = sample_eigenvalues(p);
        EXPECT_GT(r.kappa0, 0.0) << to_string(id);
        EXPECT_LT(r.kappa1, 10.0) << to_string(id);
        const Mat2 A = p.A(Vec2(0.3, -0.4), 0.5 * p.T);
        EXPECT_EQ(A(0, 1), A(1, 0));
    }
}

TEST(Catalog, ExactSolutionsSolveTheStrongForm) {
    const double alpha = 0.5;
    const std::vector<std::pair<ExampleId, std::vector<std::pair<double, double>>>> cases{
        {ExampleId::Ex7_1, {{1.0, 0.0}, {1.0, alpha}}},
        {ExampleId::Ex7_2, {{1.0, 0.0}, {1.0, alpha}}},
        {ExampleId::Ex7_4, {{1.0, alpha}, {1.0, 3.0}}}};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-0.95, 0.95);
    for (const auto& [id, terms] : cases) {
        const ProblemSpec p = catalog(id, alpha);
        ASSERT_TRUE(p.exact.has_value());
        for (int s = 0; s < 20; ++s) {
            const Vec2 x(U(rng), U(rng));
            const double t = 0.25;
            const double S = std::sin(std::numbers::pi * x.x()) * std::sin(std::numbers::pi * x.y());
            const double lhs = S * caputo_of_exact(alpha, terms, t) + strong_operator(p, x, t);
            EXPECT_NEAR(lhs, p.f(x, t), 1e-8) << to_string(id);
            // sigma = A grad u
            const double th = 1e-6;
            const Vec2 g((p.exact->u(x + Vec2(th, 0), t) - p.exact->u(x - Vec2(th, 0), t)) / (2 * th),
                         (p.exact->u(x + Vec2(0, th), t) - p.exact->u(x - Vec2(0, th), t)) / (2 * th));
            EXPECT_LE((p.A(x, t) * g - p.exact->sigma(x, t)).norm(), 1e-8);
        }
    }
}

TEST(Manufacture, TimeIndependentAndZero) {
    ProblemSpec base = catalog(ExampleId::Ex7_1, 0.5);
    base.exact.reset();
    const ProblemSpec st = manufacture(sinsin_solution({{1.0, 0.0}}), base, 0.5);
    const ProblemSpec z = manufacture(sinsin_solution({{0.0, 0.0}}), base, 0.5);
    for (const Vec2 x : {Vec2(0.1, 0.2), Vec2(-0.5, 0.7)}) {
        EXPECT_NEAR(st.f(x, 0.3), strong_operator(st, x, 0.3), 1e-8);
        EXPECT_NEAR(st.f(x, 0.3), st.f(x, 0.1), 1e-15);
        EXPECT_EQ(z.f(x, 0.3), 0.0);
    }
    EXPECT_THROW(manufacture(sinsin_solution({{1.0, -0.5}}), base, 0.5), UnsupportedForm);
}

TEST(Manufacture, IntegralTermEntersSource) {
    ProblemSpec p = catalog(ExampleId::Ex7_1, 0.5);
    p.exact.reset();
    p.lambda = 0.5;
    p.g = [](const Vec2& x, const Vec2& y) { return std::exp(-(x - y).squaredNorm()); };
    const ProblemSpec q = manufacture(sinsin_solution({{1.0, 0.0}, {1.0, 0.5}}), p, 0.5);
    const Vec2 x(0.2, -0.3);
    const double t = 0.4;
    const double Iu = integral_of(q, [](const Vec2& y) {
        return std::sin(std::numbers::pi * y.x()) * std::sin(std::numbers::pi * y.y());
    }, x, 64) * (1 + std::sqrt(t));
    const double S = std::sin(std::numbers::pi * x.x()) * std::sin(std::numbers::pi * x.y());
    EXPECT_NEAR(q.f(x, t), S * caputo_power(0.5, 0.5, t) + strong_operator(q, x, t) - 0.5 * Iu, 1e-8);
}

TEST(MertonTail, ZeroWithoutJumps) {
    EXPECT_EQ(merton_tail_source(catalog(ExampleId::Ex7_7, 0.5), 0.5, Vec2(0, 0)), 0.0);
}

TEST(MertonTail, UnitFarFieldClosedForm) {
    // far field 1, centred jumps: tail = P(box) - P(domain) for the Gaussian centred at x
    ProblemSpec p = catalog(ExampleId::Ex7_8, 0.5);
    MertonJumps& m = *p.merton;
    m.mu1 = m.mu2 = 0.0;
    m.s1 = m.s2 = 0.2;
    m.R = 0.8;
    m.far_field = [](const Vec2&, double) { return 1.0; };
    const double s = 0.2 * std::sqrt(2.0);
    const double want = std::pow(std::erf(1.8 / s), 2) - std::pow(std::erf(1.0 / s), 2);
    // want is a difference of two numbers near 1
    EXPECT_NEAR(merton_tail_source(p, 0.3, Vec2(0, 0)), want, 1e-14);
    // Gaussian mass outside the R box, R = 4 sigma
    EXPECT_NEAR(merton_truncation_estimate(m), 1.0 - std::pow(std::erf(4.0 / std::sqrt(2.0)), 2), 1e-15);
}

TEST(MertonTail, AgainstFineQuadratureAndBatch) {
    const ProblemSpec p = catalog(ExampleId::Ex7_8, 0.5);
    const std::vector<Vec2> pts{Vec2(0.9, 0.8), Vec2(-0.95, 0.1), Vec2(0.0, 0.0)};
    const auto batch = merton_tail_batch(p, pts, 0.7);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double coarse = merton_tail_source(p, 0.7, pts[i]);
        const double fine = merton_tail_source(p, 0.7, pts[i], detail::tail_cell(*p.merton) / 4);
        EXPECT_NEAR(coarse, fine, 1e-4 * std::fabs(fine));
        EXPECT_NEAR(batch[i], coarse, 1e-12 * std::fabs(coarse) + 1e-300);
    }
}

TEST(IntegralBound, FiniteForGaussians) {
    for (ExampleId id : {ExampleId::Ex7_3, ExampleId::Ex7_6, ExampleId::Ex7_8}) {
        const double c = integral_operator_bound(catalog(id, 0.5));
        EXPECT_GT(c, 0.0);
        EXPECT_TRUE(std::isfinite(c));
    }
    EXPECT_EQ(integral_operator_bound(catalog(ExampleId::Ex7_1, 0.5)), 0.0);
}
