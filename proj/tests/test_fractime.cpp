#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include <imexl1.hpp>

using namespace imexl1;

namespace {

// midpoint rule on the substitution s = t - u^(1/(1-alpha)), which removes the kernel singularity
double caputo_by_quadrature(double beta, double alpha, double t, int n = 200000) {
    // D^a t^b = 1/Gamma(1-a) int_0^t (t-s)^{-a} b s^{b-1} ds; u = (t-s)^{1-a}
    const double umax = std::pow(t, 1.0 - alpha);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = (i + 0.5) * umax / n;
        const double s = t - std::pow(u, 1.0 / (1.0 - alpha));
        sum += beta * std::pow(std::max(s, 0.0), beta - 1.0);
    }
    return sum * (umax / n) / ((1.0 - alpha) * std::tgamma(1.0 - alpha));
}

}  // namespace

TEST(GradedGrid, UniformTimes) {
    const auto g = build_graded_grid(4, 1.0, 1.0);
    const std::vector<double> want{0, 0.25, 0.5, 0.75, 1.0};
    ASSERT_EQ(g.times.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_DOUBLE_EQ(g.times[i], want[i]);
}

TEST(GradedGrid, TableStepSizes) {
    // gamma = (2 - 0.2)/0.2 + 0.1
    EXPECT_NEAR(build_graded_grid(4, 9.1, 0.5).dt(4), 4.635e-01, 5e-4);
    // the tabulated 1.335e-01 at N = 64 corresponds to T = 1; T = 0.5 halves it
    EXPECT_NEAR(build_graded_grid(64, 9.1, 1.0).dt(64), 1.335e-01, 5e-4);
    EXPECT_NEAR(build_graded_grid(64, 9.1, 0.5).dt(64), 6.675e-02, 5e-5);
}

TEST(GradedGrid, Invariants) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> G(1.0, 10.0);
    for (int s = 0; s < 50; ++s) {
        const int N = 1 + s * 7;
        const double gamma = G(rng), T = 0.5 + s * 0.01;
        const auto g = build_graded_grid(N, gamma, T);
        EXPECT_EQ(g.t(0), 0.0);
        EXPECT_EQ(g.t(N), T);
        for (int n = 1; n <= N; ++n) {
            EXPECT_GT(g.t(n), g.t(n - 1));
            const long double exact = std::pow(static_cast<long double>(n) / N, static_cast<long double>(gamma)) * T;
            const double e = static_cast<double>(exact);
            const double ulp = std::nextafter(e, INFINITY) - e;
            EXPECT_LE(std::fabs(g.t(n) - exact), ulp);
            EXPECT_LE(g.dt(n), gamma * T * std::pow(n, gamma - 1.0) * std::pow(N, -gamma) * (1 + 1e-12));
            if (n >= 2) EXPECT_LE(g.dt(n - 1), g.dt(n));
        }
    }
}

TEST(GradedGrid, RejectsBadInput) {
    EXPECT_THROW(build_graded_grid(0, 1.0, 1.0), ParameterError);
    EXPECT_THROW(build_graded_grid(4, 0.9, 1.0), ParameterError);
    EXPECT_THROW(build_graded_grid(4, 2.0, 0.0), ParameterError);
}

TEST(Kernels, DiagonalAndSubdiagonalClosedForms) {
    for (double a : {0.1, 0.5, 0.9}) {
        const KernelTable k(build_graded_grid(10, 1.0, 10.0), a);  // dt = 1
        const double g2a = std::tgamma(2.0 - a);
        for (int n = 1; n <= 10; ++n) {
            EXPECT_NEAR(k.K(n, n), 1.0 / g2a, 1e-14);
            if (n >= 2) EXPECT_NEAR(k.K(n, n - 1), (std::pow(2.0, 1.0 - a) - 1.0) / g2a, 1e-14);
        }
    }
    const KernelTable k(build_graded_grid(5, 1.0, 5.0), 0.5);
    EXPECT_NEAR(k.K(3, 3), 1.128379, 1e-6);
}

TEST(Kernels, DiagonalIsExactOnGradedGrids) {
    const auto g = build_graded_grid(30, 4.3, 0.7);
    const KernelTable k(g, 0.37);
    for (int n = 1; n <= 30; ++n) EXPECT_EQ(k.K(n, n), 1.0 / (std::pow(g.dt(n), 0.37) * gamma_fn(2.0 - 0.37)));
}

TEST(Kernels, UniformRatio) {
    const KernelTable k(build_graded_grid(40, 1.0, 1.0), 0.5);
    for (int n = 2; n <= 40; ++n) EXPECT_NEAR(k.P(n, n) / k.P(n, n - 1), 1.7071068, 1e-7);
}

TEST(Kernels, IdentityBoundsMonotonicity) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> G(1.0, 10.0), A(0.05, 0.99);
    for (int s = 0; s < 20; ++s) {
        const int N = 5 + 9 * s;
        const auto g = build_graded_grid(N, G(rng), 1.0);
        const double a = A(rng);
        const KernelTable k(g, a);
        for (int n = 1; n <= N; ++n) {
            for (int i = 1; i <= n; ++i) {
                double sum = 0.0;
                for (int j = i; j <= n; ++j) sum += k.P(n, j) * k.K(j, i);
                EXPECT_NEAR(sum, 1.0, 1e-12);
            }
            for (int j = 1; j <= n; ++j) {
                EXPECT_GT(k.K(n, j), 0.0);
                EXPECT_GE(k.P(n, j), 0.0);
                EXPECT_LE(k.P(n, j), gamma_fn(2.0 - a) * std::pow(g.dt(j), a));
                if (j >= 2) EXPECT_LE(k.K(n, j - 1), k.K(n, j));
            }
        }
    }
}

TEST(Kernels, StrictMonotonicityAtModerateGrading) {
    const KernelTable k(build_graded_grid(100, 3.0, 1.0), 0.5);
    for (int n = 2; n <= 100; ++n)
        for (int j = 2; j <= n; ++j) EXPECT_LT(k.K(n, j - 1), k.K(n, j));
}

TEST(Kernels, BoundC) {
    // sum_j P^{n,j} k_{1+m a - a}(t_j) <= k_{1+m a}(t_n), m = 0, 1
    for (double a : {0.2, 0.5, 0.8}) {
        const auto g = build_graded_grid(60, (2 - a) / a + 0.1, 1.0);
        const KernelTable k(g, a);
        for (int n = 1; n <= 60; ++n)
            for (int m = 0; m <= 1; ++m) {
                double s = 0.0;
                for (int j = 1; j <= n; ++j) s += k.P(n, j) * kernel_k(1.0 + m * a - a, g.t(j));
                EXPECT_LE(s, kernel_k(1.0 + m * a, g.t(n)) * (1.0 + 1e-12)) << "a=" << a << " n=" << n << " m=" << m;
            }
    }
}

TEST(Kernels, RejectsAlpha) {
    const auto g = build_graded_grid(4, 1.0, 1.0);
    EXPECT_THROW(build_kernels(g, 0.0), ParameterError);
    EXPECT_THROW(build_kernels(g, 1.0), ParameterError);
}

TEST(L1, ConstantHistoryIsZero) {
    const KernelTable k(build_graded_grid(8, 2.0, 1.0), 0.4);
    const std::vector<double> h(9, 3.25);
    for (int n = 1; n <= 8; ++n) EXPECT_EQ(l1_derivative(h, k, n), 0.0);
}

TEST(L1, ExactOnLinearData) {
    for (double gamma : {1.0, 2.5, 7.0}) {
        const auto g = build_graded_grid(40, gamma, 1.3);
        const double a = 0.45;
        const KernelTable k(g, a);
        for (int n = 1; n <= 40; ++n) {
            const double want = std::pow(g.t(n), 1 - a) / std::tgamma(2 - a);
            EXPECT_NEAR(l1_derivative(g.times, k, n), want, 1e-12 * want);
        }
    }
}

TEST(L1, QuadraticOnUniformGrid) {
    const int N = 64;
    const auto g = build_graded_grid(N, 1.0, 1.0);
    const KernelTable k(g, 0.5);
    std::vector<double> h(N + 1);
    for (int n = 0; n <= N; ++n) h[n] = g.t(n) * g.t(n);
    double worst = 0.0;
    for (int n = 1; n <= N; ++n)
        worst = std::max(worst, std::fabs(l1_derivative(h, k, n) - 2 * std::pow(g.t(n), 1.5) / std::tgamma(2.5)));
    EXPECT_LT(worst, std::pow(1.0 / N, 1.5));
}

TEST(L1, VectorHistoryAndShapeErrors) {
    const auto g = build_graded_grid(3, 1.0, 1.0);
    const KernelTable k(g, 0.5);
    std::vector<Eigen::VectorXd> h{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 2), Eigen::Vector2d(2, 4)};
    const Eigen::VectorXd d = l1_derivative(h, k, 2);
    EXPECT_NEAR(d(1), 2 * d(0), 1e-15);
    h[2] = Eigen::Vector3d(1, 2, 3);
    EXPECT_THROW(l1_derivative(h, k, 2), ShapeError);
}

TEST(Extrapolation, Branches) {
    const auto g = build_graded_grid(10, 3.0, 1.0);
    const KernelTable k(g, 0.2);  // n_alpha = 5
    EXPECT_EQ(k.n_alpha(), 5);
    std::vector<double> h{1.0, 2.0, 7.0, 11.0};
    EXPECT_EQ(extrapolate(h, k, 3), 7.0);
    // linear data reproduced past n_alpha
    for (int n = 6; n <= 10; ++n) EXPECT_NEAR(extrapolate(g.times, k, n), g.t(n), 1e-15);
    EXPECT_THROW(extrapolate(h, k, 0), DomainError);

    const KernelTable u(build_graded_grid(10, 1.0, 1.0), 0.5);
    const std::vector<double> x{0, 1, 5, 2};
    // mu = 1 only up to rounding of the node times
    EXPECT_NEAR(extrapolate(x, u, 4), 2 * x[3] - x[2], 1e-14);
}

TEST(Extrapolation, NAlphaUsesFloor) {
    EXPECT_EQ(n_alpha_of(0.5, 100), 2);
    EXPECT_EQ(n_alpha_of(0.25, 100), 4);
    EXPECT_EQ(n_alpha_of(0.3, 100), 3);
    EXPECT_EQ(n_alpha_of(0.01, 20), 20);
}

TEST(Special, MittagLeffler) {
    for (double a : {0.1, 0.5, 0.99}) EXPECT_EQ(mittag_leffler(a, 0.0), 1.0);
    for (double z : {-1.0, 0.5, 3.0}) EXPECT_NEAR(mittag_leffler(1.0, z), std::exp(z), 1e-12 * std::exp(z));
    // E_{1/2}(z) = exp(z^2) erfc(-z)
    for (double z : {-2.0, -0.5, 1.0, 2.5}) {
        const double want = std::exp(z * z) * std::erfc(-z);
        EXPECT_NEAR(mittag_leffler(0.5, z), want, 1e-10 * want);
    }
    EXPECT_NEAR(mittag_leffler(0.5, 1.0), 5.008980080762283, 1e-12);
    double prev = 1.0;
    for (double z = 0.1; z < 6; z += 0.1) {
        const double e = mittag_leffler(0.3, z);
        EXPECT_GE(e, prev);
        prev = e;
    }
    EXPECT_THROW(mittag_leffler(0.5, 101.0), RangeError);
}

TEST(Special, CaputoPower) {
    for (double a : {0.3, 0.5, 0.8}) EXPECT_NEAR(caputo_power(a, a, 0.7), std::tgamma(1 + a), 1e-13);
    EXPECT_NEAR(caputo_power(1.0, 0.5, 1.0), 1.128379, 1e-6);
    EXPECT_NEAR(caputo_power(3.0, 0.5, 1.0), 6.0 / (1.875 * std::sqrt(M_PI)), 1e-13);
    EXPECT_NEAR(caputo_power(1.0, 0.5, 1.0), caputo_by_quadrature(1.0, 0.5, 1.0), 1e-6);
    EXPECT_NEAR(caputo_power(3.0, 0.5, 1.0), caputo_by_quadrature(3.0, 0.5, 1.0), 1e-5);
    EXPECT_NEAR(caputo_power(0.5, 0.5, 0.3), caputo_by_quadrature(0.5, 0.5, 0.3), 1e-3);
    EXPECT_EQ(caputo_power(2.0, 0.5, 0.0), 0.0);
    EXPECT_THROW(caputo_power(0.0, 0.5, 1.0), DomainError);
}

TEST(Special, GammaAccuracy) {
    for (double x = 0.05; x < 50; x *= 1.37) EXPECT_NEAR(gamma_fn(x) / std::tgamma(x), 1.0, 1e-13) << x;
}
