#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "errors.hpp"
#include "fractime.hpp"
#include "gronwall.hpp"
#include "mesh2d.hpp"
#include "mixedfem.hpp"
#include "problems.hpp"
#include "special.hpp"

namespace imexl1 {

/// One checked property: pass flag and the worst observed value against its limit.
struct PropertyResult {
    std::string suite, name;
    bool pass = false;
    double worst = 0.0;
    double limit = 0.0;
    std::string note;
};

struct VerifyOptions {
    unsigned seed = 12345;
    std::optional<double> alpha;  // fixed alpha for every draw (robustness runs)
    int kernel_triples = 100;
    int gronwall_instances = 1000;
    int lemma_histories = 1000;
    int fem_fields = 50;
};

inline void print_results(std::ostream& os, const std::vector<PropertyResult>& rs) {
    for (const auto& r : rs) {
        os << (r.pass ? "PASS " : "FAIL ") << r.suite << "/" << r.name << "  worst=" << r.worst << " limit=" << r.limit;
        if (!r.note.empty()) os << "  (" << r.note << ")";
        os << "\n";
    }
}

inline bool all_pass(const std::vector<PropertyResult>& rs) {
    return std::all_of(rs.begin(), rs.end(), [](const PropertyResult& r) { return r.pass; });
}

namespace detail {

inline double draw_alpha(std::mt19937_64& rng, const VerifyOptions& o, double lo = 0.05, double hi = 0.99) {
    if (o.alpha) return *o.alpha;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace detail

// ---------------------------------------------------------------- kernels

inline std::vector<PropertyResult> verify_kernels(const VerifyOptions& o = {}) {
    std::mt19937_64 rng(o.seed);
    std::uniform_int_distribution<int> dN(2, 200);
    std::uniform_real_distribution<double> dg(1.0, 10.0);

    PropertyResult ident{"kernels", "sum_j P^{n,j} K^{j,i} = 1", true, 0.0, 1e-12, ""};
    PropertyResult bound_a{"kernels", "0 <= P^{n,j} <= Gamma(2-a) dt_j^a", true, 0.0, 0.0, "max P / bound - 1"};
    PropertyResult mono{"kernels", "K^{n,j-1} <= K^{n,j}, no reversals", true, 0.0, 0.0, "count of reversals"};
    PropertyResult ratio{"kernels", "uniform P^{n,n}/P^{n,n-1} = 1/(2-2^{1-a})", true, 0.0, 1e-12, ""};
    int violations = 0, ties = 0;
    ident.worst = 0.0;
    bound_a.worst = -1.0;
    for (int s = 0; s < o.kernel_triples; ++s) {
        const int N = dN(rng);
        const double gamma = dg(rng);
        const double a = detail::draw_alpha(rng, o);
        const GradedTimeGrid g = build_graded_grid(N, gamma, 1.0);
        const KernelTable k(g, a);
        const double g2a = gamma_fn(2.0 - a);
        for (int n = 1; n <= N; ++n) {
            for (int i = 1; i <= n; ++i) {
                double sum = 0.0;
                for (int j = i; j <= n; ++j) sum += k.P(n, j) * k.K(j, i);
                ident.worst = std::max(ident.worst, std::fabs(sum - 1.0));
            }
            for (int j = 1; j <= n; ++j) {
                const double p = k.P(n, j), b = g2a * std::pow(g.dt(j), a);
                if (p < 0.0 || p > b) bound_a.pass = false;
                bound_a.worst = std::max(bound_a.worst, p / b - 1.0);
                // ties: exact gap below one ulp (steps ~1e-20 near t = 0 at large gamma)
                if (j >= 2 && k.K(n, j - 1) > k.K(n, j)) ++violations;
                if (j >= 2 && k.K(n, j - 1) == k.K(n, j)) ++ties;
            }
        }
        // uniform grid with the same N and alpha
        const KernelTable u(build_graded_grid(N, 1.0, 1.0), a);
        const double want = 1.0 / (2.0 - std::pow(2.0, 1.0 - a));
        for (int n = 2; n <= N; ++n)
            ratio.worst = std::max(ratio.worst, std::fabs(u.P(n, n) / u.P(n, n - 1) - want) / want);
    }
    ident.pass = ident.worst <= ident.limit;
    mono.worst = violations;
    mono.pass = violations == 0;
    mono.note = "reversals; ties (gap below double resolution): " + std::to_string(ties);
    ratio.pass = ratio.worst <= ratio.limit;

    // L1 exactness for phi = t on graded grids
    PropertyResult exact{"kernels", "L1 exact on phi(t) = t", true, 0.0, 1e-12, "relative"};
    for (int s = 0; s < 20; ++s) {
        const int N = dN(rng);
        const double a = detail::draw_alpha(rng, o);
        const GradedTimeGrid g = build_graded_grid(N, dg(rng), 1.0);
        const KernelTable k(g, a);
        std::vector<double> phi(g.times.begin(), g.times.end());
        for (int n = 1; n <= N; ++n) {
            const double want = std::pow(g.t(n), 1.0 - a) / gamma_fn(2.0 - a);
            exact.worst = std::max(exact.worst, std::fabs(l1_derivative(phi, k, n) - want) / want);
        }
    }
    exact.pass = exact.worst <= exact.limit;

    // order on phi = t^2, uniform grids
    PropertyResult order{"kernels", "L1 order on phi(t) = t^2", true, 0.0, 0.0, "observed slope vs 2-a-0.1"};
    {
        const double a = o.alpha ? *o.alpha : 0.5;
        std::vector<double> hs, es;
        for (int N : {16, 32, 64, 128}) {
            const GradedTimeGrid g = build_graded_grid(N, 1.0, 1.0);
            const KernelTable k(g, a);
            std::vector<double> phi;
            for (double t : g.times) phi.push_back(t * t);
            double e = 0.0;
            for (int n = 1; n <= N; ++n) e = std::max(e, std::fabs(l1_derivative(phi, k, n) - caputo_power(2.0, a, g.t(n))));
            hs.push_back(1.0 / N);
            es.push_back(e);
        }
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < hs.size(); ++i) {
            mx += std::log(hs[i]) / hs.size();
            my += std::log(es[i]) / hs.size();
        }
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < hs.size(); ++i) {
            sxy += (std::log(hs[i]) - mx) * (std::log(es[i]) - my);
            sxx += (std::log(hs[i]) - mx) * (std::log(hs[i]) - mx);
        }
        order.worst = sxy / sxx;
        order.limit = 2.0 - a - 0.1;
        order.pass = order.worst >= order.limit;
    }
    return {ident, bound_a, mono, ratio, exact, order};
}

// ---------------------------------------------------------------- gronwall

/// Random instance satisfying the hypotheses: nondecreasing steps, row sums <= Lambda,
/// max dt below the step limit for max lambda_0.
inline GronwallInstance random_gronwall_instance(std::mt19937_64& rng, const KernelTable& k, double delta) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int N = k.N();
    const double a = k.alpha();
    GronwallInstance g;
    g.kernels = &k;
    g.delta = delta;
    // lambda_0 at most the hypothesis limit
    const double l0max = std::pow(k.grid().max_step(), -a) / (delta * gamma_fn(2.0 - a));
    // keep C_delta Lambda_n T^a inside the Mittag-Leffler range
    const double cd = c_delta(delta);
    const double mu_fac = gronwall_Lambda_mu_bound(k, 1.0);
    // z^{1/alpha} must stay well inside exp range
    const double zcap = std::min(50.0, 0.5 * std::pow(600.0, a));
    const double Lcap = zcap / (cd * mu_fac * std::pow(k.grid().T, a));
    g.Lambda = std::min(Lcap, l0max * (1.0 + U(rng))) * U(rng);
    g.v = {U(rng) * 2.0};
    g.lambda.resize(N);
    for (int n = 1; n <= N; ++n) {
        auto& row = g.lambda[n - 1];
        row.assign(n + 1, 0.0);
        std::vector<double> w(n + 1);
        double s = 0.0;
        for (auto& x : w) s += (x = U(rng) * U(rng));
        const double total = g.Lambda * U(rng);
        for (int j = 0; j <= n; ++j) row[j] = total * w[j] / s;
        row[0] = std::min(row[0], l0max * U(rng));
        g.xi.push_back(U(rng) < 0.3 ? 0.0 : U(rng));
        g.eta.push_back(U(rng) < 0.3 ? 0.0 : U(rng));
        g.zeta.push_back(U(rng) < 0.3 ? 0.0 : U(rng));
    }
    return g;
}

inline std::vector<PropertyResult> verify_gronwall(const VerifyOptions& o = {}) {
    std::mt19937_64 rng(o.seed + 1);
    std::uniform_int_distribution<int> dN(1, 64);
    std::uniform_real_distribution<double> dg(1.0, 6.0), dd(1.05, 3.0), dT(0.1, 2.0);

    PropertyResult dfgi{"gronwall", "saturated recurrence v^n <= bound^n", true, 0.0, 1.0, "max v/bound"};
    for (int s = 0; s < o.gronwall_instances; ++s) {
        const double a = detail::draw_alpha(rng, o);
        const KernelTable k(build_graded_grid(dN(rng), dg(rng), dT(rng)), a);
        const GronwallInstance g = random_gronwall_instance(rng, k, dd(rng));
        const auto v = saturate_recurrence(g);
        const auto b = gronwall_bound(g);
        for (int n = 1; n <= k.N(); ++n) {
            if (b[n - 1] > 0.0) dfgi.worst = std::max(dfgi.worst, v[n] / b[n - 1]);
            if (!(v[n] <= b[n - 1])) dfgi.pass = false;
        }
    }

    PropertyResult lem_i{"gronwall", "1/2 D^a |phi|^2 <= (D^a phi, phi)", true, 0.0, -1e-12, "worst margin / scale"};
    PropertyResult lem_ii{"gronwall", "B-weighted form with the L_B term", true, 0.0, -1e-12, "worst margin / scale"};
    lem_i.worst = lem_ii.worst = std::numeric_limits<double>::infinity();
    std::uniform_int_distribution<int> dd_dim(1, 50), dN2(1, 40);
    std::normal_distribution<double> Z(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int s = 0; s < o.lemma_histories; ++s) {
        const int d = dd_dim(rng), N = dN2(rng);
        const double a = detail::draw_alpha(rng, o);
        const KernelTable k(build_graded_grid(N, dg(rng), dT(rng)), a);
        std::vector<Eigen::VectorXd> phi(N + 1);
        const bool walk = U(rng) < 0.5;
        for (int j = 0; j <= N; ++j) {
            phi[j] = Eigen::VectorXd(d);
            for (int i = 0; i < d; ++i) phi[j](i) = Z(rng);
            if (walk && j > 0) phi[j] = phi[j - 1] + 0.3 * phi[j];
        }
        // B(t) = B0 + t B1, positive definite on [0, T]
        Eigen::MatrixXd G(d, d), H(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                G(i, j) = Z(rng);
                H(i, j) = Z(rng);
            }
        const Eigen::MatrixXd B0 = G * G.transpose() / d + Eigen::MatrixXd::Identity(d, d);
        Eigen::MatrixXd B1 = 0.5 * (H + H.transpose());
        B1 *= 0.9 / (B1.norm() * k.grid().T + 1e-300) * U(rng);
        std::vector<Eigen::MatrixXd> B(N + 1);
        for (int j = 0; j <= N; ++j) B[j] = B0 + k.grid().t(j) * B1;
        const Lemma31Report r = check_lemma31(phi, B, k);
        for (std::size_t n = 0; n < r.scale.size(); ++n) {
            lem_i.worst = std::min(lem_i.worst, r.margin_plain[n] / r.scale[n]);
            lem_ii.worst = std::min(lem_ii.worst, r.margin_weighted[n] / r.scale[n]);
        }
    }
    lem_i.pass = lem_i.worst >= lem_i.limit;
    lem_ii.pass = lem_ii.worst >= lem_ii.limit;
    return {dfgi, lem_i, lem_ii};
}

// ---------------------------------------------------------------- fem

namespace detail {

/// Random polynomial vector field of total degree <= deg with its divergence.
struct PolyField {
    std::vector<std::array<int, 2>> mono;
    std::vector<double> cx, cy;

    Vec2 operator()(const Vec2& p) const {
        Vec2 v = Vec2::Zero();
        for (std::size_t i = 0; i < mono.size(); ++i) {
            const double m = std::pow(p.x(), mono[i][0]) * std::pow(p.y(), mono[i][1]);
            v += Vec2(cx[i] * m, cy[i] * m);
        }
        return v;
    }
    double div(const Vec2& p) const {
        double s = 0.0;
        for (std::size_t i = 0; i < mono.size(); ++i) {
            const int a = mono[i][0], b = mono[i][1];
            if (a > 0) s += cx[i] * a * std::pow(p.x(), a - 1) * std::pow(p.y(), b);
            if (b > 0) s += cy[i] * b * std::pow(p.x(), a) * std::pow(p.y(), b - 1);
        }
        return s;
    }
};

inline PolyField random_poly_field(std::mt19937_64& rng, int deg) {
    std::normal_distribution<double> Z(0.0, 1.0);
    PolyField f;
    for (int a = 0; a <= deg; ++a)
        for (int b = 0; a + b <= deg; ++b) {
            f.mono.push_back({a, b});
            f.cx.push_back(Z(rng));
            f.cy.push_back(Z(rng));
        }
    return f;
}

/// Skewed structured mesh: interior vertices shifted deterministically.
inline TriMesh skewed_mesh(int n) {
    TriMesh base = rect_mesh(-1, 1, -1, 1, n, n);
    std::vector<Vec2> v = base.vertices;
    const double h = 2.0 / n;
    for (auto& p : v)
        if (std::fabs(std::fabs(p.x()) - 1) > 1e-12 && std::fabs(std::fabs(p.y()) - 1) > 1e-12)
            p += 0.2 * h * Vec2(std::sin(3.1 * p.x() + 1.3 * p.y()), std::cos(2.3 * p.x() - 0.7 * p.y()));
    return TriMesh(std::move(v), base.triangles);
}

}  // namespace detail

/// Mixed solve of -div(A grad u) = f with u = gD on the boundary (no time derivative).
inline std::pair<Vec, Vec> stationary_mixed_solve(const MixedSpace& S, const MatrixField& A, const ScalarField& f,
                                                  const ScalarField& gD) {
    Coefficients co{A, {}, {}, gD};
    const AssembledSystem sys = assemble(S, co, 0.0, 0.0);
    Vec rhs(S.n_flux + S.n_pressure);
    rhs << sys.rhs_flux, f ? Vec(load_vector(S, [&](const Vec2& x) { return f(x, 0.0); })) : Vec(Vec::Zero(S.n_pressure));
    const SpMat K = sys.block();
    Eigen::SparseLU<SpMat> lu(K);
    if (lu.info() != Eigen::Success) throw StepFailure(0, "stationary solve: factorization failed");
    const Vec x = lu.solve(rhs);
    return {x.head(S.n_flux), x.tail(S.n_pressure)};
}

inline std::vector<PropertyResult> verify_fem(const VerifyOptions& o = {}) {
    std::mt19937_64 rng(o.seed + 2);
    std::vector<PropertyResult> out;

    PropertyResult comm{"fem", "commuting diagram |div Pi_h w - P_h div w|", true, 0.0, 1e-11, ""};
    for (int order : {0, 1}) {
        for (const TriMesh& m : {rect_mesh(-1, 1, -1, 1, 4, 4), detail::skewed_mesh(5)}) {
            const MixedSpace S = build_space(m, order);
            for (int s = 0; s < o.fem_fields; ++s) {
                const auto w = detail::random_poly_field(rng, order + 1);
                const Vec dv = discrete_divergence(S, fortin_project(S, w));
                const Vec pd = l2_project(S, [&](const Vec2& x) { return w.div(x); });
                comm.worst = std::max(comm.worst, pressure_norm(S, dv - pd));
            }
        }
    }
    comm.pass = comm.worst <= comm.limit;
    out.push_back(comm);

    PropertyResult patch{"fem", "stationary patch test (linear u, A = I)", true, 0.0, 1e-10, "max of u and sigma errors"};
    for (int order : {0, 1}) {
        const MixedSpace S = build_space(detail::skewed_mesh(4), order);
        for (int s = 0; s < 5; ++s) {
            std::normal_distribution<double> Z(0.0, 1.0);
            const double c0 = Z(rng), c1 = Z(rng), c2 = Z(rng);
            const ScalarField u = [=](const Vec2& x, double) { return c0 + c1 * x.x() + c2 * x.y(); };
            const auto [sig, uh] =
                stationary_mixed_solve(S, [](const Vec2&, double) { return Mat2::Identity(); }, {}, u);
            const Vec up = l2_project(S, [&](const Vec2& x) { return u(x, 0.0); });
            const Vec sp = fortin_project(S, [=](const Vec2&) { return Vec2(c1, c2); });
            patch.worst = std::max({patch.worst, pressure_norm(S, uh - up), flux_norm(S, sig - sp)});
        }
    }
    patch.pass = patch.worst <= patch.limit;
    out.push_back(patch);

    PropertyResult ray{"fem", "M_B Rayleigh quotients in [beta0, gamma0] (Ex7_2 A)", true, 0.0, 0.0,
                       "worst relative excursion outside the interval, eigensolver rounding 1e-12"};
    {
        const ProblemSpec p = catalog(ExampleId::Ex7_2, o.alpha ? *o.alpha : 0.5);
        const MixedSpace S = build_space(detail::skewed_mesh(4), 1);
        const SpMat M0 = flux_mass(S);
        EigenRange er = sample_eigenvalues(p);
        for (double t : {0.0, 0.1, 0.25, 0.5}) {
            // include the quadrature points actually used
            for (int e = 0; e < S.num_elements(); ++e)
                for (int q = 0; q < S.rule.size(); ++q) {
                    const auto [lo, hi] = sym_eigs(p.A(S.point(e, S.rule.bary[q]), t));
                    er.kappa0 = std::min(er.kappa0, lo);
                    er.kappa1 = std::max(er.kappa1, hi);
                }
        }
        const double beta0 = 1.0 / er.kappa1, gamma0 = 1.0 / er.kappa0;
        double worst = 0.0;
        for (double t : {0.0, 0.1, 0.25, 0.5}) {
            const SpMat MB = assemble(S, p.coefficients(), t, 0.0).M_B;
            Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Eigen::MatrixXd(MB), Eigen::MatrixXd(M0),
                                                                          Eigen::EigenvaluesOnly);
            const double lo = ges.eigenvalues().minCoeff(), hi = ges.eigenvalues().maxCoeff();
            worst = std::max({worst, (beta0 - lo) / beta0, (hi - gamma0) / gamma0});
        }
        ray.worst = worst;
        ray.limit = 1e-12;
        ray.pass = worst <= ray.limit;
    }
    out.push_back(ray);
    return out;
}

inline std::vector<PropertyResult> verify_suite(const std::string& suite, const VerifyOptions& o = {}) {
    if (suite == "kernels") return verify_kernels(o);
    if (suite == "gronwall") return verify_gronwall(o);
    if (suite == "fem") return verify_fem(o);
    if (suite == "all") {
        auto a = verify_kernels(o);
        for (auto& r : verify_gronwall(o)) a.push_back(r);
        for (auto& r : verify_fem(o)) a.push_back(r);
        return a;
    }
    throw ConfigError("unknown suite '" + suite + "' (kernels, gronwall, fem, all)");
}

}  // namespace imexl1
