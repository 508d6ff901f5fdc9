#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "fractime.hpp"
#include "special.hpp"

namespace imexl1 {

/// Data of the discrete fractional Gronwall inequality
///   D^alpha (v^n)^2 <= sum_i lambda^n_{n-i} (v^i)^2 + v^n xi^n + (eta^n)^2 + (zeta^n)^2.
/// xi, eta, zeta are stored at index n-1; lambda[n-1][j] = lambda^n_j for j = 0..n.
struct GronwallInstance {
    std::vector<double> v;
    std::vector<double> xi, eta, zeta;
    std::vector<std::vector<double>> lambda;
    double Lambda = 0.0;
    const KernelTable* kernels = nullptr;
    double delta = 2.0;
};

inline double c_delta(double delta) {
    if (!(delta > 1.0)) throw ParameterError("delta must be > 1");
    return delta / (delta - 1.0);
}

/// Largest step admitted by the hypothesis: (delta Gamma(2-alpha) lambda0)^(-1/alpha).
inline double gronwall_step_limit(double alpha, double delta, double lambda0) {
    if (lambda0 <= 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(delta * gamma_fn(2.0 - alpha) * lambda0, -1.0 / alpha);
}

/// Lambda_n from the two-branch definition (max of P^{j,j}/P^{j,j-1} for j > n_alpha).
inline std::vector<double> gronwall_Lambda_n(const KernelTable& k, double Lambda) {
    std::vector<double> out(static_cast<std::size_t>(k.N()) + 1, Lambda);
    double m = 0.0;
    for (int n = k.n_alpha() + 1; n <= k.N(); ++n) {
        m = std::max(m, k.P(n, n) / k.P(n, n - 1));
        out[n] = Lambda * (1.0 + m);
    }
    return out;
}

/// The mu-based upper estimate Lambda (1 + max_{n_alpha < j <= N} mu_j^alpha / alpha).
inline double gronwall_Lambda_mu_bound(const KernelTable& k, double Lambda) {
    double m = 0.0;
    for (int j = k.n_alpha() + 1; j <= k.N(); ++j) m = std::max(m, std::pow(k.grid().mu(j), k.alpha()) / k.alpha());
    return Lambda * (1.0 + m);
}

namespace detail {

inline void validate(const GronwallInstance& g) {
    if (!g.kernels) throw InputError("GronwallInstance: kernels not set");
    const int N = g.kernels->N();
    auto n = static_cast<std::size_t>(N);
    if (g.v.empty() || g.xi.size() != n || g.eta.size() != n || g.zeta.size() != n || g.lambda.size() != n)
        throw ShapeError("GronwallInstance: sequence lengths do not match N");
    for (int i = 1; i <= N; ++i) {
        if (g.lambda[i - 1].size() != static_cast<std::size_t>(i) + 1) throw ShapeError("GronwallInstance: lambda row length");
        double s = 0.0;
        for (double l : g.lambda[i - 1]) {
            if (l < 0.0) throw InputError("GronwallInstance: negative lambda");
            s += l;
        }
        if (s > g.Lambda * (1.0 + 1e-14)) throw HypothesisViolation("GronwallInstance: row sum exceeds Lambda");
        if (g.xi[i - 1] < 0.0 || g.eta[i - 1] < 0.0 || g.zeta[i - 1] < 0.0)
            throw InputError("GronwallInstance: negative forcing");
    }
    const auto& grid = g.kernels->grid();
    for (int i = 2; i <= N; ++i)
        if (grid.dt(i - 1) > grid.dt(i) * (1.0 + 1e-14)) throw HypothesisViolation("GronwallInstance: steps not nondecreasing");
    double l0 = 0.0;
    for (int i = 1; i <= N; ++i) l0 = std::max(l0, g.lambda[i - 1][0]);
    if (grid.max_step() > gronwall_step_limit(g.kernels->alpha(), g.delta, l0))
        throw HypothesisViolation("GronwallInstance: maximum step exceeds (delta Gamma(2-alpha) max lambda_0)^(-1/alpha)");
}

}  // namespace detail

/// Right side of the Gronwall conclusion for n = 1..N (index n-1).
inline std::vector<double> gronwall_bound(const GronwallInstance& g) {
    detail::validate(g);
    const KernelTable& k = *g.kernels;
    const int N = k.N();
    const double a = k.alpha();
    const double cd = c_delta(g.delta);
    const auto Ln = gronwall_Lambda_n(k, g.Lambda);

    std::vector<double> out(static_cast<std::size_t>(N));
    double max_pxi = 0.0, max_eta = 0.0, max_pzeta = 0.0;
    for (int n = 1; n <= N; ++n) {
        double pxi = 0.0, pz = 0.0;
        for (int i = 1; i <= n; ++i) {
            pxi += k.P(n, i) * g.xi[i - 1];
            pz += k.P(n, i) * g.zeta[i - 1] * g.zeta[i - 1];
        }
        max_pxi = std::max(max_pxi, pxi);
        max_pzeta = std::max(max_pzeta, std::sqrt(pz));
        max_eta = std::max(max_eta, g.eta[n - 1]);
        const double tna = std::pow(k.grid().t(n), a);
        const double phi = g.v[0] + max_pxi + std::sqrt(2.0 * tna) * max_eta + max_pzeta;
        out[n - 1] = cd * mittag_leffler(a, cd * Ln[n] * tna) * phi;
    }
    return out;
}

/// Build v^1..v^N (v^0 taken from g.v[0]) so that the recurrence holds with equality.
/// Each step is a quadratic in v^n whose leading coefficient K^{n,n} - lambda^n_0 is positive
/// under the step hypothesis.
inline std::vector<double> saturate_recurrence(const GronwallInstance& g) {
    if (!g.kernels || g.v.empty()) throw InputError("saturate_recurrence: kernels and v^0 required");
    const KernelTable& k = *g.kernels;
    const int N = k.N();
    std::vector<double> v(static_cast<std::size_t>(N) + 1, 0.0);
    std::vector<double> w(static_cast<std::size_t>(N) + 1, 0.0);  // (v^j)^2
    v[0] = g.v[0];
    w[0] = v[0] * v[0];
    for (int n = 1; n <= N; ++n) {
        const auto& lam = g.lambda[n - 1];
        const double a = k.K(n, n) - lam[0];
        if (!(a > 0.0)) throw HypothesisViolation("saturate_recurrence: K^{n,n} <= lambda^n_0");
        double c0 = k.K(n, 1) * w[0];
        for (int j = 1; j < n; ++j) c0 += (k.K(n, j + 1) - k.K(n, j)) * w[j];
        for (int i = 0; i < n; ++i) c0 += lam[n - i] * w[i];
        c0 += g.eta[n - 1] * g.eta[n - 1] + g.zeta[n - 1] * g.zeta[n - 1];
        const double b = g.xi[n - 1];
        const double s = (b + std::sqrt(b * b + 4.0 * a * c0)) / (2.0 * a);
        v[n] = s;
        w[n] = s * s;
    }
    return v;
}

struct Lemma31Report {
    // signed margins rhs - lhs per step (index n-1); negative means violated
    std::vector<double> margin_plain;      // (i)
    std::vector<double> margin_weighted;   // (ii) with the Lipschitz term
    std::vector<double> margin_exact;      // (ii) in the intermediate form with the exact correction sum
    std::vector<double> scale;             // magnitude used for relative tolerances
    double L_B = 0.0;
    double beta0 = 0.0;
    double worst_plain = std::numeric_limits<double>::infinity();
    double worst_weighted = std::numeric_limits<double>::infinity();
    double worst_exact = std::numeric_limits<double>::infinity();
    // worst margin divided by the step scale
    double worst_relative = std::numeric_limits<double>::infinity();

    bool pass(double rtol = 1e-12) const { return worst_relative >= -rtol; }
};

/// Evaluate both inequalities of the discrete energy lemma on a history phi^0..phi^N with
/// time-dependent symmetric positive definite weights B^0..B^N (Euclidean inner product).
/// L_B and beta0 are measured from the data when passed as negative values.
inline Lemma31Report check_lemma31(const std::vector<Eigen::VectorXd>& phi, const std::vector<Eigen::MatrixXd>& B,
                                   const KernelTable& k, double L_B = -1.0, double beta0 = -1.0) {
    const int N = k.N();
    if (phi.size() != static_cast<std::size_t>(N) + 1 || B.size() != static_cast<std::size_t>(N) + 1)
        throw ShapeError("check_lemma31: need N+1 vectors and N+1 matrices");
    const Eigen::Index d = phi[0].size();
    double bmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < B.size(); ++j) {
        if (phi[j].size() != d || B[j].rows() != d || B[j].cols() != d) throw ShapeError("check_lemma31: dimension mismatch");
        if ((B[j] - B[j].transpose()).norm() > 1e-13 * (1.0 + B[j].norm()))
            throw InputError("check_lemma31: B is not symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B[j], Eigen::EigenvaluesOnly);
        if (!(es.eigenvalues()(0) > 0.0)) throw InputError("check_lemma31: B is not positive definite");
        bmin = std::min(bmin, es.eigenvalues()(0));
    }
    const auto& grid = k.grid();
    Lemma31Report r;
    if (L_B < 0.0) {
        L_B = 0.0;
        for (int j = 0; j < N; ++j) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B[j + 1] - B[j], Eigen::EigenvaluesOnly);
            const double nrm = es.eigenvalues().cwiseAbs().maxCoeff();
            L_B = std::max(L_B, nrm / grid.dt(j + 1));
        }
    }
    if (beta0 < 0.0) beta0 = bmin;
    r.L_B = L_B;
    r.beta0 = beta0;

    const double g2a = gamma_fn(2.0 - k.alpha());
    std::vector<double> nrm2(phi.size()), bnrm2(phi.size());
    std::vector<Eigen::VectorXd> Bphi(phi.size());
    for (std::size_t j = 0; j < phi.size(); ++j) {
        nrm2[j] = phi[j].squaredNorm();
        Bphi[j] = B[j] * phi[j];
        bnrm2[j] = phi[j].dot(Bphi[j]);
    }
    for (int n = 1; n <= N; ++n) {
        // (i)
        Eigen::VectorXd dphi = Eigen::VectorXd::Zero(d), dbphi = Eigen::VectorXd::Zero(d);
        double dn2 = 0.0, dbn2 = 0.0, sc = 0.0;
        for (int j = 1; j <= n; ++j) {
            const double K = k.K(n, j);
            dphi += K * (phi[j] - phi[j - 1]);
            dbphi += K * (Bphi[j] - Bphi[j - 1]);
            dn2 += K * (nrm2[j] - nrm2[j - 1]);
            dbn2 += K * (bnrm2[j] - bnrm2[j - 1]);
            sc += K * (nrm2[j] + nrm2[j - 1] + bnrm2[j] + bnrm2[j - 1]);
        }
        const double m1 = dphi.dot(phi[n]) - 0.5 * dn2;
        const double pol = L_B * std::pow(grid.t(n), 1.0 - k.alpha()) / (2.0 * beta0 * g2a) * bnrm2[n];
        const double m2 = dbphi.dot(phi[n]) + pol - 0.5 * dbn2;
        double corr = 0.0;
        for (int j = 0; j < n; ++j) corr += k.K(n, j + 1) * (phi[n].dot(B[j + 1] * phi[n]) - phi[n].dot(B[j] * phi[n]));
        const double m3 = dbphi.dot(phi[n]) - 0.5 * corr - 0.5 * dbn2;
        sc = std::max(sc, std::numeric_limits<double>::min());
        r.margin_plain.push_back(m1);
        r.margin_weighted.push_back(m2);
        r.margin_exact.push_back(m3);
        r.scale.push_back(sc);
        r.worst_plain = std::min(r.worst_plain, m1);
        r.worst_weighted = std::min(r.worst_weighted, m2);
        r.worst_exact = std::min(r.worst_exact, m3);
        r.worst_relative = std::min({r.worst_relative, m1 / sc, m2 / sc, m3 / sc});
    }
    return r;
}

}  // namespace imexl1
