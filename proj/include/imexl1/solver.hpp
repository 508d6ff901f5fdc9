#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#ifdef IMEXL1_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "coupling.hpp"
#include "errors.hpp"
#include "fractime.hpp"
#include "mixedfem.hpp"
#include "problems.hpp"
#include "special.hpp"

namespace imexl1 {

enum class LinearSolver { Direct, Iterative };
enum class StepPolicy { Warn, Enforce };
enum class SourceTreatment { Extrapolated, Current };

struct SolverConfig {
    LinearSolver linear_solver = LinearSolver::Direct;
    double residual_tol = 1e-10;
    bool keep_flux_history = true;
    StepPolicy step_policy = StepPolicy::Warn;
    SourceTreatment source = SourceTreatment::Extrapolated;
    bool condense = true;  // eliminate the element-local pressure before the sparse solve
    double epsilon = 0.1;
    double delta = 1.1;
    std::function<void(int, double)> on_step;  // (n, t_n)
};

struct StateHistory {
    std::vector<double> times;
    std::vector<Vec> pressure_states;
    std::vector<Vec> flux_states;
    std::vector<double> norm_u, norm_sigma;  // index n = 0..N
    std::vector<double> norm_Ef;             // index n = 1..N (entry 0 unused)
    std::vector<double> residual;            // relative block residual per step (entry 0: constitutive solve)
    int steps() const { return static_cast<int>(pressure_states.size()) - 1; }
};

inline void write_checkpoints(std::ostream& os, const StateHistory& h) {
    os << "n,t_n,norm_u,norm_sigma,norm_Ef,residual\n";
    os.precision(6);
    os << std::scientific;
    for (int n = 0; n <= h.steps(); ++n)
        os << n << "," << h.times[n] << "," << h.norm_u[n] << "," << h.norm_sigma[n] << ","
           << (n > 0 ? h.norm_Ef[n] : 0.0) << "," << h.residual[n] << "\n";
    os.unsetf(std::ios::floatfield);
}

/// Sampled coefficient suprema and the resulting step-size bounds.
struct StepBounds {
    double max_btilde = 0.0;  // b^T A^{-1} b
    double max_ctilde = 0.0;  // max(0, -c)
    double max_c = 0.0;       // max |c|
    double max_Ainv = 0.0;    // ||A^{-1}||_2
    double max_A = 0.0;       // ||A||_2
    double max_dA = 0.0;      // ||dA/dt||_2
    double L_B = 0.0;
    double beta0 = 0.0;
    double lambda_S = 0.0;
    double lambda_F = 0.0;
    double lambda_F_lipschitz = 0.0;  // the L_B part of lambda_F alone
    double dt_u = std::numeric_limits<double>::infinity();
    double dt_flux = std::numeric_limits<double>::infinity();
    double dt_tilde = std::numeric_limits<double>::infinity();         // min(dt_u, dt_flux)
    double dt_tilde_tables = std::numeric_limits<double>::infinity();  // min(dt_u, Lipschitz part of the flux bound)
    double max_dt = 0.0;
    bool satisfied = true;
    bool unbounded() const { return std::isinf(dt_tilde); }
};

struct StepConditionOptions {
    int sample_N = 64;  // mesh nodes of the h-coupled mesh for this N, times t_1..t_N
};

/// Step bounds from coefficients sampled at mesh nodes and grid times.
inline StepBounds step_condition(const ProblemSpec& p, const GradedTimeGrid& grid, double alpha, double epsilon,
                                 double delta, const StepConditionOptions& opt = {}) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("step_condition: alpha must lie in (0,1)");
    if (!(epsilon > 0.0)) throw ParameterError("step_condition: epsilon must be > 0");
    if (!(delta > 1.0)) throw ParameterError("step_condition: delta must be > 1");
    StepBounds s;
    const TriMesh mesh = coupled_mesh(p, opt.sample_N, alpha);
    const GradedTimeGrid sg = build_graded_grid(opt.sample_N, grid.gamma, p.T);
    for (int n = 1; n <= sg.N; ++n) {
        const double t = sg.t(n);
        for (const Vec2& x : mesh.vertices) {
            const Mat2 A = p.A(x, t);
            const auto [lo, hi] = sym_eigs(A);
            if (!(lo > 0.0)) throw CoefficientError("step_condition: A not positive definite at a sample point");
            s.max_Ainv = std::max(s.max_Ainv, 1.0 / lo);
            s.max_A = std::max(s.max_A, hi);
            if (p.b) {
                const Vec2 b = p.b(x, t);
                s.max_btilde = std::max(s.max_btilde, b.dot(A.ldlt().solve(b)));
            }
            if (p.c) {
                const double c = p.c(x, t);
                s.max_ctilde = std::max(s.max_ctilde, std::max(0.0, -c));
                s.max_c = std::max(s.max_c, std::fabs(c));
            }
            if (!p.A_static) {
                const auto [dl, dh] = sym_eigs(p.dA(x, t));
                s.max_dA = std::max(s.max_dA, std::max(std::fabs(dl), std::fabs(dh)));
            }
        }
    }
    const double g2a = gamma_fn(2.0 - alpha);
    s.L_B = s.max_Ainv * s.max_Ainv * s.max_dA;
    s.beta0 = 1.0 / s.max_A;
    s.lambda_S = 0.5 * s.max_btilde + 2.0 * s.max_ctilde + epsilon * std::fabs(p.lambda);
    s.lambda_F_lipschitz = s.L_B * std::pow(p.T, 1.0 - alpha) / (s.beta0 * g2a);
    s.lambda_F = 0.5 * (1.0 + epsilon) * s.max_btilde + s.lambda_F_lipschitz;
    auto bound = [&](double l) {
        return l > 0.0 ? std::pow(delta * l * g2a, -1.0 / alpha) : std::numeric_limits<double>::infinity();
    };
    s.dt_u = bound(s.lambda_S);
    s.dt_flux = bound(s.lambda_F);
    s.dt_tilde = std::min(s.dt_u, s.dt_flux);
    s.dt_tilde_tables = std::min(s.dt_u, bound(s.lambda_F_lipschitz));
    s.max_dt = grid.max_step();
    s.satisfied = s.max_dt <= s.dt_tilde;
    return s;
}

namespace detail {

/// Quadrature points of the space with weights and pressure basis values.
struct QuadCache {
    std::vector<Vec2> x;
    Eigen::MatrixXd wq;  // np x Q: weight * area * basis
    Eigen::VectorXd w;   // weight * area
    int nq = 0, np = 0;

    explicit QuadCache(const MixedSpace& S) : nq(S.rule.size()), np(S.np_loc) {
        const int Q = S.num_elements() * nq;
        x.resize(Q);
        wq.resize(np, Q);
        w.resize(Q);
        Eigen::VectorXd q;
        for (int t = 0; t < S.num_elements(); ++t) {
            const double area = S.m().area(t);
            for (int k = 0; k < nq; ++k) {
                const int i = t * nq + k;
                x[i] = S.point(t, S.rule.bary[k]);
                S.pressure_basis(t, x[i], q);
                w(i) = S.rule.w[k] * area;
                wq.col(i) = w(i) * q;
            }
        }
    }

    Eigen::VectorXd values(const ProblemSpec& p, double t) const {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.size()));
        if (p.f_batch) {
            const auto b = p.f_batch(x, t);
            for (std::size_t i = 0; i < b.size(); ++i) v(static_cast<Eigen::Index>(i)) = b[i];
        } else if (p.f) {
            for (std::size_t i = 0; i < x.size(); ++i) v(static_cast<Eigen::Index>(i)) = p.f(x[i], t);
        }
        return v;
    }

    Vec load(const Eigen::VectorXd& fv) const {
        const int nt = static_cast<int>(x.size()) / nq;
        Vec out = Vec::Zero(static_cast<Eigen::Index>(nt) * np);
        for (int t = 0; t < nt; ++t)
            for (int k = 0; k < nq; ++k) out.segment(t * np, np) += fv(t * nq + k) * wq.col(t * nq + k);
        return out;
    }

    double norm(const Eigen::VectorXd& fv) const { return std::sqrt((w.array() * fv.array().square()).sum()); }
};

class BlockSolver {
public:
    explicit BlockSolver(const SolverConfig& c) : cfg_(c) {}

    Vec solve(const SpMat& A, const Vec& b, int step, bool symmetric = false) {
        if (cfg_.linear_solver == LinearSolver::Iterative) {
            Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> it;
            it.preconditioner().setDroptol(1e-6);
            it.preconditioner().setFillfactor(20);
            it.setTolerance(cfg_.residual_tol * 0.1);
            it.setMaxIterations(5000);
            it.compute(A);
            if (it.info() != Eigen::Success) throw StepFailure(step, "preconditioner setup failed");
            Vec x = it.solve(b);
            if (it.info() != Eigen::Success) throw StepFailure(step, "iterative solver did not converge");
            return x;
        }
        const bool fresh = A.nonZeros() != nnz_ || A.rows() != rows_ || symmetric != symmetric_;
        nnz_ = A.nonZeros();
        rows_ = A.rows();
        symmetric_ = symmetric;
        Vec x;
        if (symmetric) {
            if (fresh) llt_.analyzePattern(A);
            llt_.factorize(A);
            if (llt_.info() != Eigen::Success) throw StepFailure(step, "sparse Cholesky factorization failed");
            x = llt_.solve(b);
            const Vec r = b - A * x;
            if (r.norm() > cfg_.residual_tol * 1e-2 * std::max(b.norm(), 1e-300)) x += llt_.solve(r);
        } else {
            if (fresh) lu_.analyzePattern(A);
            lu_.factorize(A);
            if (lu_.info() != Eigen::Success) throw StepFailure(step, "sparse LU factorization failed");
            x = lu_.solve(b);
            const Vec r = b - A * x;
            if (r.norm() > cfg_.residual_tol * 1e-2 * std::max(b.norm(), 1e-300)) x += lu_.solve(r);
        }
        return x;
    }

private:
    SolverConfig cfg_;
#ifdef IMEXL1_HAVE_UMFPACK
    Eigen::UmfPackLU<SpMat> lu_;
#else
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
#endif
    Eigen::SimplicialLLT<SpMat> llt_;
    Eigen::Index nnz_ = -1, rows_ = -1;
    bool symmetric_ = false;
};

}  // namespace detail

/// sigma from (B sigma, w) = <u_D, w.n> - (u, div w) at time t.
inline Vec constitutive_flux(const MixedSpace& S, const ProblemSpec& p, const Vec& u, double t) {
    const AssembledSystem sys = assemble(S, p.coefficients(), t, 0.0);
    Eigen::SimplicialLDLT<SpMat> ldlt(sys.M_B);
    if (ldlt.info() != Eigen::Success) throw StepFailure(0, "flux mass matrix factorization failed");
    return ldlt.solve(sys.rhs_flux - sys.D.transpose() * u);
}

/// The IMEX-L1 mixed scheme on the given grid.
inline StateHistory run(const ProblemSpec& p, const MixedSpace& S, const GradedTimeGrid& grid, const KernelTable& k,
                        const SolverConfig& cfg = {}) {
    if (!(cfg.residual_tol > 0.0)) throw ConfigError("residual_tol must be > 0");
    if (k.N() != grid.N) throw ShapeError("run: kernel table and grid differ in N");
    if (std::fabs(grid.T - p.T) > 1e-12 * p.T) throw ConfigError("run: grid end time differs from the problem's T");
    if (!p.u0) throw ConfigError("run: problem has no initial condition");
    if (cfg.step_policy == StepPolicy::Enforce) {
        const StepBounds sb = step_condition(p, grid, k.alpha(), cfg.epsilon, cfg.delta);
        if (!sb.satisfied)
            throw ConfigError("step condition violated: max dt = " + std::to_string(sb.max_dt) +
                              " exceeds the bound " + std::to_string(sb.dt_tilde));
    }
    const int N = grid.N;
    const int nf = S.n_flux, np = S.n_pressure;
    const detail::QuadCache qc(S);
    const SpMat MV = pressure_mass(S);
    IntegralOperator I;
    const bool integral = p.has_integral();
    if (integral) I = IntegralOperator(S, p.g, p.g_separable);

    StateHistory h;
    h.times = grid.times;
    h.pressure_states.reserve(N + 1);
    h.pressure_states.push_back(l2_project(S, p.u0));
    const Vec sigma0 = constitutive_flux(S, p, h.pressure_states[0], 0.0);
    h.flux_states.push_back(sigma0);
    h.norm_u.push_back(pressure_norm(S, h.pressure_states[0]));
    h.norm_sigma.push_back(flux_norm(S, sigma0));
    h.norm_Ef.push_back(0.0);
    h.residual.push_back(0.0);

    // source values at the quadrature points, f^{n-1} and f^{n-2}
    Eigen::VectorXd f_prev = qc.values(p, 0.0), f_prev2;
    detail::BlockSolver solver(cfg);
    for (int n = 1; n <= N; ++n) {
        const double tn = grid.t(n);
        const double Knn = k.K(n, n);
        Eigen::VectorXd Ef;
        if (cfg.source == SourceTreatment::Current) {
            Ef = qc.values(p, tn);
        } else {
            const auto [w1, w2] = extrapolation_weights(k, n);
            Ef = w2 != 0.0 ? Eigen::VectorXd(w1 * f_prev + w2 * f_prev2) : Eigen::VectorXd(w1 * f_prev);
        }
        Vec rhs_p = MV * l1_history(h.pressure_states, k, n) + qc.load(Ef);
        if (integral) rhs_p += p.lambda * I.apply(extrapolate(h.pressure_states, k, n));

        Vec sigma, u;
        double rn = 0.0, nb = 0.0;
        if (cfg.condense) {
            const CondensedSystem sys = assemble_condensed(S, p.coefficients(), tn, Knn);
            sigma = solver.solve(sys.K, sys.reduced_rhs(S, rhs_p), n, sys.symmetric);
            u = sys.recover_pressure(S, sigma, rhs_p);
            rn = sys.block_residual(S, sigma, u, rhs_p);
            nb = std::sqrt(sys.rhs_flux.squaredNorm() + rhs_p.squaredNorm());
        } else {
            const AssembledSystem sys = assemble(S, p.coefficients(), tn, Knn);
            Vec rhs(nf + np);
            rhs << sys.rhs_flux, rhs_p;
            const SpMat Ablk = sys.block();
            const Vec x = solver.solve(Ablk, rhs, n);
            nb = rhs.norm();
            rn = (Ablk * x - rhs).norm() / std::max(nb, 1e-300);
            sigma = x.head(nf);
            u = x.tail(np);
        }
        if (!std::isfinite(rn) || !sigma.allFinite() || !u.allFinite()) throw StepFailure(n, "non-finite solution");
        if (nb > 0.0 && rn > cfg.residual_tol)
            throw StepFailure(n, "block residual " + std::to_string(rn) + " exceeds tolerance");
        h.norm_u.push_back(pressure_norm(S, u));
        h.norm_sigma.push_back(flux_norm(S, sigma));
        h.norm_Ef.push_back(qc.norm(Ef));
        h.residual.push_back(nb > 0.0 ? rn : 0.0);
        h.pressure_states.push_back(std::move(u));
        if (cfg.keep_flux_history) h.flux_states.push_back(std::move(sigma));
        else h.flux_states.back() = std::move(sigma);

        if (n < N && cfg.source == SourceTreatment::Extrapolated) {
            f_prev2 = std::move(f_prev);
            f_prev = qc.values(p, tn);
        }
        if (cfg.on_step) cfg.on_step(n, tn);
    }
    return h;
}

}  // namespace imexl1
