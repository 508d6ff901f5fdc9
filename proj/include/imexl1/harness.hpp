#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coupling.hpp"
#include "errors.hpp"
#include "fractime.hpp"
#include "mesh2d.hpp"
#include "mixedfem.hpp"
#include "problems.hpp"
#include "quadrature.hpp"
#include "solver.hpp"

namespace imexl1 {

enum class TimeWeight { None, HalfAlpha, Linear, OnePlusHalfAlpha };

inline double time_weight(TimeWeight w, double t, double alpha) {
    switch (w) {
        case TimeWeight::None: return 1.0;
        case TimeWeight::HalfAlpha: return std::pow(t, 0.5 * alpha);
        case TimeWeight::Linear: return t;
        case TimeWeight::OnePlusHalfAlpha: return std::pow(t, 1.0 + 0.5 * alpha);
    }
    return 1.0;
}

inline std::string to_string(TimeWeight w) {
    switch (w) {
        case TimeWeight::None: return "none";
        case TimeWeight::HalfAlpha: return "t^a/2";
        case TimeWeight::Linear: return "t";
        case TimeWeight::OnePlusHalfAlpha: return "t^(1+a/2)";
    }
    return "none";
}

inline TimeWeight parse_time_weight(const std::string& s) {
    if (s == "none" || s == "1") return TimeWeight::None;
    if (s == "t^a/2" || s == "half-alpha" || s == "half") return TimeWeight::HalfAlpha;
    if (s == "t" || s == "linear") return TimeWeight::Linear;
    if (s == "t^(1+a/2)" || s == "one-plus-half-alpha" || s == "pricing") return TimeWeight::OnePlusHalfAlpha;
    throw InputError("unknown time weight '" + s + "' (none, t^a/2, t, t^(1+a/2))");
}

/// Time weights of E_u, E_sigma and E_inf.
struct ErrorWeights {
    TimeWeight u = TimeWeight::None;
    TimeWeight sigma = TimeWeight::HalfAlpha;
    TimeWeight inf = TimeWeight::HalfAlpha;

    static ErrorWeights standard() { return {}; }
    static ErrorWeights pricing() {
        return {TimeWeight::Linear, TimeWeight::OnePlusHalfAlpha, TimeWeight::OnePlusHalfAlpha};
    }
    static ErrorWeights for_problem(const ProblemSpec& p) { return p.pricing_weights ? pricing() : standard(); }
};

/// Pointwise values of the comparison solution (exact or fine reference) at a fixed point set.
struct Target {
    std::function<void(double, Eigen::VectorXd&)> u;
    std::function<void(double, Eigen::Matrix2Xd&)> sigma;
};
using TargetFactory = std::function<Target(const std::vector<Vec2>&)>;

inline TargetFactory exact_target(const ExactSolution& ex) {
    return [ex](const std::vector<Vec2>& pts) {
        Target t;
        t.u = [ex, pts](double time, Eigen::VectorXd& out) {
            out.resize(static_cast<Eigen::Index>(pts.size()));
            for (std::size_t i = 0; i < pts.size(); ++i) out(static_cast<Eigen::Index>(i)) = ex.u(pts[i], time);
        };
        t.sigma = [ex, pts](double time, Eigen::Matrix2Xd& out) {
            out.resize(2, static_cast<Eigen::Index>(pts.size()));
            if (!ex.sigma) throw InputError("exact solution has no flux");
            for (std::size_t i = 0; i < pts.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = ex.sigma(pts[i], time);
        };
        return t;
    };
}

/// Basis values of a space at fixed points with known elements.
struct PointBasis {
    std::vector<int> elem;
    Eigen::MatrixXd q;                                    // np_loc x P
    std::vector<Eigen::Matrix<double, 2, Eigen::Dynamic>> phi;  // 2 x nf_loc each

    PointBasis() = default;
    PointBasis(const MixedSpace& S, const std::vector<Vec2>& x, std::vector<int> elements, bool with_flux = true)
        : elem(std::move(elements)) {
        const auto P = static_cast<Eigen::Index>(x.size());
        q.resize(S.np_loc, P);
        Eigen::VectorXd qq;
        Eigen::RowVectorXd div;
        if (with_flux) phi.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            S.pressure_basis(elem[i], x[i], qq);
            q.col(static_cast<Eigen::Index>(i)) = qq;
            if (with_flux) S.flux_basis(elem[i], x[i], phi[i], div);
        }
    }

    void pressure(const MixedSpace& S, const Vec& u, Eigen::VectorXd& out) const {
        out.resize(q.cols());
        for (Eigen::Index i = 0; i < q.cols(); ++i) out(i) = q.col(i).dot(u.segment(elem[i] * S.np_loc, S.np_loc));
    }

    void flux(const MixedSpace& S, const Vec& s, Eigen::Matrix2Xd& out) const {
        if (phi.size() != elem.size()) throw InputError("PointBasis: flux values not prepared");
        out.resize(2, static_cast<Eigen::Index>(elem.size()));
        Eigen::VectorXd loc(S.nf_loc);
        for (std::size_t i = 0; i < elem.size(); ++i) {
            for (int k = 0; k < S.nf_loc; ++k) loc(k) = s(S.flux_dof[elem[i]][k]);
            out.col(static_cast<Eigen::Index>(i)) = phi[i] * loc;
        }
    }
};

inline std::vector<int> locate_all(const TriMesh& m, const std::vector<Vec2>& x) {
    std::vector<int> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = m.locate(x[i], 1e-10).triangle;
    return out;
}

/// Fine run at (h/2, 2N) on the red-refined mesh, linear in time between fine nodes.
class ReferenceSolution {
public:
    ReferenceSolution(const ProblemSpec& p, const MixedSpace& coarse, const GradedTimeGrid& grid, double alpha,
                      SolverConfig cfg = {}) {
        cfg.keep_flux_history = true;
        cfg.on_step = nullptr;
        space_ = std::make_shared<MixedSpace>(build_space(refine_uniform(coarse.m()), coarse.order));
        grid_ = build_graded_grid(2 * grid.N, grid.gamma, grid.T);
        const KernelTable k(grid_, alpha);
        hist_ = run(p, *space_, grid_, k, cfg);
    }

    const MixedSpace& space() const { return *space_; }
    const GradedTimeGrid& grid() const { return grid_; }
    const StateHistory& history() const { return hist_; }

    struct Bracket {
        int k = 0;
        double w0 = 1.0, w1 = 0.0;  // weights of fine steps k and k+1
    };

    Bracket bracket(double t) const {
        if (t < -1e-14 || t > grid_.T * (1.0 + 1e-14)) throw DomainError("reference: time outside [0, T]");
        const auto& ts = grid_.times;
        auto it = std::upper_bound(ts.begin(), ts.end(), t);
        int k = static_cast<int>(it - ts.begin()) - 1;
        k = std::clamp(k, 0, grid_.N - 1);
        const double a = (t - ts[k]) / (ts[k + 1] - ts[k]);
        Bracket b{k, 1.0 - a, a};
        if (b.w1 == 0.0 || std::fabs(b.w1) < 1e-14) b = {k, 1.0, 0.0};
        return b;
    }

    Vec pressure_at(double t) const {
        const Bracket b = bracket(t);
        if (b.w1 == 0.0) return hist_.pressure_states[b.k];
        return b.w0 * hist_.pressure_states[b.k] + b.w1 * hist_.pressure_states[b.k + 1];
    }

    Vec flux_at(double t) const {
        const Bracket b = bracket(t);
        if (b.w1 == 0.0) return hist_.flux_states[b.k];
        return b.w0 * hist_.flux_states[b.k] + b.w1 * hist_.flux_states[b.k + 1];
    }

private:
    std::shared_ptr<MixedSpace> space_;
    GradedTimeGrid grid_;
    StateHistory hist_;
};

inline TargetFactory reference_target(std::shared_ptr<const ReferenceSolution> ref) {
    return [ref](const std::vector<Vec2>& pts) {
        auto pb = std::make_shared<PointBasis>(ref->space(), pts, locate_all(ref->space().m(), pts));
        Target t;
        t.u = [ref, pb](double time, Eigen::VectorXd& out) { pb->pressure(ref->space(), ref->pressure_at(time), out); };
        t.sigma = [ref, pb](double time, Eigen::Matrix2Xd& out) { pb->flux(ref->space(), ref->flux_at(time), out); };
        return t;
    };
}

/// Mesh vertices plus `extra` uniform points in the bounding box.
inline std::vector<Vec2> max_norm_points(const TriMesh& m, int extra = 500, unsigned seed = 12345) {
    std::vector<Vec2> pts = m.vertices;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(m.xmin, m.xmax), uy(m.ymin, m.ymax);
    for (int i = 0; i < extra; ++i) {
        const double x = ux(rng);
        pts.emplace_back(x, uy(rng));
    }
    return pts;
}

/// Unweighted per-step errors, index n = 1..N (entry 0 unused).
struct StepErrors {
    std::vector<double> t, u, sigma, inf;
};

struct ErrorOptions {
    int quad_degree = -1;  // -1: 2 * order + 4
    int extra_points = 500;
    unsigned seed = 12345;
    bool flux = true;
    bool max_norm = true;
};

inline StepErrors step_errors(const StateHistory& h, const MixedSpace& S, const GradedTimeGrid& grid,
                              const TargetFactory& target, const ErrorOptions& opt = {}) {
    if (h.steps() != grid.N) throw ShapeError("step_errors: history and grid differ");
    const TriangleRule r = triangle_rule(opt.quad_degree >= 0 ? opt.quad_degree : 2 * S.order + 4);
    const int nt = S.num_elements(), nq = r.size();
    std::vector<Vec2> qx(static_cast<std::size_t>(nt) * nq);
    std::vector<int> qe(qx.size());
    Eigen::VectorXd qw(static_cast<Eigen::Index>(qx.size()));
    for (int e = 0; e < nt; ++e)
        for (int k = 0; k < nq; ++k) {
            const std::size_t i = static_cast<std::size_t>(e) * nq + k;
            qx[i] = S.point(e, r.bary[k]);
            qe[i] = e;
            qw(static_cast<Eigen::Index>(i)) = r.w[k] * S.m().area(e);
        }
    const PointBasis qb(S, qx, qe, opt.flux);
    const Target tq = target(qx);

    std::vector<Vec2> mx;
    PointBasis mb;
    Target tm;
    if (opt.max_norm) {
        mx = max_norm_points(S.m(), opt.extra_points, opt.seed);
        mb = PointBasis(S, mx, locate_all(S.m(), mx), false);
        tm = target(mx);
    }

    StepErrors out;
    const auto n1 = static_cast<std::size_t>(grid.N) + 1;
    out.t = grid.times;
    out.u.assign(n1, 0.0);
    out.sigma.assign(n1, 0.0);
    out.inf.assign(n1, 0.0);
    Eigen::VectorXd a, b;
    Eigen::Matrix2Xd fa, fb;
    for (int n = 1; n <= grid.N; ++n) {
        const double t = grid.t(n);
        qb.pressure(S, h.pressure_states[n], a);
        tq.u(t, b);
        out.u[n] = std::sqrt((qw.array() * (a - b).array().square()).sum());
        if (opt.flux) {
            if (static_cast<int>(h.flux_states.size()) <= n) throw InputError("step_errors: flux history not kept");
            qb.flux(S, h.flux_states[n], fa);
            tq.sigma(t, fb);
            out.sigma[n] = std::sqrt((qw.transpose().array() * (fa - fb).colwise().squaredNorm().array()).sum());
        }
        if (opt.max_norm) {
            mb.pressure(S, h.pressure_states[n], a);
            tm.u(t, b);
            out.inf[n] = (a - b).cwiseAbs().maxCoeff();
        }
    }
    return out;
}

/// max_n w(t_n) e_n
inline double weighted_max(const std::vector<double>& t, const std::vector<double>& e, TimeWeight w, double alpha) {
    double m = 0.0;
    for (std::size_t n = 1; n < e.size(); ++n) m = std::max(m, time_weight(w, t[n], alpha) * e[n]);
    return m;
}

inline double l2_error_pressure(const StateHistory& h, const ScalarField& exact_u, const MixedSpace& S,
                                const GradedTimeGrid& grid, TimeWeight w = TimeWeight::None, double alpha = 0.5) {
    ErrorOptions o;
    o.flux = false;
    o.max_norm = false;
    const StepErrors e = step_errors(h, S, grid, exact_target(ExactSolution{exact_u, {}}), o);
    return weighted_max(e.t, e.u, w, alpha);
}

inline double flux_error_weighted(const StateHistory& h, const VectorField& exact_sigma, const MixedSpace& S,
                                  const GradedTimeGrid& grid, TimeWeight w, double alpha) {
    ErrorOptions o;
    o.max_norm = false;
    const StepErrors e =
        step_errors(h, S, grid, exact_target(ExactSolution{[](const Vec2&, double) { return 0.0; }, exact_sigma}), o);
    return weighted_max(e.t, e.sigma, w, alpha);
}

/// Weighted max over steps and over the given points.
inline double max_norm_error(const StateHistory& h, const MixedSpace& S, const GradedTimeGrid& grid,
                             const TargetFactory& target, const std::vector<Vec2>& points, TimeWeight w, double alpha) {
    const PointBasis pb(S, points, locate_all(S.m(), points), false);
    const Target tg = target(points);
    Eigen::VectorXd a, b;
    double m = 0.0;
    for (int n = 1; n <= grid.N; ++n) {
        pb.pressure(S, h.pressure_states[n], a);
        tg.u(grid.t(n), b);
        m = std::max(m, time_weight(w, grid.t(n), alpha) * (a - b).cwiseAbs().maxCoeff());
    }
    return m;
}

// ---------------------------------------------------------------- reports

inline constexpr double no_rate = std::numeric_limits<double>::quiet_NaN();

struct RunReport {
    double alpha = 0.0, gamma = 0.0;
    int N = 0;
    double h = 0.0, dt = 0.0, dt_tilde = 0.0;
    double E_u = 0.0, E_sigma = 0.0, E_inf = 0.0;
    double R_uh = no_rate, R_udt = no_rate, R_sh = no_rate, R_sdt = no_rate, R_ih = no_rate, R_idt = no_rate;
};

/// ln(E1/E2) / ln(m1/m2); NaN when undefined.
inline double rate(double E1, double E2, double m1, double m2) {
    if (!(E1 > 0.0) || !(E2 > 0.0) || !(m1 > 0.0) || !(m2 > 0.0) || m1 == m2) return no_rate;
    return std::log(E1 / E2) / std::log(m1 / m2);
}

inline void rates(const RunReport& prev, RunReport& cur) {
    cur.R_uh = rate(prev.E_u, cur.E_u, prev.h, cur.h);
    cur.R_udt = rate(prev.E_u, cur.E_u, prev.dt, cur.dt);
    cur.R_sh = rate(prev.E_sigma, cur.E_sigma, prev.h, cur.h);
    cur.R_sdt = rate(prev.E_sigma, cur.E_sigma, prev.dt, cur.dt);
    cur.R_ih = rate(prev.E_inf, cur.E_inf, prev.h, cur.h);
    cur.R_idt = rate(prev.E_inf, cur.E_inf, prev.dt, cur.dt);
}

/// Least-squares slope of ln y against ln x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ShapeError("loglog_slope: need two or more matching points");
    double mx = 0, my = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) return no_rate;
        mx += std::log(x[i]) / n;
        my += std::log(y[i]) / n;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxx > 0.0 ? sxy / sxx : no_rate;
}

enum class Against { H, Dt };

inline double aggregate_slope(const std::vector<RunReport>& rs, double RunReport::*field, Against m) {
    std::vector<double> x, y;
    for (const auto& r : rs) {
        x.push_back(m == Against::H ? r.h : r.dt);
        y.push_back(r.*field);
    }
    return loglog_slope(x, y);
}

inline const char* csv_header() { return "alpha,N,h,dt,dt_tilde,E_u,R_uh,R_udt,E_sigma,R_sh,R_sdt,E_inf,R_ih,R_idt"; }

namespace detail {

inline std::string fmt_sci(double v) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char b[32];
    std::snprintf(b, sizeof b, "%.3e", v);
    return b;
}

inline double parse_num(const std::string& s) {
    if (s == "NA") return no_rate;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw InputError("CSV: bad number '" + s + "'");
    }
    if (pos != s.size()) throw InputError("CSV: bad number '" + s + "'");
    return v;
}

}  // namespace detail

inline void write_csv_row(std::ostream& os, const RunReport& r) {
    using detail::fmt_sci;
    os << fmt_sci(r.alpha) << ',' << r.N << ',' << fmt_sci(r.h) << ',' << fmt_sci(r.dt) << ',' << fmt_sci(r.dt_tilde)
       << ',' << fmt_sci(r.E_u) << ',' << fmt_sci(r.R_uh) << ',' << fmt_sci(r.R_udt) << ',' << fmt_sci(r.E_sigma) << ','
       << fmt_sci(r.R_sh) << ',' << fmt_sci(r.R_sdt) << ',' << fmt_sci(r.E_inf) << ',' << fmt_sci(r.R_ih) << ','
       << fmt_sci(r.R_idt) << '\n';
}

inline void write_csv(std::ostream& os, const std::vector<RunReport>& rs) {
    os << csv_header() << '\n';
    for (const auto& r : rs) write_csv_row(os, r);
}

inline std::vector<RunReport> read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != csv_header()) throw InputError("CSV: missing or unexpected header");
    std::vector<RunReport> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 14) throw InputError("CSV: expected 14 fields, got " + std::to_string(f.size()));
        RunReport r;
        r.alpha = detail::parse_num(f[0]);
        r.N = std::stoi(f[1]);
        double* dst[] = {&r.h, &r.dt, &r.dt_tilde, &r.E_u, &r.R_uh, &r.R_udt, &r.E_sigma, &r.R_sh, &r.R_sdt,
                         &r.E_inf, &r.R_ih, &r.R_idt};
        for (int i = 0; i < 12; ++i) *dst[i] = detail::parse_num(f[2 + i]);
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------- studies

struct StudyOptions {
    int order = 1;
    std::optional<double> gamma;  // empty: (2 - alpha)/alpha + 0.1
    ErrorWeights weights;
    bool weights_from_problem = true;
    SolverConfig solver;
    ErrorOptions errors;
    double epsilon = 0.1, delta = 1.1;
};

struct StudyRun {
    RunReport report;
    StepErrors errors;
    bool step_condition_ok = true;
};

/// One ladder entry: coupled mesh, graded grid, run, errors against exact or fine reference.
inline StudyRun study_run(const ProblemSpec& p, double alpha, int N, const StudyOptions& opt) {
    const double gamma = opt.gamma ? *opt.gamma : paper_gamma(alpha);
    const MixedSpace S = build_space(coupled_mesh(p, N, alpha), opt.order);
    const GradedTimeGrid grid = build_graded_grid(N, gamma, p.T);
    const KernelTable k(grid, alpha);
    SolverConfig cfg = opt.solver;
    cfg.epsilon = opt.epsilon;
    cfg.delta = opt.delta;
    cfg.keep_flux_history = true;
    const StepBounds sb = step_condition(p, grid, alpha, opt.epsilon, opt.delta);
    const StateHistory h = run(p, S, grid, k, cfg);

    TargetFactory target;
    if (p.exact) target = exact_target(*p.exact);
    else target = reference_target(std::make_shared<const ReferenceSolution>(p, S, grid, alpha, cfg));

    StudyRun out;
    out.errors = step_errors(h, S, grid, target, opt.errors);
    const ErrorWeights w = opt.weights_from_problem ? ErrorWeights::for_problem(p) : opt.weights;
    RunReport& r = out.report;
    r.alpha = alpha;
    r.gamma = gamma;
    r.N = N;
    r.h = S.m().h;
    r.dt = grid.max_step();
    r.dt_tilde = sb.dt_tilde_tables;
    r.E_u = weighted_max(out.errors.t, out.errors.u, w.u, alpha);
    r.E_sigma = opt.errors.flux ? weighted_max(out.errors.t, out.errors.sigma, w.sigma, alpha) : no_rate;
    r.E_inf = opt.errors.max_norm ? weighted_max(out.errors.t, out.errors.inf, w.inf, alpha) : no_rate;
    out.step_condition_ok = sb.satisfied;
    return out;
}

inline std::vector<RunReport> reports_with_rates(std::vector<RunReport> rs) {
    for (std::size_t i = 1; i < rs.size(); ++i) rates(rs[i - 1], rs[i]);
    return rs;
}

}  // namespace imexl1
