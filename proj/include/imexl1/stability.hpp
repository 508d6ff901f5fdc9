#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fractime.hpp"
#include "gronwall.hpp"
#include "problems.hpp"
#include "solver.hpp"
#include "special.hpp"

namespace imexl1 {

/// Computed norm against the a priori bound, rows n = 1..N.
struct StabilityReport {
    std::string quantity;  // "u" or "sigma"
    std::vector<int> n;
    std::vector<double> t, norm, bound;
    std::vector<bool> pass;

    double epsilon = 0.0, delta = 0.0, C_delta = 0.0;
    double lambda_S = 0.0, Lambda_S = 0.0, Lambda_S_N = 0.0, Lambda_S_inf = 0.0, C_S = 0.0;
    double lambda_F = 0.0, Lambda_F_N = 0.0, Lambda_F_inf = 0.0, C_F = 0.0;
    double beta0 = 0.0, gamma0 = 0.0, L_B = 0.0, C_I = 0.0, C_c = 0.0;
    double max_btilde = 0.0, max_ctilde = 0.0;
    double step_limit = 0.0, max_dt = 0.0;
    bool hypothesis_ok = true;  // false: the bound is advisory

    bool all_pass() const { return std::all_of(pass.begin(), pass.end(), [](bool b) { return b; }); }
    /// max norm/bound over the rows (0 when everything vanishes).
    double worst_ratio() const {
        double r = 0.0;
        for (std::size_t i = 0; i < norm.size(); ++i)
            if (bound[i] > 0.0) r = std::max(r, norm[i] / bound[i]);
            else if (norm[i] > 0.0) r = std::numeric_limits<double>::infinity();
        return r;
    }
};

inline void write_stability_csv(std::ostream& os, const StabilityReport& r) {
    os << "n,t_n,norm,bound,pass\n";
    char buf[128];
    for (std::size_t i = 0; i < r.n.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%d,%.6e,%.6e,%.6e,%d\n", r.n[i], r.t[i], r.norm[i], r.bound[i],
                      r.pass[i] ? 1 : 0);
        os << buf;
    }
}

namespace detail {

// bounds grow past the range of the series; report +inf there
// amplification times data; zero data bounds by zero even when the factor overflows
inline double amplified(double factor, double data) { return data == 0.0 ? 0.0 : factor * data; }

inline double ml_bound(double alpha, double z) {
    try {
        return mittag_leffler(alpha, z);
    } catch (const RangeError&) {
        return std::numeric_limits<double>::infinity();
    }
}

struct StabilityInputs {
    StepBounds sb;
    double C_I = 0.0;
    double mu = 0.0;  // mu_{n_alpha+1}, 0 if that step does not exist
    bool late = false;
};

inline StabilityInputs stability_inputs(const ProblemSpec& p, const KernelTable& k, double epsilon, double delta) {
    StabilityInputs s;
    s.sb = step_condition(p, k.grid(), k.alpha(), epsilon, delta);
    s.C_I = p.has_integral() ? integral_operator_bound(p) : 0.0;
    s.late = k.n_alpha() < k.N();
    if (s.late) s.mu = k.grid().mu(k.n_alpha() + 1);
    return s;
}

// max_{1<=j<=n} sum_{i<=j} P^{j,i} |Ef^i|, running over n
inline std::vector<double> running_p_sum(const KernelTable& k, const std::vector<double>& ef) {
    std::vector<double> out(static_cast<std::size_t>(k.N()) + 1, 0.0);
    double m = 0.0;
    for (int j = 1; j <= k.N(); ++j) {
        double s = 0.0;
        for (int i = 1; i <= j; ++i) s += k.P(j, i) * ef[i];
        m = std::max(m, s);
        out[j] = m;
    }
    return out;
}

inline void check_history(const StateHistory& h, const KernelTable& k) {
    if (h.steps() != k.N() || h.norm_u.size() != h.pressure_states.size() || h.norm_Ef.size() != h.pressure_states.size())
        throw ShapeError("stability: history does not cover the kernel table's N steps");
}

inline void fill_rows(StabilityReport& r, const KernelTable& k, const std::vector<double>& norms,
                      const std::vector<double>& bound) {
    for (int n = 1; n <= k.N(); ++n) {
        r.n.push_back(n);
        r.t.push_back(k.grid().t(n));
        r.norm.push_back(norms[n]);
        r.bound.push_back(bound[n]);
        r.pass.push_back(norms[n] <= bound[n]);
    }
}

inline double lambda_S_total(const StabilityInputs& in, double lambda, double epsilon) {
    const double tail = std::fabs(lambda) * in.C_I * in.C_I / epsilon;
    if (!in.late) return in.sb.lambda_S + tail;
    return in.sb.lambda_S + 2.0 * tail * ((1.0 + in.mu) * (1.0 + in.mu) + in.mu * in.mu);
}

inline void fill_constants(StabilityReport& r, const StabilityInputs& in, const ProblemSpec& p, const KernelTable& k,
                           double epsilon, double delta) {
    r.epsilon = epsilon;
    r.delta = delta;
    r.C_delta = c_delta(delta);
    r.max_btilde = in.sb.max_btilde;
    r.max_ctilde = in.sb.max_ctilde;
    r.beta0 = in.sb.beta0;
    r.gamma0 = in.sb.max_Ainv;
    r.L_B = in.sb.L_B;
    r.C_I = in.C_I;
    r.C_c = in.sb.max_c;
    r.max_dt = in.sb.max_dt;
    r.lambda_S = in.sb.lambda_S;
    r.Lambda_S = lambda_S_total(in, p.lambda, epsilon);
    r.Lambda_S_N = gronwall_Lambda_n(k, r.Lambda_S).back();
    r.Lambda_S_inf = gronwall_Lambda_mu_bound(k, r.Lambda_S);
    r.C_S = 2.0 * r.C_delta;
    r.lambda_F = in.sb.lambda_F;
    r.Lambda_F_N = gronwall_Lambda_n(k, r.lambda_F).back();
    r.Lambda_F_inf = gronwall_Lambda_mu_bound(k, r.lambda_F);
}

}  // namespace detail

/// ||u_h^n|| <= C_S E_alpha(C_delta Lambda^S_inf t_n^alpha) (||u^0|| + max_j sum_i P^{j,i} ||Ef^i||).
inline StabilityReport stability_bound_u(const StateHistory& h, const ProblemSpec& p, const KernelTable& k,
                                         double epsilon = 0.1, double delta = 1.1) {
    detail::check_history(h, k);
    const auto in = detail::stability_inputs(p, k, epsilon, delta);
    StabilityReport r;
    r.quantity = "u";
    detail::fill_constants(r, in, p, k, epsilon, delta);
    r.step_limit = in.sb.dt_u;
    r.hypothesis_ok = r.max_dt <= r.step_limit;

    const double a = k.alpha();
    const auto ps = detail::running_p_sum(k, h.norm_Ef);
    std::vector<double> bound(ps.size(), 0.0);
    for (int n = 1; n <= k.N(); ++n)
        bound[n] = detail::amplified(r.C_S * detail::ml_bound(a, r.C_delta * r.Lambda_S_inf * std::pow(k.grid().t(n), a)),
                                     h.norm_u[0] + ps[n]);
    detail::fill_rows(r, k, h.norm_u, bound);
    return r;
}

/// ||sigma_h^n|| <= C_F E_alpha(C_delta Lambda^F_inf t_n^alpha)
///                  (||sigma^0|| + ||u^0|| + max_j (||Ef^j|| + sum_i P^{j,i} ||Ef^i||)).
inline StabilityReport stability_bound_flux(const StateHistory& h, const ProblemSpec& p, const KernelTable& k,
                                            double epsilon = 0.1, double delta = 1.1) {
    detail::check_history(h, k);
    if (h.norm_sigma.size() != h.norm_u.size()) throw ShapeError("stability: flux norms missing");
    const auto in = detail::stability_inputs(p, k, epsilon, delta);
    StabilityReport r;
    r.quantity = "sigma";
    detail::fill_constants(r, in, p, k, epsilon, delta);
    r.step_limit = in.sb.dt_flux;
    r.hypothesis_ok = r.max_dt <= r.step_limit;

    const double a = k.alpha();
    const double Ta = std::pow(p.T, a);
    const double root = std::sqrt(2.0 * Ta * (1.0 + epsilon) / (2.0 * epsilon));
    // the u-bound enters through max_j ||u^j||, so C_S (not C_delta) multiplies it
    const double via_u = r.C_S * detail::ml_bound(a, r.C_delta * r.Lambda_S_inf * Ta) * root *
                         (r.C_c + r.C_I * std::fabs(p.lambda) * (1.0 + 2.0 * in.mu));
    r.C_F = r.C_delta / std::sqrt(r.beta0) * std::max({1.0, std::sqrt(r.gamma0), root, via_u});

    const auto ps = detail::running_p_sum(k, h.norm_Ef);
    std::vector<double> bound(ps.size(), 0.0);
    double m = 0.0;
    for (int n = 1; n <= k.N(); ++n) {
        double s = 0.0;
        for (int i = 1; i <= n; ++i) s += k.P(n, i) * h.norm_Ef[i];
        m = std::max(m, h.norm_Ef[n] + s);
        bound[n] = detail::amplified(r.C_F * detail::ml_bound(a, r.C_delta * r.Lambda_F_inf * std::pow(k.grid().t(n), a)),
                                     h.norm_sigma[0] + h.norm_u[0] + m);
    }
    detail::fill_rows(r, k, h.norm_sigma, bound);
    return r;
}

}  // namespace imexl1
